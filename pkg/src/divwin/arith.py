"""Per-integer arithmetic: factorizations, restricted prime statistics,
window divisors, and the divisor-pair decomposition.

Prime-count statistics follow the usual conventions: omega counts distinct
primes, big_omega counts with multiplicity, and the barred variant
bar_omega excludes the prime 2.  Restriction to a real interval (t, u]
uses a strict lower and inclusive upper bound; primes are exact integers,
so no tolerance enters the comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError


@dataclass(frozen=True)
class Factorization:
    """Prime-power decomposition of a positive integer.

    factors is ordered by strictly increasing prime; n = 1 has an empty
    list.  Smallest/largest prime factor use the sentinels inf and 1 for
    n = 1 so accidental comparisons cannot pass.
    """

    n: int
    factors: tuple[tuple[int, int], ...]

    @property
    def p_minus(self) -> float:
        return self.factors[0][0] if self.factors else math.inf

    @property
    def p_plus(self) -> int:
        return self.factors[-1][0] if self.factors else 1

    def square_part_root(self) -> int:
        """Largest integer s with s*s dividing n."""
        s = 1
        for p, e in self.factors:
            s *= p ** (e // 2)
        return s


def _prime_in_range(lo: int, hi: int, prime_table: Sequence[int]) -> bool:
    """Any prime q with lo < q <= hi?  Certified by trial division over the table."""
    for q in range(max(lo + 1, 2), hi + 1):
        for p in prime_table:
            if p * p > q:
                return True
            if q % p == 0:
                break
        else:
            return True
    return False


def factorize(n: int, prime_table: Sequence[int]) -> Factorization:
    """Factor n by trial division over a prime table covering sqrt(n).

    The table must contain every prime up to sqrt(n); the at most one
    cofactor exceeding the table square is then necessarily prime and is
    recorded without a primality proof.
    """
    if n < 1:
        raise DomainError(f"factorize needs a positive integer, got {n}")
    if n == 1:
        return Factorization(1, ())
    root = math.isqrt(n)
    last = int(prime_table[-1]) if len(prime_table) else 1
    if last < root:
        # incomplete only if a prime is actually missing below sqrt(n); gaps
        # this wide do not occur for any reachable root, so scan is tiny
        if root - last > 300 or _prime_in_range(last, root, prime_table):
            raise DomainError(
                f"prime table ends at {last}, need coverage up to {root}"
            )
    factors = []
    rem = n
    for p in prime_table:
        if p * p > rem:
            break
        if rem % p == 0:
            e = 0
            while rem % p == 0:
                rem //= p
                e += 1
            factors.append((int(p), e))
    if rem > 1:
        factors.append((int(rem), 1))
    return Factorization(n, tuple(factors))


def big_omega_in(f: Factorization, t: float, u: float) -> int:
    """Multiplicity count of primes p of n with t < p <= u."""
    return sum(e for p, e in f.factors if t < p <= u)


def omega_in(f: Factorization, t: float, u: float) -> int:
    """Distinct-prime count of n restricted to t < p <= u."""
    return sum(1 for p, _ in f.factors if t < p <= u)


def bar_omega(f: Factorization, t: float) -> int:
    """Multiplicities of the odd primes of n up to t; bar_omega(f, n) covers all of n."""
    return big_omega_in(f, 2.0, t)


def bar_omega_in(f: Factorization, t: float, u: float) -> int:
    """Multiplicities of odd primes in (t, u]; the lower bound never drops below 2."""
    return big_omega_in(f, max(t, 2.0), u)


def divisors(f: Factorization) -> list[int]:
    """All divisors of n, unsorted."""
    divs = [1]
    for p, e in f.factors:
        pk = 1
        extended = []
        for _ in range(e):
            pk *= p
            extended.extend(d * pk for d in divs)
        divs.extend(extended)
    return divs


def divisors_in_window(f: Factorization, y: float, z: float) -> list[int]:
    """Ascending divisors d of n with y < d <= z; empty windows give []."""
    if not y < z:
        raise DomainError(f"need y < z, got y={y}, z={z}")
    return sorted(d for d in divisors(f) if y < d <= z)


def in_p_star(f: Factorization, u: float, v: float) -> bool:
    """True iff n is squarefree with every prime factor in (u, v]; 1 qualifies."""
    if not u < v:
        raise DomainError(f"need u < v, got u={u}, v={v}")
    return all(e == 1 and u < p <= v for p, e in f.factors)


@dataclass
class PairParts:
    """Multiplicative anatomy of one ordered divisor pair d1 < d2 of n.

    v is the gcd, f1 and f2 the coprime complements, and u the cofactor
    n / (v*f1*f2); the product v*f1*f2 is lcm(d1, d2), so u is an exact
    integer.  The prime statistics F1, F2, V, U are filled on demand.
    """

    n: int
    d1: int
    d2: int
    v: int
    f1: int
    f2: int
    u: int
    stat_f1: int | None = field(default=None)
    stat_f2: int | None = field(default=None)
    stat_v: int | None = field(default=None)
    stat_u: int | None = field(default=None)

    def fill_stats(self, prime_table: Sequence[int], z: float) -> None:
        """Populate the barred multiplicity stats of f1, f2, v and of u up to z."""
        self.stat_f1 = bar_omega(factorize(self.f1, prime_table), self.f1)
        self.stat_f2 = bar_omega(factorize(self.f2, prime_table), self.f2)
        self.stat_v = bar_omega(factorize(self.v, prime_table), self.v)
        self.stat_u = bar_omega(factorize(self.u, prime_table), z)


def pair_decompose(n: int, d1: int, d2: int) -> PairParts:
    """Split n along the divisor pair d1 < d2 into u, v, f1, f2."""
    if not (0 < d1 < d2):
        raise DomainError(f"need 0 < d1 < d2, got d1={d1}, d2={d2}")
    if n % d1 != 0 or n % d2 != 0:
        raise DomainError(f"{d1} and {d2} must both divide {n}")
    v = math.gcd(d1, d2)
    f1 = d1 // v
    f2 = d2 // v
    lcm = v * f1 * f2
    u, rem = divmod(n, lcm)
    if rem:  # lcm(d1, d2) divides n, so this cannot happen
        raise DomainError(f"lcm {lcm} does not divide {n}")
    return PairParts(n=n, d1=d1, d2=d2, v=v, f1=f1, f2=f2, u=u)
