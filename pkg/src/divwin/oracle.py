"""Brute-force reference implementations and truncated lemma probes.

Everything here favors obviousness over speed and shares no code with the
segmented engine, so the two sides can check each other.  The probes
report an empirical constant (the smallest one making the bounded-sum
inequality hold for the truncation) rather than asserting any particular
absolute constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .sieve import TauHistogram, build_prime_table

HISTOGRAM_GUARD = 10**6
SCAN_GUARD = 10**7


def tau_naive(n: int, y: float, z: float) -> int:
    """Window divisor count by trial division up to sqrt(n), pairing d with n/d."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    count = 0
    d = 1
    while d * d < n:
        if n % d == 0:
            if y < d <= z:
                count += 1
            q = n // d
            if y < q <= z:
                count += 1
        d += 1
    if d * d == n and y < d <= z:
        count += 1
    return count


def histogram_naive(x: int, y: float, z: float, r_max: int = 64) -> TauHistogram:
    """Histogram built by calling tau_naive on every n <= x (guarded at 1e6)."""
    if x < 1:
        raise DomainError(f"x must be positive, got {x}")
    if x > HISTOGRAM_GUARD:
        raise DomainError(f"refusing x = {x} > {HISTOGRAM_GUARD}; use the segmented engine")
    counts = [0] * (r_max + 1)
    overflow = 0
    max_tau = 0
    moment = 0
    for n in range(1, x + 1):
        t = tau_naive(n, y, z)
        moment += t
        if t > max_tau:
            max_tau = t
        if t <= r_max:
            counts[t] += 1
        else:
            overflow += 1
    return TauHistogram(
        r_max=r_max,
        counts=tuple(counts),
        overflow=overflow,
        max_tau=max_tau,
        total=x,
        moment=moment,
    )


@dataclass(frozen=True)
class ProbeResult:
    """Outcome of one truncated bounded-sum probe.

    value is the truncated sum (or count); rhs_reference is the bound's
    right side evaluated with the supplied constant; c_hat is the smallest
    constant making the inequality hold at this truncation.
    """

    value: float
    limit: int
    rhs_reference: float
    c_hat: float


def _iter_restricted(primes: list[int], k: int, limit: int):
    """Yield m <= limit built from exactly k of the given primes (any powers >= 1)."""

    def rec(start: int, left: int, prod: int):
        if left == 0:
            yield prod
            return
        for i in range(start, len(primes)):
            p = primes[i]
            value = prod * p
            while value <= limit:
                yield from rec(i + 1, left - 1, value)
                value *= p

    yield from rec(0, k, 1)


def probe_lemma1(u: float, v: float, k: int, alpha: float, limit: int) -> ProbeResult:
    """Truncated sum of 1/m^(1-alpha) over m <= limit with all prime factors
    in (u, v] and exactly k distinct primes.

    c_hat is the least C >= 0 with sum <= (loglog v - loglog u + C)^k / k!.
    """
    if not 1.5 <= u < v:
        raise DomainError(f"need 1.5 <= u < v, got u={u}, v={v}")
    if not 0.0 <= alpha <= 1.0 / math.log(v):
        raise DomainError(f"alpha must lie in [0, 1/log v], got {alpha}")
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    if limit < 1:
        raise DomainError(f"limit must be at least 1, got {limit}")

    primes = [int(p) for p in build_prime_table(int(min(v, limit))) if u < p <= v]
    total = math.fsum(m ** (alpha - 1.0) for m in _iter_restricted(primes, k, limit))

    delta = math.log(math.log(v)) - math.log(math.log(u))
    if k == 0:
        c_hat = 0.0
    else:
        c_hat = max(0.0, (total * math.factorial(k)) ** (1.0 / k) - delta)
    rhs = (delta + c_hat) ** k / math.factorial(k)
    return ProbeResult(value=total, limit=limit, rhs_reference=rhs, c_hat=c_hat)


def probe_lemma2(u: float, k: int, alpha: float, limit: int) -> ProbeResult:
    """Truncated sum of 1/m^(1-alpha) over m <= limit whose largest prime
    factor is at most u and whose odd-prime multiplicity count equals k.

    The reference is (loglog u)^k / k!; c_hat is the sum divided by it.
    """
    if u < 10:
        raise DomainError(f"need u >= 10, got {u}")
    l2u = math.log(math.log(u))
    if not 0 <= k <= 2.9 * l2u:
        raise DomainError(f"k must lie in [0, 2.9*loglog u] = [0, {2.9 * l2u:.4g}], got {k}")
    if not 0.0 <= alpha <= 1.0 / (100.0 * math.log(u)):
        raise DomainError(f"alpha must lie in [0, 1/(100 log u)], got {alpha}")
    if limit < 1:
        raise DomainError(f"limit must be at least 1, got {limit}")

    odd_primes = [int(p) for p in build_prime_table(int(min(u, limit))) if p > 2]
    terms = []

    def odd_parts(start: int, left: int, prod: int):
        # exactly `left` more odd prime factors counted with multiplicity
        if left == 0:
            yield prod
            return
        for i in range(start, len(odd_primes)):
            p = odd_primes[i]
            if prod * p > limit:
                break
            yield from odd_parts(i, left - 1, prod * p)

    for m_odd in odd_parts(0, k, 1):
        m = m_odd
        while m <= limit:
            terms.append(m ** (alpha - 1.0))
            m *= 2
    total = math.fsum(terms)

    reference = l2u**k / math.factorial(k)
    return ProbeResult(
        value=total, limit=limit, rhs_reference=reference, c_hat=total / reference
    )


def probe_lemma3(x: int, big_y: float, w: float, z: float, a: int, b: int) -> int:
    """Exact count of integers n in (x - Y, x] whose odd-prime multiplicity
    up to w equals a and whose prime factors in (w, z] are exactly b distinct
    primes, each to the first power.
    """
    if not w <= z <= x:
        raise DomainError(f"need w <= z <= x, got w={w}, z={z}, x={x}")
    if big_y > x:
        raise DomainError(f"need Y <= x, got Y={big_y}")
    if x > SCAN_GUARD:
        raise DomainError(f"refusing x = {x} > {SCAN_GUARD} for an exhaustive scan")
    if a < 0 or b < 0:
        raise DomainError("a and b must be nonnegative")

    lo = math.floor(x - big_y) + 1
    hi = math.floor(x)
    if hi < lo or hi < 1:
        return 0
    lo = max(lo, 1)

    primes = [int(p) for p in build_prime_table(math.isqrt(hi))]
    count = 0
    for n in range(lo, hi + 1):
        rem = n
        small = 0  # odd-prime multiplicity up to w
        mid_distinct = 0
        mid_total = 0
        for p in primes:
            if p * p > rem:
                break
            if rem % p == 0:
                e = 0
                while rem % p == 0:
                    rem //= p
                    e += 1
                if 2 < p <= w:
                    small += e
                elif w < p <= z:
                    mid_distinct += 1
                    mid_total += e
        if rem > 1:
            if 2 < rem <= w:
                small += 1
            elif w < rem <= z:
                mid_distinct += 1
                mid_total += 1
        if small == a and mid_distinct == b and mid_total == b:
            count += 1
    return count
