"""Partition of the multi-divisor integers into the six census classes.

Every n <= x with at least two window divisors receives exactly one label:

  N0  small n (<= x / log z) or a square divisor d*d | n with d > log z;
  N1  odd-prime multiplicity k up to z outside the admissible band (k0, K];
  N2  some level h in [1, h_max] at which n has unusually few prime
      factors between z_h and z (at most 1.9*h - b/100, with b = K - k);
  N3 / N4 / N5  by the divisor-pair anatomy: with u, f2 from the pair
      decomposition, N3 if some pair has min(u, f2) at or below the small
      threshold Z, otherwise N4 if some pair has min(u, f2) above z^(1/10),
      otherwise N5.

The pair classes are also censused pair by pair, since both the n-level
and the pair-level view are informative; N5 pairs carry the ladder index j
with z_(j+2) < min(u, f2) <= z_(j+1) and a sub-bucket telling whether u or
f2 realized the minimum side.
"""

from __future__ import annotations

import functools
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import arith
from .errors import ConsistencyError, DomainError
from .params import DerivedParams, Window, nudged_floor, z_sub_h
from .sieve import build_prime_table, window_tau_counts, worker_init

CLASS_LABELS = ("N0", "N1", "N2", "N3", "N4", "N5")


@dataclass(frozen=True)
class ClassContext:
    """All thresholds the classifier needs, derived from (win, dp) only."""

    win: Window
    dp: DerivedParams
    x_over_log_z: float
    cap_k: int
    k0: float
    h_max: int
    big_z: float
    z_tenth: float
    z_ladder: tuple[float, ...]

    @classmethod
    def from_params(cls, win: Window, dp: DerivedParams) -> "ClassContext":
        h_max = nudged_floor(5.0 * dp.eps * dp.log2_z)
        return cls(
            win=win,
            dp=dp,
            x_over_log_z=win.x / dp.log_z,
            cap_k=dp.cap_k,
            k0=dp.k0,
            h_max=h_max,
            big_z=dp.z_threshold,
            z_tenth=math.exp(0.1 * dp.log_z),
            z_ladder=tuple(z_sub_h(win.z, h) for h in range(h_max + 5)),
        )

    def b_of(self, k: int) -> int:
        """Multiplicity deficit K - k; meaningful once k lies in (k0, K]."""
        return self.cap_k - k

    def j_bound(self) -> float:
        return 5.0 * self.dp.eps * self.dp.log2_z

    def ladder(self, h: int) -> float:
        if h < len(self.z_ladder):
            return self.z_ladder[h]
        return z_sub_h(self.win.z, h)


@dataclass(frozen=True)
class PairBucket:
    bucket: str
    j: int | None
    sub: str | None


@dataclass
class ClassCounts:
    """Class sizes plus the pair-level census; merge is componentwise."""

    n0: int = 0
    n1: int = 0
    n2: int = 0
    n3: int = 0
    n4: int = 0
    n5: int = 0
    total: int = 0
    n2_by_h: dict[int, int] = field(default_factory=dict)
    pair_buckets: dict[tuple[str, int | None], int] = field(default_factory=dict)

    def add_label(self, label: str) -> None:
        setattr(self, label.lower(), getattr(self, label.lower()) + 1)

    def class_sum(self) -> int:
        return self.n0 + self.n1 + self.n2 + self.n3 + self.n4 + self.n5

    def as_dict(self) -> dict[str, int]:
        return {lab: getattr(self, lab.lower()) for lab in CLASS_LABELS}

    def merge(self, other: "ClassCounts") -> "ClassCounts":
        merged = ClassCounts(
            n0=self.n0 + other.n0,
            n1=self.n1 + other.n1,
            n2=self.n2 + other.n2,
            n3=self.n3 + other.n3,
            n4=self.n4 + other.n4,
            n5=self.n5 + other.n5,
            total=self.total + other.total,
            n2_by_h=dict(self.n2_by_h),
            pair_buckets=dict(self.pair_buckets),
        )
        for h, c in other.n2_by_h.items():
            merged.n2_by_h[h] = merged.n2_by_h.get(h, 0) + c
        for key, c in other.pair_buckets.items():
            merged.pair_buckets[key] = merged.pair_buckets.get(key, 0) + c
        return merged

    def csv_lines(self) -> list[str]:
        lines = ["class,count"]
        lines.extend(f"{lab},{getattr(self, lab.lower())}" for lab in CLASS_LABELS)
        lines.append("pair_bucket,j,count")
        for (bucket, j), c in sorted(self.pair_buckets.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
            lines.append(f"{bucket},{'' if j is None else j},{c}")
        return lines


def _find_j(m: int, ctx: ClassContext) -> int:
    """Ladder index j with z_(j+2) < m <= z_(j+1)."""
    j = nudged_floor(math.log(ctx.dp.log_z / math.log(m))) - 1
    # float rounding can land one rung off; walk to the defining bracket
    while j > -1 and m > ctx.ladder(j + 1):
        j -= 1
    while not (ctx.ladder(j + 2) < m <= ctx.ladder(j + 1)):
        j += 1
        if j > ctx.j_bound() + 4:
            raise ConsistencyError(f"no ladder bracket found for pair minimum {m}")
    return j


def pair_bucket(pp: arith.PairParts, ctx: ClassContext) -> PairBucket:
    """Bucket one divisor pair by min(u, f2) against (Z, z^(1/10)]."""
    m = min(pp.u, pp.f2)
    if m <= ctx.big_z:
        return PairBucket("N3", None, None)
    if m > ctx.z_tenth:
        return PairBucket("N4", None, None)
    j = _find_j(m, ctx)
    if not 1 <= j <= ctx.j_bound() + 1e-9:
        raise ConsistencyError(
            f"ladder index {j} outside [1, {ctx.j_bound():.4g}] for pair minimum {m}"
        )
    sub = "N5_1" if pp.u <= ctx.ladder(j + 1) else "N5_2"
    return PairBucket("N5", j, sub)


def _pair_label(mins: list[int], ctx: ClassContext) -> str:
    if any(m <= ctx.big_z for m in mins):
        return "N3"
    if any(m > ctx.z_tenth for m in mins):
        return "N4"
    return "N5"


def classify(n: int, f: arith.Factorization, ctx: ClassContext) -> str:
    """Label one integer with at least two window divisors.

    Classes are tested in order N0, N1, N2 (any admissible level h), then
    the pair rule, so exactly one label results.  The label does not depend
    on the order in which divisor pairs are enumerated: the pair rule only
    looks at which thresholds the set of pair minima crosses.
    """
    win, dp = ctx.win, ctx.dp
    divs = arith.divisors_in_window(f, win.y, win.z)
    if len(divs) < 2:
        raise DomainError(f"classify needs at least two window divisors, n={n} has {len(divs)}")

    if n <= ctx.x_over_log_z or f.square_part_root() > dp.log_z:
        return "N0"
    k = arith.bar_omega(f, win.z)
    if not ctx.k0 < k <= ctx.cap_k:
        return "N1"
    b = ctx.b_of(k)
    for h in range(1, ctx.h_max + 1):
        if arith.bar_omega_in(f, ctx.ladder(h), win.z) <= 1.9 * h - 0.01 * b:
            return "N2"
    mins = []
    for i in range(len(divs)):
        for j in range(i + 1, len(divs)):
            pp = arith.pair_decompose(n, divs[i], divs[j])
            mins.append(min(pp.u, pp.f2))
    return _pair_label(mins, ctx)


@functools.lru_cache(maxsize=4)
def _cached_primes(limit: int) -> np.ndarray:
    return build_prime_table(limit)


def _factor_stats(values: np.ndarray, ctx: ClassContext, primes: np.ndarray):
    """Vectorized factor statistics for a batch of integers.

    Returns (k, sq, bar_depth, omega_depth): odd-prime multiplicity up to z,
    square-part root, and per-ladder-depth multiplicity / distinct counts
    (depth d = deepest rung z_d at or above the prime; only needed when the
    level range [1, h_max] is nonempty).
    """
    z = ctx.win.z
    h_max = ctx.h_max
    q = len(values)
    rem = values.copy()
    sq = np.ones(q, dtype=np.int64)
    bar_depth = np.zeros((h_max + 1, q), dtype=np.int32)
    omega_depth = np.zeros((h_max + 1, q), dtype=np.int32) if h_max >= 1 else None

    # deepest rung h <= h_max with p <= z_h; -1 for primes beyond z
    rungs = np.array(ctx.z_ladder[: h_max + 1])
    depth_of = np.full(len(primes), -1, dtype=np.int32)
    below = primes <= z
    depth_of[below] = (primes[below, None] <= rungs[None, :]).sum(axis=1) - 1

    for i, p in enumerate(primes):
        p = int(p)
        hits = np.flatnonzero(rem % p == 0)
        if hits.size == 0:
            continue
        r = rem[hits] // p
        mult = np.ones(hits.size, dtype=np.int32)
        sub = np.flatnonzero(r % p == 0)
        while sub.size:
            r[sub] //= p
            mult[sub] += 1
            sub = sub[r[sub] % p == 0]
        rem[hits] = r
        repeated = mult > 1
        if repeated.any():
            sq[hits[repeated]] *= p ** (mult[repeated] // 2)
        d = int(depth_of[i])
        if d >= 0:
            if p > 2:
                bar_depth[d, hits] += mult
            if omega_depth is not None:
                omega_depth[d, hits] += 1

    # a cofactor above the table square is prime (and odd, exceeding 2)
    left = np.flatnonzero((rem > 1) & (rem <= z))
    if left.size:
        left_depth = (rem[left, None] <= rungs[None, :]).sum(axis=1) - 1
        np.add.at(bar_depth, (left_depth, left), 1)
        if omega_depth is not None:
            np.add.at(omega_depth, (left_depth, left), 1)

    return bar_depth.sum(axis=0), sq, bar_depth, omega_depth


def _segment_census(lo: int, hi: int, ctx: ClassContext) -> ClassCounts:
    win, dp = ctx.win, ctx.dp
    counts = window_tau_counts(lo, hi, win.d_lo, win.d_hi)
    qual = np.flatnonzero(counts >= 2)
    out = ClassCounts(total=int(qual.size))
    if qual.size == 0:
        return out

    values = (qual + lo).astype(np.int64)
    primes = _cached_primes(math.isqrt(win.x))
    k_arr, sq_arr, bar_depth, omega_depth = _factor_stats(values, ctx, primes)

    is_n0 = (values <= ctx.x_over_log_z) | (sq_arr > dp.log_z)
    h_max = ctx.h_max
    bar_cum = None
    if h_max >= 1:
        # row h-1 holds the multiplicity / distinct count of primes in (z_h, z]
        bar_cum = np.cumsum(bar_depth, axis=0)
        omega_cum = np.cumsum(omega_depth, axis=0)
        live = ~is_n0
        if not np.array_equal(bar_cum[:h_max, live], omega_cum[:h_max, live]):
            bad = np.argwhere(bar_cum[:h_max, live] != omega_cum[:h_max, live])[0]
            n_bad = int(values[live][bad[1]])
            raise ConsistencyError(
                f"n={n_bad}: level-{bad[0] + 1} multiplicity differs from distinct count"
            )

    is_n1 = ~is_n0 & ~((k_arr > ctx.k0) & (k_arr <= ctx.cap_k))
    is_n2 = np.zeros(values.size, dtype=bool)
    if h_max >= 1:
        b_arr = ctx.cap_k - k_arr
        eligible = ~is_n0 & ~is_n1
        for h in range(1, h_max + 1):
            cond = eligible & ~is_n2 & (bar_cum[h - 1] <= 1.9 * h - 0.01 * b_arr)
            if cond.any():
                if np.any(b_arr[cond] > 190 * h):
                    raise ConsistencyError(f"level {h} below the deficit floor b/190")
                is_n2 |= cond
                out.n2_by_h[h] = out.n2_by_h.get(h, 0) + int(cond.sum())

    out.n0 = int(is_n0.sum())
    out.n1 = int(is_n1.sum())
    out.n2 = int(is_n2.sum())
    survivors = ~(is_n0 | is_n1 | is_n2)
    n_surv = int(survivors.sum())
    if n_surv == 0:
        return out

    # only integers reaching the pair rule need their window divisors
    seg_len = hi - lo
    surv_off = qual[survivors]
    inv = np.full(seg_len, -1, dtype=np.int64)
    inv[surv_off] = np.arange(n_surv)
    keep = np.zeros(seg_len, dtype=bool)
    keep[surv_off] = True
    div_lists: list[list[int]] = [[] for _ in range(n_surv)]
    for d in range(win.d_lo, min(win.d_hi, hi - 1) + 1):
        offs = np.arange(-lo % d, seg_len, d)
        for i in inv[offs[keep[offs]]].tolist():
            div_lists[i].append(d)

    for i, n in enumerate(values[survivors].tolist()):
        divs = div_lists[i]
        mins = []
        for a in range(len(divs)):
            d1 = divs[a]
            for c in range(a + 1, len(divs)):
                d2 = divs[c]
                g = math.gcd(d1, d2)
                f2 = d2 // g
                u = n // (d1 * f2)  # n / lcm(d1, d2)
                m = u if u < f2 else f2
                mins.append(m)
                pb = pair_bucket(arith.PairParts(n, d1, d2, g, d1 // g, f2, u), ctx)
                key = (pb.bucket, pb.j)
                out.pair_buckets[key] = out.pair_buckets.get(key, 0) + 1
                if pb.sub is not None:
                    skey = (pb.sub, pb.j)
                    out.pair_buckets[skey] = out.pair_buckets.get(skey, 0) + 1
        if not mins:  # tau >= 2 guarantees at least one pair
            raise ConsistencyError(f"n={n} reached the pair rule with no divisor pair")
        out.add_label(_pair_label(mins, ctx))
    return out


def _census_task(args: tuple[int, int, ClassContext]) -> ClassCounts:
    lo, hi, ctx = args
    return _segment_census(lo, hi, ctx)


def classify_all(
    win: Window,
    dp: DerivedParams,
    segment_size: int = 1 << 20,
    parallelism: int = 1,
) -> ClassCounts:
    """Census of all n <= x with at least two window divisors.

    Segments are processed independently and merged; the partition
    invariant (every qualifying n labeled exactly once) is enforced on the
    merged result.
    """
    if segment_size < 1:
        raise DomainError(f"segment_size must be positive, got {segment_size}")
    ctx = ClassContext.from_params(win, dp)
    _cached_primes(math.isqrt(win.x))  # warm before forking workers

    bounds = []
    lo = 1
    while lo <= win.x:
        hi = min(lo + segment_size, win.x + 1)
        bounds.append((lo, hi))
        lo = hi

    total = ClassCounts()
    if parallelism <= 1 or len(bounds) <= 1:
        for seg_lo, seg_hi in bounds:
            total = total.merge(_segment_census(seg_lo, seg_hi, ctx))
    else:
        tasks = [(seg_lo, seg_hi, ctx) for seg_lo, seg_hi in bounds]
        mp_ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(
            max_workers=parallelism, mp_context=mp_ctx, initializer=worker_init
        ) as pool:
            for part in pool.map(_census_task, tasks):
                total = total.merge(part)

    if total.class_sum() != total.total:
        raise ConsistencyError(
            f"class sizes sum to {total.class_sum()} but {total.total} integers were labeled"
        )
    return total
