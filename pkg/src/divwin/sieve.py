"""Segmented counting of window divisors over all n <= x.

For every integer d in (y, z] the engine walks the multiples of d inside a
segment and increments that position's counter, so a segment's counter
array ends up holding the exact number of window divisors of each n.  The
total work is about x * log(z/y) counter increments, near-linear in x for
the window widths of interest.

Segments are independent work units; their results merge as a commutative
monoid fold, so the final histogram is identical for any worker count or
segment size.  A checkpoint stores the accumulated state after each
completed segment together with a manifest hash, so a resumed run can only
continue the run it belongs to and reproduces the uninterrupted output
byte for byte.
"""

from __future__ import annotations

import gc
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import multiprocessing

import numpy as np

from .errors import ConfigError, ConsistencyError, DomainError, ManifestMismatchError
from .params import Window

CHECKPOINT_VERSION = 1
MANIFEST_VERSION = 1

# Refuse segments whose counter array would exceed this many bytes.
MAX_SEGMENT_BYTES = 1 << 28


@dataclass(frozen=True)
class SieveConfig:
    r_max: int = 64
    segment_size: int = 1 << 20
    parallelism: int = 1
    checkpoint_path: str | None = None
    eps: float = 0.01

    def __post_init__(self) -> None:
        if self.r_max < 1:
            raise ConfigError(f"r_max must be at least 1, got {self.r_max}")
        if self.segment_size < 1:
            raise ConfigError(f"segment_size must be positive, got {self.segment_size}")
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be positive, got {self.parallelism}")


@dataclass(frozen=True)
class TauHistogram:
    """Exact census of window divisor counts over n <= x.

    counts[r] is the number of n with exactly r window divisors for
    r = 0..r_max; n beyond the cap land in overflow.  moment is the exact
    sum of all window divisor counts, kept independently of the cap.
    """

    r_max: int
    counts: tuple[int, ...]
    overflow: int
    max_tau: int
    total: int
    moment: int

    @property
    def h(self) -> int:
        """Count of n with at least one window divisor."""
        return self.total - self.counts[0]

    @property
    def h2_star(self) -> int:
        """Count of n with at least two window divisors."""
        return self.h - self.counts[1]

    def h_r(self, r: int) -> int:
        """Count of n with exactly r window divisors (r <= r_max)."""
        if not 0 <= r <= self.r_max:
            raise DomainError(f"r must lie in [0, {self.r_max}], got {r}")
        return self.counts[r]

    def csv_lines(self) -> list[str]:
        lines = [f"{r},{c}" for r, c in enumerate(self.counts)]
        lines.append(f"overflow,{self.overflow}")
        return lines


@dataclass(frozen=True)
class SegmentResult:
    """Partial histogram of one segment [lo, hi); merge is componentwise."""

    lo: int
    hi: int
    counts: tuple[int, ...]
    overflow: int
    max_tau: int
    moment: int

    def merge(self, other: "SegmentResult") -> "SegmentResult":
        return SegmentResult(
            lo=min(self.lo, other.lo),
            hi=max(self.hi, other.hi),
            counts=tuple(a + b for a, b in zip(self.counts, other.counts)),
            overflow=self.overflow + other.overflow,
            max_tau=max(self.max_tau, other.max_tau),
            moment=self.moment + other.moment,
        )


def build_prime_table(limit: int) -> np.ndarray:
    """All primes up to limit, ascending (empty below 2)."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def first_moment(x: int, y: float, z: float) -> int:
    """Exact sum over integers d in (y, z] of floor(x/d).

    By exchanging the order of summation this equals the sum over n <= x of
    the window divisor count of n, which is the engine's main cross-check.
    """
    if x < 1:
        raise DomainError(f"x must be positive, got {x}")
    d_lo = math.floor(y) + 1
    d_hi = min(math.floor(z), x)
    return sum(x // d for d in range(d_lo, d_hi + 1))


def _counter_dtype(width: int) -> type:
    # A counter can reach at most the number of integers in the window, so
    # pick the narrowest dtype with headroom instead of saturating adds.
    if width < 250:
        return np.uint8
    if width < 65000:
        return np.uint16
    return np.uint32


def window_tau_counts(lo: int, hi: int, d_lo: int, d_hi: int) -> np.ndarray:
    """Counter array over [lo, hi): entry i = number of window divisors of lo + i."""
    seg_len = hi - lo
    width = max(d_hi - d_lo + 1, 0)
    counts = np.zeros(seg_len, dtype=_counter_dtype(width))
    for d in range(d_lo, min(d_hi, hi - 1) + 1):
        # first multiple of d at or after lo (>= d itself since lo >= 1)
        off = -lo % d
        if off < seg_len:
            counts[off::d] += 1
    return counts


def _bucket(counts: np.ndarray, lo: int, hi: int, r_max: int) -> SegmentResult:
    max_tau = int(counts.max()) if counts.size else 0
    width = max(max_tau + 1, r_max + 1)
    bins = np.zeros(width, dtype=np.int64)
    # chunked bincount: avoids materializing a full int64 copy of the segment
    step = 1 << 17
    for s in range(0, counts.size, step):
        bins += np.bincount(counts[s : s + step], minlength=width)
    overflow = int(bins[r_max + 1 :].sum())
    return SegmentResult(
        lo=lo,
        hi=hi,
        counts=tuple(int(v) for v in bins[: r_max + 1]),
        overflow=overflow,
        max_tau=max_tau,
        moment=int(counts.sum(dtype=np.int64)),
    )


def sieve_segment(lo: int, hi: int, win: Window, r_max: int = 64) -> SegmentResult:
    """Exact per-n window divisor counts over [lo, hi), bucketed at r_max."""
    if not 1 <= lo < hi:
        raise DomainError(f"need 1 <= lo < hi, got [{lo}, {hi})")
    width = max(win.d_hi - win.d_lo + 1, 0)
    item = np.dtype(_counter_dtype(width)).itemsize
    if (hi - lo) * item > MAX_SEGMENT_BYTES:
        raise ConfigError(
            f"segment [{lo}, {hi}) needs {(hi - lo) * item} counter bytes, "
            f"budget is {MAX_SEGMENT_BYTES}"
        )
    counts = window_tau_counts(lo, hi, win.d_lo, win.d_hi)
    return _bucket(counts, lo, hi, r_max)


def _segment_task(args: tuple[int, int, int, float, float, int]) -> SegmentResult:
    lo, hi, x, y, z, r_max = args
    return sieve_segment(lo, hi, Window(x, y, z), r_max)


def worker_init() -> None:
    """Keep forked workers lean: never let gc touch (and copy-on-write
    dirty) the pages inherited from the parent."""
    gc.freeze()
    gc.disable()


def run_manifest(win: Window, cfg: SieveConfig) -> dict:
    return {
        "x": win.x,
        "y": win.y,
        "z": win.z,
        "eps": cfg.eps,
        "r_max": cfg.r_max,
        "segment_size": cfg.segment_size,
        "version": MANIFEST_VERSION,
    }


def manifest_hash(manifest: dict) -> str:
    canonical = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class Checkpoint:
    """Resumable accumulated state after a contiguous prefix of segments."""

    manifest_hash: str
    segments_done: int
    counts: tuple[int, ...]
    overflow: int
    max_tau: int
    moment: int

    def save(self, path: str) -> None:
        payload = {
            "version": CHECKPOINT_VERSION,
            "manifest_hash": self.manifest_hash,
            "segments_done": self.segments_done,
            "counts": list(self.counts),
            "overflow": self.overflow,
            "max_tau": self.max_tau,
            "moment": self.moment,
        }
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "Checkpoint":
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ManifestMismatchError(
                f"checkpoint version {payload.get('version')} unsupported"
            )
        return cls(
            manifest_hash=payload["manifest_hash"],
            segments_done=payload["segments_done"],
            counts=tuple(payload["counts"]),
            overflow=payload["overflow"],
            max_tau=payload["max_tau"],
            moment=payload["moment"],
        )


def _segment_bounds(x: int, segment_size: int) -> list[tuple[int, int]]:
    bounds = []
    lo = 1
    while lo <= x:
        hi = min(lo + segment_size, x + 1)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def run(win: Window, cfg: SieveConfig = SieveConfig()) -> TauHistogram:
    """Full histogram of window divisor counts for n <= x.

    Deterministic: the result is independent of parallelism and
    segmentation.  When no counter overflowed the cap, the histogram moment
    is cross-checked against the exact divisor sum and any mismatch aborts
    the run rather than reporting silently.  A segment_size of at least the
    window width keeps every divisor's inner walk inside one counter array.
    """
    item = np.dtype(_counter_dtype(max(win.d_hi - win.d_lo + 1, 0))).itemsize
    if cfg.segment_size * item > MAX_SEGMENT_BYTES:
        raise ConfigError(
            f"segment_size {cfg.segment_size} exceeds the {MAX_SEGMENT_BYTES} byte budget"
        )

    mhash = manifest_hash(run_manifest(win, cfg))
    bounds = _segment_bounds(win.x, cfg.segment_size)
    acc = SegmentResult(
        lo=1, hi=1, counts=(0,) * (cfg.r_max + 1), overflow=0, max_tau=0, moment=0
    )
    start = 0

    if cfg.checkpoint_path and os.path.exists(cfg.checkpoint_path):
        ck = Checkpoint.load(cfg.checkpoint_path)
        if ck.manifest_hash != mhash:
            raise ManifestMismatchError(
                f"checkpoint at {cfg.checkpoint_path} belongs to manifest "
                f"{ck.manifest_hash[:12]}, current run is {mhash[:12]}"
            )
        start = ck.segments_done
        acc = replace(
            acc,
            hi=bounds[start - 1][1] if start else 1,
            counts=ck.counts,
            overflow=ck.overflow,
            max_tau=ck.max_tau,
            moment=ck.moment,
        )

    def commit(result: SegmentResult, done: int) -> None:
        nonlocal acc
        acc = acc.merge(result)
        if cfg.checkpoint_path:
            Checkpoint(
                manifest_hash=mhash,
                segments_done=done,
                counts=acc.counts,
                overflow=acc.overflow,
                max_tau=acc.max_tau,
                moment=acc.moment,
            ).save(cfg.checkpoint_path)

    todo = bounds[start:]
    if cfg.parallelism == 1 or len(todo) <= 1:
        for i, (lo, hi) in enumerate(todo):
            commit(sieve_segment(lo, hi, win, cfg.r_max), start + i + 1)
    else:
        tasks = [(lo, hi, win.x, win.y, win.z, cfg.r_max) for lo, hi in todo]
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, len(tasks) // (cfg.parallelism * 8))
        with ProcessPoolExecutor(
            max_workers=cfg.parallelism, mp_context=ctx, initializer=worker_init
        ) as pool:
            # map yields results in submission order, so commits (and any
            # checkpoints) follow the segment order regardless of scheduling.
            for i, result in enumerate(pool.map(_segment_task, tasks, chunksize=chunk)):
                commit(result, start + i + 1)

    hist = TauHistogram(
        r_max=cfg.r_max,
        counts=acc.counts,
        overflow=acc.overflow,
        max_tau=acc.max_tau,
        total=win.x,
        moment=acc.moment,
    )
    if sum(hist.counts) + hist.overflow != win.x:
        raise ConsistencyError(
            f"histogram mass {sum(hist.counts) + hist.overflow} != x = {win.x}"
        )
    if hist.overflow == 0:
        binned = sum(r * c for r, c in enumerate(hist.counts))
        expected = first_moment(win.x, win.y, win.z)
        if binned != expected or hist.moment != expected:
            raise ConsistencyError(
                f"moment cross-check failed: histogram {binned} (accumulated "
                f"{hist.moment}) vs divisor sum {expected}"
            )
    return hist
