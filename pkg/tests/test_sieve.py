"""Segmented engine: exactness against the brute-force reference,
determinism across worker counts and segmentations, checkpoint resume,
and the moment identity.
"""

import math

import pytest

from divwin import (
    Checkpoint,
    ConfigError,
    ConsistencyError,
    DomainError,
    ManifestMismatchError,
    SieveConfig,
    Window,
    build_prime_table,
    first_moment,
    histogram_naive,
    run,
    sieve_segment,
)
from divwin.sieve import manifest_hash, run_manifest, window_tau_counts


class TestPrimeTable:
    def test_examples(self):
        assert build_prime_table(10).tolist() == [2, 3, 5, 7]
        assert build_prime_table(2).tolist() == [2]
        table = build_prime_table(30)
        assert len(table) == 10
        assert table[-1] == 29

    def test_empty_below_two(self):
        assert build_prime_table(1).size == 0

    def test_against_trial_division(self):
        def is_prime(q):
            return q >= 2 and all(q % d for d in range(2, math.isqrt(q) + 1))

        assert build_prime_table(2000).tolist() == [q for q in range(2001) if is_prime(q)]


class TestFirstMoment:
    def test_examples(self):
        assert first_moment(100, 9, 12) == 10 + 9 + 8
        assert first_moment(1000, 9, 12) == 100 + 90 + 83
        assert first_moment(1000, 20, 20.7) == 0

    def test_matches_histogram_moment(self):
        for (x, y, z) in [(100, 9, 12), (1000, 9, 12), (5000, 30, 81.5), (2500, 7.5, 20)]:
            assert first_moment(x, y, z) == histogram_naive(x, y, z).moment

    def test_rejects_bad_x(self):
        with pytest.raises(DomainError):
            first_moment(0, 9, 12)


class TestSieveSegment:
    def test_first_hundred(self):
        res = sieve_segment(1, 101, Window(100, 9, 12))
        assert res.counts[:3] == (74, 25, 1)
        assert res.moment == 27

    def test_empty_window_all_zero(self):
        res = sieve_segment(1, 101, Window(100, 20, 20.9))
        assert res.counts[0] == 100
        assert res.max_tau == 0

    def test_interior_segment_contains_660(self):
        res = sieve_segment(601, 661, Window(1000, 9, 12))
        assert res.counts[3] == 1  # n = 660 carries 10, 11, 12
        assert res.moment == sum(
            1 for n in range(601, 661) for d in (10, 11, 12) if n % d == 0
        )

    def test_bounds_validated(self):
        with pytest.raises(DomainError):
            sieve_segment(5, 5, Window(100, 9, 12))

    def test_memory_budget_guard(self):
        with pytest.raises(ConfigError):
            sieve_segment(1, 1 << 31, Window(1 << 31, 9, 12))

    def test_merge_monoid(self):
        win = Window(300, 9, 12)
        a = sieve_segment(1, 101, win)
        b = sieve_segment(101, 201, win)
        c = sieve_segment(201, 301, win)
        left = a.merge(b).merge(c)
        right = a.merge(b.merge(c))
        swapped = c.merge(a).merge(b)
        assert left == right == swapped
        assert left.counts == run(win).counts


class TestWindowTauCounts:
    def test_offsets_across_segment_boundaries(self):
        win = Window(10**4, 9, 12)
        whole = window_tau_counts(1, 10**4 + 1, win.d_lo, win.d_hi)
        pieces = []
        for lo in range(1, 10**4 + 1, 997):  # deliberately ragged segments
            hi = min(lo + 997, 10**4 + 1)
            pieces.extend(window_tau_counts(lo, hi, win.d_lo, win.d_hi).tolist())
        assert pieces == whole.tolist()


class TestRun:
    def test_small_against_oracle(self):
        for (x, y, z) in [(100, 9, 12), (1000, 9, 12), (2000, 14.5, 39), (500, 3, 8)]:
            got = run(Window(x, y, z))
            want = histogram_naive(x, y, z)
            assert got.counts == want.counts
            assert got.h == want.h and got.h2_star == want.h2_star
            assert got.moment == want.moment
            assert got.max_tau == want.max_tau

    def test_trivial_empty_window(self):
        hist = run(Window(1000, 20, 20.5))
        assert hist.h == 0
        assert hist.counts[0] == 1000

    def test_determinism_over_parallelism_and_segments(self):
        win = Window(10**5, 100, 260)
        results = set()
        for parallelism in (1, 4, 8):
            for segment_size in (1 << 16, 1 << 20):
                cfg = SieveConfig(segment_size=segment_size, parallelism=parallelism)
                hist = run(win, cfg)
                results.add((hist.counts, hist.overflow, hist.max_tau, hist.moment))
        assert len(results) == 1

    def test_moment_identity_enforced(self):
        for (x, y, z) in [(10**5, 30, 81), (10**5, 9, 12), (54321, 99.5, 270.4)]:
            hist = run(Window(x, y, z), SieveConfig(segment_size=1 << 14))
            assert hist.moment == first_moment(x, y, z)

    def test_mass_conservation(self):
        hist = run(Window(98765, 11, 29))
        assert sum(hist.counts) + hist.overflow == 98765

    def test_monotone_in_z_and_x(self):
        y = 40.0
        hs = [run(Window(20000, y, z)).h for z in (45, 60, 80, 100, 108)]
        assert all(a <= b for a, b in zip(hs, hs[1:]))
        hs_x = [run(Window(x, y, 100)).h for x in (5000, 10000, 20000, 40000)]
        assert all(a <= b for a, b in zip(hs_x, hs_x[1:]))

    def test_overflow_bucket(self):
        # r_max = 2 forces the tau = 3 integer 660 into overflow
        hist = run(Window(1000, 9, 12), SieveConfig(r_max=2))
        assert hist.overflow == 1
        assert hist.max_tau == 3
        assert hist.counts == (758, 212, 29)
        assert hist.moment == 273  # exact even though the bins are capped

    def test_segment_size_budget(self):
        with pytest.raises(ConfigError):
            run(Window(10, 2, 3), SieveConfig(segment_size=1 << 31))

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SieveConfig(r_max=0)
        with pytest.raises(ConfigError):
            SieveConfig(parallelism=0)


class TestCheckpoint:
    def test_resume_matches_uninterrupted(self, tmp_path):
        win = Window(10**5, 9, 12)
        cfg = SieveConfig(segment_size=1 << 14, checkpoint_path=str(tmp_path / "ck.json"))
        full = run(Window(10**5, 9, 12), SieveConfig(segment_size=1 << 14))

        # simulate an interruption: complete only the first three segments
        mhash = manifest_hash(run_manifest(win, cfg))
        partial = None
        for i in range(3):
            lo = 1 + i * (1 << 14)
            seg = sieve_segment(lo, lo + (1 << 14), win, cfg.r_max)
            partial = seg if partial is None else partial.merge(seg)
        Checkpoint(
            manifest_hash=mhash,
            segments_done=3,
            counts=partial.counts,
            overflow=partial.overflow,
            max_tau=partial.max_tau,
            moment=partial.moment,
        ).save(cfg.checkpoint_path)

        resumed = run(win, cfg)
        assert resumed == full

    def test_checkpoint_written_and_reusable(self, tmp_path):
        path = str(tmp_path / "ck.json")
        win = Window(5000, 9, 12)
        cfg = SieveConfig(segment_size=1 << 10, checkpoint_path=path)
        first = run(win, cfg)
        ck = Checkpoint.load(path)
        assert ck.segments_done == 5000 // (1 << 10) + 1
        # a finished checkpoint short-circuits the whole computation
        again = run(win, cfg)
        assert again == first

    def test_manifest_mismatch_refused(self, tmp_path):
        path = str(tmp_path / "ck.json")
        win = Window(5000, 9, 12)
        cfg = SieveConfig(segment_size=1 << 10, checkpoint_path=path)
        run(win, cfg)
        other = SieveConfig(segment_size=1 << 11, checkpoint_path=path)
        with pytest.raises(ManifestMismatchError):
            run(win, other)
        with pytest.raises(ManifestMismatchError):
            run(Window(5001, 9, 12), SieveConfig(segment_size=1 << 10, checkpoint_path=path))

    def test_manifest_hash_covers_all_fields(self):
        win = Window(100, 9, 12)
        base = manifest_hash(run_manifest(win, SieveConfig()))
        assert manifest_hash(run_manifest(win, SieveConfig(eps=0.02))) != base
        assert manifest_hash(run_manifest(win, SieveConfig(r_max=32))) != base
        assert manifest_hash(run_manifest(Window(101, 9, 12), SieveConfig())) != base
