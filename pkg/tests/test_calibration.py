import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icsel.calibration import (
    CalibrationError,
    ece,
    simplex_calibration_report,
    simplex_membership,
)
from icsel.core import AnnotatedEntry, AnnotatedSet
from icsel.feedback import KernelOracleSource
from icsel.inference import evaluate
from tests.conftest import annotate_all, blob_pool


class TestEce:
    def test_perfect(self):
        bins = ece([1.0] * 5, [True] * 5, 10)
        assert bins.ece == 0.0

    def test_maximal_gap(self):
        bins = ece([1.0] * 5, [False] * 5, 10)
        assert bins.ece == 1.0

    def test_single_bin_hand_computed(self):
        # all four in bin (0.8, 0.9]: |0.5 - 0.9| = 0.4
        bins = ece([0.9] * 4, [True, True, False, False], 10)
        assert bins.ece == pytest.approx(0.4, abs=1e-12)
        occupied = [b for b in bins.bins if b.count]
        assert len(occupied) == 1
        assert occupied[0].lo == pytest.approx(0.8) and occupied[0].hi == pytest.approx(0.9)

    def test_zero_confidence_in_first_bin(self):
        bins = ece([0.0, 0.05], [False, False], 10)
        assert bins.bins[0].count == 2

    def test_right_inclusive_boundaries(self):
        bins = ece([0.1, 0.2, 0.3], [True] * 3, 10)
        assert bins.bins[0].count == 1  # 0.1 in (0, 0.1]
        assert bins.bins[1].count == 1  # 0.2 in (0.1, 0.2]
        assert bins.bins[2].count == 1  # 0.3 lands exactly on its right edge
        above = ece([np.nextafter(0.3, 1.0)], [True], 10)
        assert above.bins[3].count == 1  # just past the edge -> next bin

    def test_counts_partition(self, rng):
        conf = rng.uniform(0, 1, size=200)
        corr = rng.uniform(0, 1, size=200) < conf
        bins = ece(conf, corr, 13)
        assert sum(b.count for b in bins.bins) == 200

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 100))
    def test_single_bin_equals_overall_gap(self, seed, n):
        rng = np.random.default_rng(seed)
        conf = rng.uniform(0, 1, size=n)
        corr = rng.integers(0, 2, size=n).astype(bool)
        bins = ece(conf, corr, 1)
        expected = abs(float(np.mean(corr.astype(float))) - float(np.mean(conf)))
        assert bins.ece == expected  # exact, same arithmetic

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 50))
        conf = rng.uniform(0, 1, size=n)
        corr = rng.integers(0, 2, size=n).astype(bool)
        bins = ece(conf, corr, int(rng.integers(1, 20)))
        assert 0.0 <= bins.ece <= 1.0

    def test_perfectly_calibrated_synthetic(self, rng):
        # construct data whose bin confidence equals bin accuracy exactly
        conf, corr = [], []
        for b in range(10):
            c = (b + 0.5) / 10
            n_correct = int(round(c * 20))
            conf.extend([c] * 20)
            corr.extend([True] * n_correct + [False] * (20 - n_correct))
        bins = ece(conf, corr, 10)
        assert bins.ece == pytest.approx(0.0, abs=1e-12)

    def test_validation(self):
        with pytest.raises(CalibrationError):
            ece([], [], 10)
        with pytest.raises(CalibrationError):
            ece([1.5], [True], 10)
        with pytest.raises(CalibrationError):
            ece([0.5], [True], 0)

    def test_csv_shape(self):
        csv = ece([0.5, 0.9], [True, False], 4).to_csv()
        lines = csv.strip().split("\n")
        assert lines[0] == "bin,conf_lo,conf_hi,mean_conf,acc,count"
        assert len(lines) == 5


class TestSimplexMembership:
    def test_centroid_inside(self):
        demos = [np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        test = sum(demos) / 3
        verdict, _ = simplex_membership(test, demos)
        assert verdict == "inside"

    def test_outside_segment(self):
        p1 = np.array([1.0, 1.0])
        p2 = np.array([2.0, 2.0])
        test = 2 * p1 - p2
        verdict, _ = simplex_membership(test, [p1, p2])
        assert verdict == "outside"

    def test_collinear_demos_skipped(self):
        demos = [np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([2.0, 2.0])]
        verdict, reason = simplex_membership(np.array([0.5, 0.4]), demos)
        assert verdict == "skipped" and reason == "degenerate"

    def test_single_demo(self):
        d = np.array([1.0, 2.0, 3.0])
        assert simplex_membership(d.copy(), [d])[0] == "inside"
        assert simplex_membership(d + 1.0, [d])[0] == "outside"

    def test_segment_midpoint_inside(self):
        p1 = np.array([0.0, 0.0, 1.0])
        p2 = np.array([2.0, 0.0, 1.0])
        assert simplex_membership((p1 + p2) / 2, [p1, p2])[0] == "inside"

    def test_boundary_tolerance(self):
        demos = [np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        verdict, _ = simplex_membership(np.array([0.0, 0.0]), demos)
        assert verdict == "inside"  # vertex counts as inside

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_rotation_and_order_invariance(self, seed):
        rng = np.random.default_rng(seed)
        demos = [rng.normal(size=5) for _ in range(4)]
        w = rng.uniform(0, 1, size=4)
        w /= w.sum()
        inside_pt = sum(wi * d for wi, d in zip(w, demos))
        outside_pt = demos[0] + 3.0 * (demos[0] - demos[1])
        # random rotation via QR
        Q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        for pt, expected in ((inside_pt, "inside"), (outside_pt, None)):
            base, _ = simplex_membership(pt, demos)
            rotated, _ = simplex_membership(Q @ pt, [Q @ d for d in demos])
            assert rotated == base
            perm = [demos[i] for i in rng.permutation(4)]
            permuted, _ = simplex_membership(pt, perm)
            assert permuted == base
            if expected:
                assert base == expected


class TestSimplexReport:
    def make_eval(self, rng, n_per_blob=8):
        pool = blob_pool(
            rng,
            [[4.0, 0.0, 0.0, 0.0], [0.0, 4.0, 0.0, 0.0]],
            [n_per_blob, n_per_blob],
            noise=0.4,
            labels=["a", "b"],
        )
        annotated = annotate_all(pool, [0, 1, 2, n_per_blob, n_per_blob + 1, n_per_blob + 2])
        source = KernelOracleSource.for_pool(pool)
        report = evaluate(annotated, pool, range(2 * n_per_blob), source, k=4)
        return pool, annotated, report

    def test_counts_consistent(self, rng):
        pool, annotated, report = self.make_eval(rng)
        simplex = simplex_calibration_report(report, pool, annotated, 4)
        assert simplex.net == simplex.inside_correct - simplex.inside_wrong
        assert simplex.inside_correct + simplex.inside_wrong + simplex.skipped <= simplex.total

    def test_all_empty_subsets_skip(self, rng):
        # demos never share the predicted label -> every instance skipped
        pool = blob_pool(rng, [[3.0, 0.0]], [6], labels=["a"])
        annotated = AnnotatedSet([AnnotatedEntry("ex-000", "zzz")])
        source = KernelOracleSource(["zzz", "a"])
        report = evaluate(annotated, pool, range(1, 6), source, k=1)
        # prediction will be 'zzz' (only demo), which matches the demo label...
        # instead force mismatch: annotate with a label the oracle can't predict
        annotated2 = AnnotatedSet([AnnotatedEntry("ex-000", "a")])
        report2 = evaluate(annotated2, pool, range(1, 6), source, k=1)
        for rec in report2.records:
            rec.prediction = "zzz"  # no retrieved demo carries 'zzz'
        simplex = simplex_calibration_report(report2, pool, annotated2, 1)
        assert simplex.skipped == 5
        assert simplex.net == 0

    def test_signed_count_definition(self, rng):
        pool, annotated, report = self.make_eval(rng)
        # recompute the net by hand from the per-record data
        from icsel.calibration import simplex_membership as sm

        expected = 0
        for rec in report.records:
            demos = [
                pool.embeddings[pool.index_of(d)]
                for d in rec.retrieved_ids
                if annotated.label_of(d) == rec.prediction
            ]
            if not demos:
                continue
            verdict, _ = sm(pool.embeddings[pool.index_of(rec.example_id)], demos)
            if verdict == "inside":
                expected += 1 if rec.correct else -1
        got = simplex_calibration_report(report, pool, annotated, 4)
        assert got.net == expected
