"""Weighted AUROC, DeLong intervals, confusion ratios, curves, metric CIs."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surveyml.errors import MetricError
from surveyml.metrics import (
    ScoredSet,
    auroc_gap,
    metric_ci,
    roc_auc_trapezoid,
    unweighted_auroc,
    unweighted_auroc_delong_ci,
    weighted_auroc,
    weighted_auroc_pairwise,
    weighted_confusion,
    weighted_curves,
    weighted_sens_spec,
)

from conftest import make_frame


def random_scored(gen, n=40, ties=True, weights=True):
    labels = gen.integers(0, 2, n).astype(float)
    if labels.sum() == 0:
        labels[0] = 1.0
    if labels.sum() == n:
        labels[0] = 0.0
    if ties:
        scores = gen.integers(0, 8, n).astype(float) / 7
    else:
        scores = gen.normal(0, 1, n)
    w = gen.uniform(0.2, 5.0, n) if weights else np.ones(n)
    return ScoredSet(labels, scores, w)


class TestWeightedAuroc:
    def test_hand_case_four_pairs(self):
        scored = ScoredSet(
            labels=np.array([1.0, 1.0, 0.0, 0.0]),
            scores=np.array([0.9, 0.4, 0.5, 0.1]),
            weights=np.array([1.0, 2.0, 1.0, 3.0]),
        )
        assert weighted_auroc(scored) == pytest.approx(10 / 12, abs=1e-12)
        assert weighted_auroc_pairwise(scored) == pytest.approx(10 / 12, abs=1e-12)

    def test_equal_weights_match_mann_whitney(self, rng):
        scored = random_scored(rng, n=60, weights=False)
        # Rank-based Mann-Whitney with midranks as an independent route.
        from scipy.stats import rankdata

        ranks = rankdata(scored.scores)
        pos = scored.labels == 1.0
        n_pos, n_neg = pos.sum(), (~pos).sum()
        u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
        assert weighted_auroc(scored) == pytest.approx(u / (n_pos * n_neg), abs=1e-12)

    def test_fast_path_equals_pairwise_oracle(self):
        gen = np.random.default_rng(20240815)
        for trial in range(1000):
            scored = random_scored(gen, n=int(gen.integers(2, 51)),
                                   ties=bool(gen.integers(0, 2)))
            fast = weighted_auroc(scored)
            slow = weighted_auroc_pairwise(scored)
            assert abs(fast - slow) <= 1e-12, f"trial {trial}"

    def test_single_class_rejected(self):
        scored = ScoredSet(np.ones(3), np.array([0.1, 0.5, 0.9]), np.ones(3))
        with pytest.raises(MetricError, match="one positive and one negative"):
            weighted_auroc(scored)

    def test_pair_weight_normalization(self, rng):
        scored = random_scored(rng)
        pos = scored.labels == 1.0
        wp = scored.weights[pos] / scored.weights[pos].sum()
        wn = scored.weights[~pos] / scored.weights[~pos].sum()
        total = np.outer(wp, wn).sum()
        assert abs(total - 1.0) <= 1e-12

    def test_complement_symmetry(self, rng):
        for _ in range(20):
            scored = random_scored(rng)
            flipped = ScoredSet(scored.labels, -scored.scores, scored.weights)
            assert weighted_auroc(scored) + weighted_auroc(flipped) == pytest.approx(
                1.0, abs=1e-12)

    def test_monotone_transform_invariance(self, rng):
        scored = random_scored(rng)
        base = weighted_auroc(scored)
        for transform in (np.exp, np.arctan, lambda s: 3 * s + 7):
            moved = ScoredSet(scored.labels, transform(scored.scores),
                              scored.weights)
            assert weighted_auroc(moved) == base

    def test_weight_scale_invariance(self, rng):
        scored = random_scored(rng)
        base = weighted_auroc(scored)
        for c in (0.01, 42.0):
            scaled = scored.with_weights(scored.weights * c)
            assert weighted_auroc(scaled) == pytest.approx(base, rel=1e-12)

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_fast_equals_pairwise_property(self, seed):
        gen = np.random.default_rng(seed)
        scored = random_scored(gen, n=int(gen.integers(2, 30)))
        assert abs(weighted_auroc(scored) - weighted_auroc_pairwise(scored)) <= 1e-12


class TestDeLong:
    def test_perfect_separation(self):
        scored = ScoredSet(np.array([0.0, 0, 1, 1]),
                           np.array([0.1, 0.2, 0.8, 0.9]), np.ones(4))
        est = unweighted_auroc_delong_ci(scored)
        assert est.point == 1.0
        assert est.se == 0.0

    def test_matches_mann_whitney_point(self, rng):
        scored = random_scored(rng, n=80)
        est = unweighted_auroc_delong_ci(scored)
        assert est.point == pytest.approx(unweighted_auroc(scored), abs=1e-12)

    def test_null_coverage_simulation(self):
        # Independent labels and scores: the 95% CI must cover 0.5 at the
        # nominal rate. 500 fixed seeds, n = 2000 each.
        covered = 0
        for seed in range(500):
            gen = np.random.default_rng(10_000 + seed)
            labels = (gen.random(2000) < 0.3).astype(float)
            scores = gen.normal(0, 1, 2000)
            est = unweighted_auroc_delong_ci(ScoredSet(labels, scores, np.ones(2000)))
            lo, hi = est.ci95
            covered += lo <= 0.5 <= hi
        assert 0.925 <= covered / 500 <= 0.975


class TestConfusion:
    def test_equal_weights_match_counts(self, rng):
        scored = random_scored(rng, weights=False)
        conf = weighted_confusion(scored, 0.5)
        pred = scored.scores >= 0.5
        pos = scored.labels == 1.0
        assert conf.tp_w == (pred & pos).sum()
        assert conf.fp_w == (pred & ~pos).sum()
        assert conf.tn_w == (~pred & ~pos).sum()
        assert conf.fn_w == (~pred & pos).sum()

    def test_single_positive_above_threshold(self):
        scored = ScoredSet(np.array([1.0, 0.0]), np.array([0.9, 0.2]),
                           np.array([5.0, 1.0]))
        sens, spec = weighted_sens_spec(weighted_confusion(scored, 0.5))
        assert sens == 1.0
        assert spec == 1.0

    def test_hand_weight_sums(self):
        # Six rows, weights 1..6; census enumeration of the cells.
        labels = np.array([1.0, 1, 1, 0, 0, 0])
        scores = np.array([0.9, 0.3, 0.6, 0.7, 0.2, 0.5])
        w = np.arange(1.0, 7.0)
        conf = weighted_confusion(ScoredSet(labels, scores, w), 0.5)
        assert conf.tp_w == 1 + 3  # rows 0 and 2
        assert conf.fn_w == 2
        assert conf.fp_w == 4 + 6
        assert conf.tn_w == 5
        sens, spec = weighted_sens_spec(conf)
        assert sens == pytest.approx(4 / 6)
        assert spec == pytest.approx(5 / 15)

    def test_margins_partition_weight(self, rng):
        scored = random_scored(rng)
        conf = weighted_confusion(scored, 0.4)
        pos_w = scored.weights[scored.labels == 1.0].sum()
        neg_w = scored.weights[scored.labels == 0.0].sum()
        assert conf.tp_w + conf.fn_w == pytest.approx(pos_w, rel=1e-12)
        assert conf.fp_w + conf.tn_w == pytest.approx(neg_w, rel=1e-12)

    def test_sens_undefined_without_positives(self):
        conf = weighted_confusion(
            ScoredSet(np.array([0.0, 0.0]), np.array([0.1, 0.9]), np.ones(2)), 0.5)
        with pytest.raises(MetricError, match="sensitivity"):
            weighted_sens_spec(conf)

    def test_infinite_threshold_rejected(self, rng):
        with pytest.raises(MetricError, match="finite"):
            weighted_confusion(random_scored(rng), np.inf)


class TestCurves:
    def test_perfect_scores_auprc_one(self):
        labels = np.array([0.0, 1, 0, 1, 1])
        scored = ScoredSet(labels, labels.copy(), np.ones(5))
        _, _, auprc = weighted_curves(scored)
        assert auprc == 1.0

    def test_roc_endpoints_and_monotone(self, rng):
        roc, _, _ = weighted_curves(random_scored(rng))
        assert (roc.x[0], roc.y[0]) == (0.0, 0.0)
        assert (roc.x[-1], roc.y[-1]) == (1.0, 1.0)
        assert (np.diff(roc.x) >= 0).all()
        assert (np.diff(roc.y) >= 0).all()

    def test_trapezoid_equals_auroc(self, rng):
        for _ in range(25):
            scored = random_scored(rng, ties=False)
            roc, _, _ = weighted_curves(scored)
            assert roc_auc_trapezoid(roc) == pytest.approx(
                weighted_auroc(scored), abs=1e-9)

    def test_trapezoid_equals_auroc_with_ties(self, rng):
        scored = random_scored(rng, ties=True)
        roc, _, _ = weighted_curves(scored)
        assert roc_auc_trapezoid(roc) == pytest.approx(
            weighted_auroc(scored), abs=1e-12)

    def test_pr_recall_monotone(self, rng):
        _, pr, _ = weighted_curves(random_scored(rng))
        assert (np.diff(pr.x) >= 0).all()
        assert pr.x[-1] == 1.0


class TestMetricCi:
    def test_degenerate_constant_metric(self, small_frame):
        scored = ScoredSet(small_frame.column("y"), small_frame.column("x"),
                           small_frame.w)
        est = metric_ci(scored, lambda s: 0.77, small_frame, b=20, seed=1)
        assert est.point == 0.77
        assert est.se == 0.0
        assert est.ci95 == (0.77, 0.77)

    def test_alignment_check(self, small_frame):
        scored = ScoredSet(np.array([0.0, 1]), np.array([0.1, 0.9]), np.ones(2))
        with pytest.raises(MetricError, match="align"):
            metric_ci(scored, weighted_auroc, small_frame)

    def test_bootstrap_interval_covers_point_region(self):
        frame = make_frame(n_strata=6, psus_per_stratum=4, rows_per_psu=8, seed=3)
        scores = 1 / (1 + np.exp(-frame.column("x")))
        scored = ScoredSet(frame.column("y"), scores, frame.w)
        est = metric_ci(scored, weighted_auroc, frame, b=100, seed=11)
        lo, hi = est.ci95
        assert lo < est.point < hi
        assert est.se > 0

    def test_b2000_vs_b100_widths_agree(self):
        frame = make_frame(n_strata=8, psus_per_stratum=4, rows_per_psu=6, seed=5)
        scores = 1 / (1 + np.exp(-frame.column("x")))
        scored = ScoredSet(frame.column("y"), scores, frame.w)
        est_small = metric_ci(scored, weighted_auroc, frame, b=100, seed=2)
        est_big = metric_ci(scored, weighted_auroc, frame, b=2000, seed=2)
        width_small = est_small.ci95[1] - est_small.ci95[0]
        width_big = est_big.ci95[1] - est_big.ci95[0]
        assert abs(width_small - width_big) / width_big < 0.20

    def test_replicate_method_with_jackknife(self, small_frame):
        from surveyml.replicate import make_jackknife_weights

        scores = 1 / (1 + np.exp(-small_frame.column("x")))
        scored = ScoredSet(small_frame.column("y"), scores, small_frame.w)
        reps = make_jackknife_weights(small_frame)
        est = metric_ci(scored, weighted_auroc, small_frame,
                        method="replicate", reps=reps, ci="wald")
        assert est.se >= 0


class TestGap:
    def test_gap_definition(self, rng):
        scored = random_scored(rng)
        assert auroc_gap(scored) == pytest.approx(
            weighted_auroc(scored) - unweighted_auroc(scored), abs=1e-15)

    def test_informative_weights_on_prevalent_positives(self):
        # Upweighting a region where ranking is worse moves the weighted
        # metric away from the unweighted one.
        gen = np.random.default_rng(8)
        n = 400
        group = gen.random(n) < 0.5
        labels = (gen.random(n) < np.where(group, 0.5, 0.2)).astype(float)
        scores = np.where(group, labels * 0.1 + gen.normal(0, 1, n),
                          labels * 2.0 + gen.normal(0, 1, n))
        w = np.where(group, 10.0, 1.0)
        scored = ScoredSet(labels, scores, w)
        assert auroc_gap(scored) < 0
