"""Survey-weighted classification metrics with design-based intervals.

The weighted AUROC is a Horvitz-Thompson estimator of the concordance
probability: each (positive, negative) pair contributes

    omega_ij = (w_i / W+) * (w_j / W-),

a full omega for a correctly ordered pair and half for a tie, so the pair
weights sum to one by construction. The fast path runs in O(n log n) over
a score-sorted sweep with cumulative negative-weight sums and is checked
against the O(n^2) pairwise definition, which is kept here as the
reference oracle.

Unweighted AUROC intervals use the DeLong structural-component variance.
Weighted-metric intervals recompute the metric under replicate weights
(Rao-Wu PSU bootstrap by default, percentile interval for non-smooth
statistics) or any supplied ReplicateSet.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .design import DesignFrame
from .errors import MetricError
from .estimate import EstimateWithSE
from ._kernels import ht_concordance, tie_group_sums
from .replicate import ReplicateSet, make_bootstrap_weights, replicate_variance

__all__ = [
    "CurvePoints",
    "ScoredSet",
    "WeightedConfusion",
    "auroc_gap",
    "metric_ci",
    "unweighted_auroc",
    "unweighted_auroc_delong_ci",
    "weighted_auroc",
    "weighted_auroc_pairwise",
    "weighted_confusion",
    "weighted_curves",
    "weighted_sens_spec",
]


@dataclass(frozen=True)
class ScoredSet:
    """Aligned labels in {0,1}, real-valued scores, and positive weights."""

    labels: np.ndarray
    scores: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.float64)
        scores = np.asarray(self.scores, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if not (labels.shape == scores.shape == weights.shape) or labels.ndim != 1:
            raise MetricError("labels, scores and weights must be aligned 1-d arrays")
        if not np.isin(labels, (0.0, 1.0)).all():
            raise MetricError("labels must be 0/1")
        if not (weights > 0).all():
            raise MetricError("weights must be strictly positive")
        if not np.isfinite(scores).all():
            raise MetricError("scores must be finite")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return len(self.labels)

    @cached_property
    def _order(self) -> np.ndarray:
        # Stable sort so both kernel backends see identical input order.
        return np.argsort(self.scores, kind="stable")

    def check_both_classes(self):
        npos = int(self.labels.sum())
        if npos == 0 or npos == self.n:
            raise MetricError("rank metrics need at least one positive and one negative")

    def with_weights(self, weights) -> "ScoredSet":
        return ScoredSet(self.labels, self.scores, weights)


def weighted_auroc(scored: ScoredSet) -> float:
    """Pair-weighted AUROC, O(n log n) sweep over the sorted scores."""
    scored.check_both_classes()
    order = scored._order
    conc, wpos, wneg = ht_concordance(
        np.ascontiguousarray(scored.scores[order]),
        np.ascontiguousarray(scored.labels[order]),
        np.ascontiguousarray(scored.weights[order]),
    )
    return conc / (wpos * wneg)


def weighted_auroc_pairwise(scored: ScoredSet) -> float:
    """O(n^2) pairwise definition; the oracle the fast path must equal."""
    scored.check_both_classes()
    pos = scored.labels == 1.0
    wp = scored.weights[pos] / scored.weights[pos].sum()
    wn = scored.weights[~pos] / scored.weights[~pos].sum()
    sp = scored.scores[pos][:, None]
    sn = scored.scores[~pos][None, :]
    pair = (sp > sn) + 0.5 * (sp == sn)
    return float(wp @ pair @ wn)


def unweighted_auroc(scored: ScoredSet) -> float:
    """Mann-Whitney AUROC, ignoring the weights."""
    return weighted_auroc(ScoredSet(scored.labels, scored.scores,
                                    np.ones(scored.n)))


def auroc_gap(scored: ScoredSet) -> float:
    """Weighted minus unweighted AUROC: the estimand-divergence statistic."""
    return weighted_auroc(scored) - unweighted_auroc(scored)


def unweighted_auroc_delong_ci(scored: ScoredSet) -> EstimateWithSE:
    """Mann-Whitney AUROC with the DeLong component-variance interval."""
    scored.check_both_classes()
    pos = scored.labels == 1.0
    sp = np.sort(scored.scores[pos])
    sn = np.sort(scored.scores[~pos])
    n_pos, n_neg = len(sp), len(sn)
    # V10_i: fraction of negatives below positive i (ties half).
    v10 = (np.searchsorted(sn, sp, side="left")
           + 0.5 * (np.searchsorted(sn, sp, side="right")
                    - np.searchsorted(sn, sp, side="left"))) / n_neg
    v01 = (n_pos - np.searchsorted(sp, sn, side="right")
           + 0.5 * (np.searchsorted(sp, sn, side="right")
                    - np.searchsorted(sp, sn, side="left"))) / n_pos
    auc = float(v10.mean())
    s10 = float(v10.var(ddof=1)) if n_pos > 1 else 0.0
    s01 = float(v01.var(ddof=1)) if n_neg > 1 else 0.0
    se = float(np.sqrt(s10 / n_pos + s01 / n_neg))
    return EstimateWithSE.from_point_se(auc, se, scored.n, "taylor")


@dataclass(frozen=True)
class WeightedConfusion:
    """Weight totals of the four confusion cells at one threshold."""

    tp_w: float
    fp_w: float
    tn_w: float
    fn_w: float
    threshold: float


def weighted_confusion(scored: ScoredSet, threshold: float) -> WeightedConfusion:
    """Confusion weight totals with predicted positive = score >= threshold."""
    if not np.isfinite(threshold):
        raise MetricError("threshold must be finite")
    pred = scored.scores >= threshold
    pos = scored.labels == 1.0
    w = scored.weights
    return WeightedConfusion(
        tp_w=float(w[pred & pos].sum()),
        fp_w=float(w[pred & ~pos].sum()),
        tn_w=float(w[~pred & ~pos].sum()),
        fn_w=float(w[~pred & pos].sum()),
        threshold=float(threshold),
    )


def weighted_sens_spec(conf: WeightedConfusion) -> tuple[float, float]:
    """Weighted sensitivity and specificity from confusion weight totals."""
    pos_w = conf.tp_w + conf.fn_w
    neg_w = conf.tn_w + conf.fp_w
    if pos_w == 0:
        raise MetricError("no positive weight: sensitivity undefined")
    if neg_w == 0:
        raise MetricError("no negative weight: specificity undefined")
    return conf.tp_w / pos_w, conf.tn_w / neg_w


@dataclass(frozen=True)
class CurvePoints:
    """Ordered curve points (x, y) with their thresholds."""

    x: np.ndarray
    y: np.ndarray
    thresholds: np.ndarray
    kind: str  # "roc" | "pr"


def weighted_curves(scored: ScoredSet) -> tuple[CurvePoints, CurvePoints, float]:
    """Weighted ROC and PR curves plus the step-interpolated AUPRC.

    Thresholds sweep the unique scores descending; rows tied at a score
    enter as one group. ROC points run from (0,0) to (1,1); PR precision
    is held right-constant per threshold step (no linear interpolation),
    so AUPRC = sum over steps of delta(recall) * precision.
    """
    scored.check_both_classes()
    order = scored._order
    thr_asc, gpos_asc, gneg_asc = tie_group_sums(
        np.ascontiguousarray(scored.scores[order]),
        np.ascontiguousarray(scored.labels[order]),
        np.ascontiguousarray(scored.weights[order]),
    )
    thr = thr_asc[::-1]
    cum_pos = np.cumsum(gpos_asc[::-1])
    cum_neg = np.cumsum(gneg_asc[::-1])
    wpos = cum_pos[-1]
    wneg = cum_neg[-1]

    tpr = cum_pos / wpos
    fpr = cum_neg / wneg
    roc = CurvePoints(
        x=np.r_[0.0, fpr], y=np.r_[0.0, tpr], thresholds=np.r_[np.inf, thr],
        kind="roc",
    )
    recall = tpr
    precision = cum_pos / (cum_pos + cum_neg)
    pr = CurvePoints(x=recall, y=precision, thresholds=thr, kind="pr")
    auprc = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return roc, pr, auprc


def roc_auc_trapezoid(roc: CurvePoints) -> float:
    """Trapezoidal area under a ROC curve (internal consistency check)."""
    return float(np.trapezoid(roc.y, roc.x))


def metric_ci(scored: ScoredSet, metric, frame: DesignFrame,
              method: str = "bootstrap", b: int = 100, seed: int = 0,
              reps: ReplicateSet | None = None,
              ci: str = "percentile") -> EstimateWithSE:
    """Design-based interval for a weighted metric via replicate weights.

    ``scored`` must align row-for-row with ``frame``. Each replicate
    rescales the scored weights by the replicate multipliers and
    re-evaluates ``metric(ScoredSet) -> float``. ``method`` is "bootstrap"
    (Rao-Wu, PSU-level, B replicates) or "replicate" with a supplied set.
    """
    if scored.n != frame.n:
        raise MetricError(
            f"scored set ({scored.n} rows) does not align with frame ({frame.n})"
        )
    if method == "bootstrap":
        reps = make_bootstrap_weights(frame, b=b, seed=seed)
    elif method != "replicate" or reps is None:
        raise MetricError("method must be 'bootstrap' or 'replicate' with a set")

    def statistic(f: DesignFrame) -> float:
        mult = f.w / frame.w
        kept = mult > 0
        return metric(ScoredSet(scored.labels[kept], scored.scores[kept],
                                scored.weights[kept] * mult[kept]))

    return replicate_variance(statistic, frame, reps, ci=ci)
