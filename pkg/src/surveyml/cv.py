"""Cluster-aware cross-validation: fold plans, screening, and the runner.

PSU-stratified assignment keeps every (stratum, PSU) intact: within each
stratum the distinct PSUs are shuffled and dealt round-robin to the K
folds from a random starting offset, so fold sizes are balanced per
stratum and all rows of a PSU share a fold. Each repeat reshuffles
independently. Random assignment ignores the design entirely and is kept
as the leakage-prone baseline.

Fold screening drops (repeat, fold) cells whose test partition is too
small or has too few positive outcomes; the runner then fits on each
retained cell's complement and evaluates the supplied metric on the test
rows with their survey weights.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .design import DesignFrame
from .errors import FoldError
from .ingest import Column, RawTable, write_csv
from .metrics import ScoredSet

__all__ = [
    "FoldPlan",
    "ScoreMatrix",
    "assign_psu_folds",
    "assign_random_folds",
    "plan_to_csv",
    "run_cv",
    "screen_folds",
]

DEFAULT_MIN_TEST_N = 50
DEFAULT_MIN_TEST_POS = 5


@dataclass(frozen=True)
class FoldPlan:
    """Fold assignment for R repeats of K folds over n rows.

    ``assignment[r, i]`` is the 1-based fold of row i in repeat r;
    ``retained[r, k]`` marks (repeat, fold) cells that survived screening.
    """

    k: int
    r: int
    assignment: np.ndarray  # (R, n) int, values in 1..K
    scheme: str  # "psu_stratified" | "random"
    seed: int
    retained: np.ndarray  # (R, K) bool

    def test_rows(self, repeat: int, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment[repeat] == fold + 1)

    def train_rows(self, repeat: int, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment[repeat] != fold + 1)


@dataclass(frozen=True)
class ScoreMatrix:
    """R x K metric values; NaN where the cell was screened out."""

    values: np.ndarray
    metric_name: str

    @property
    def retained_values(self) -> np.ndarray:
        return self.values[~np.isnan(self.values)]

    @property
    def mean(self) -> float:
        return float(self.retained_values.mean())

    @property
    def sd(self) -> float:
        vals = self.retained_values
        return float(vals.std(ddof=1)) if len(vals) > 1 else 0.0


def _check_k(k: int, r: int):
    if k < 1:
        raise FoldError(f"K must be >= 1, got {k}")
    if r < 1:
        raise FoldError(f"R must be >= 1, got {r}")


def assign_psu_folds(frame: DesignFrame, k: int, r: int, seed: int,
                     strict: bool = False) -> FoldPlan:
    """Stratified PSU-level assignment; all rows of a PSU share a fold.

    When a stratum has fewer distinct PSUs than K some stratum-fold cells
    stay empty; ``strict`` turns that into an error instead of a warning.
    """
    _check_k(k, r)
    min_psus = int(frame.psu_per_stratum.min())
    if k > min_psus:
        if strict:
            raise FoldError(
                f"K={k} exceeds the smallest stratum's PSU count ({min_psus})"
            )
        warnings.warn(
            f"K={k} exceeds the smallest stratum's PSU count ({min_psus}); "
            "some stratum-fold cells will be empty"
        )
    rng = np.random.Generator(np.random.Philox(key=seed))
    n_psu = len(frame.psu_strata)
    assignment = np.empty((r, frame.n), dtype=np.int64)
    for rep in range(r):
        fold_of_psu = np.empty(n_psu, dtype=np.int64)
        for h in range(len(frame.strata_labels)):
            members = np.flatnonzero(frame.psu_strata == h)
            order = rng.permutation(len(members))
            offset = int(rng.integers(0, k))
            fold_of_psu[members[order]] = (np.arange(len(members)) + offset) % k + 1
        assignment[rep] = fold_of_psu[frame.psu_codes]
    retained = np.ones((r, k), dtype=bool)
    return FoldPlan(k, r, assignment, "psu_stratified", seed, retained)


def assign_random_folds(frame: DesignFrame, k: int, r: int, seed: int) -> FoldPlan:
    """Row-level balanced random assignment, ignoring the design."""
    _check_k(k, r)
    if k > frame.n:
        raise FoldError(f"K={k} exceeds the number of rows ({frame.n})")
    rng = np.random.Generator(np.random.Philox(key=seed))
    assignment = np.empty((r, frame.n), dtype=np.int64)
    for rep in range(r):
        order = rng.permutation(frame.n)
        offset = int(rng.integers(0, k))
        folds = (np.arange(frame.n) + offset) % k + 1
        assignment[rep, order] = folds
    retained = np.ones((r, k), dtype=bool)
    return FoldPlan(k, r, assignment, "random", seed, retained)


def screen_folds(plan: FoldPlan, frame: DesignFrame,
                 min_test_n: int = DEFAULT_MIN_TEST_N,
                 min_test_pos: int = DEFAULT_MIN_TEST_POS,
                 outcome: str | None = None) -> FoldPlan:
    """Drop (repeat, fold) cells with tiny or positive-free test sets.

    Counts use rows with a non-missing binary outcome. Thresholds of zero
    retain everything.
    """
    outcome = outcome or frame.outcome_name
    if outcome is None:
        raise FoldError("screening needs an outcome column")
    y = frame.column(outcome)
    usable = frame.domain & ~np.isnan(y)
    positive = usable & (y == 1.0)
    retained = np.empty((plan.r, plan.k), dtype=bool)
    for rep in range(plan.r):
        for fold in range(plan.k):
            test = plan.assignment[rep] == fold + 1
            retained[rep, fold] = (
                int((test & usable).sum()) >= min_test_n
                and int((test & positive).sum()) >= min_test_pos
            )
    return replace(plan, retained=retained)


def run_cv(plan: FoldPlan, frame: DesignFrame, trainer, metric,
           outcome: str | None = None,
           metric_name: str = "metric") -> ScoreMatrix:
    """Fit/evaluate every retained (repeat, fold) cell.

    ``trainer(frame, train_rows)`` returns a row scorer; the metric is
    evaluated on a ScoredSet of the test rows carrying their own survey
    weights (no renormalization: pair-weighted metrics are scale-free).
    """
    outcome = outcome or frame.outcome_name
    if outcome is None:
        raise FoldError("run_cv needs an outcome column")
    y = frame.column(outcome)
    values = np.full((plan.r, plan.k), np.nan)
    for rep in range(plan.r):
        for fold in range(plan.k):
            if not plan.retained[rep, fold]:
                continue
            train = plan.train_rows(rep, fold)
            test = plan.test_rows(rep, fold)
            usable = test[frame.domain[test] & ~np.isnan(y[test])]
            try:
                scorer = trainer(frame, train)
                scores = scorer(usable)
                scored = ScoredSet(y[usable], scores, frame.w[usable])
                values[rep, fold] = float(metric(scored))
            except Exception as exc:
                raise FoldError(
                    f"trainer/metric failed at repeat {rep + 1}, fold {fold + 1}: {exc}"
                ) from exc
    return ScoreMatrix(values, metric_name)


def leakage_pairs(plan: FoldPlan, frame: DesignFrame) -> int:
    """Count (stratum, PSU) pairs split across folds; 0 means leakage-free."""
    leaks = 0
    for rep in range(plan.r):
        for code in range(len(frame.psu_strata)):
            folds = np.unique(plan.assignment[rep][frame.psu_codes == code])
            if len(folds) > 1:
                leaks += 1
    return leaks


def plan_to_csv(plan: FoldPlan, path) -> None:
    """Export (row_id, repeat, fold) triples for external reuse."""
    n = plan.assignment.shape[1]
    row_id = np.tile(np.arange(n, dtype=np.float64), plan.r)
    repeat = np.repeat(np.arange(1, plan.r + 1, dtype=np.float64), n)
    fold = plan.assignment.astype(np.float64).reshape(-1)
    write_csv(RawTable("folds", [
        Column("row_id", row_id), Column("repeat", repeat), Column("fold", fold),
    ]), path)
