"""Weight calibration: poststratification, raking, and trimming.

Poststratification rescales weights in one pass so cell totals match the
targets exactly; raking (iterative proportional fitting) cycles over
several one-way margins until every margin matches within tolerance.
Targets can be absolute population totals, percents, or proportions;
percent and proportion targets are anchored to the frame's current total
weight so calibration preserves it.

Trimming caps weights at an absolute value or a quantile of the weight
distribution, optionally redistributing the trimmed mass proportionally
among the untrimmed rows of the same stratum so stratum weight totals are
preserved (one pass; redistribution may lift an untrimmed weight above
the cap, which is accepted).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignFrame
from .errors import CalibrationError
from .ingest import read_csv

__all__ = [
    "CalibrationReport",
    "MarginTarget",
    "poststratify",
    "rake",
    "read_margins_csv",
    "trim_weights",
]


@dataclass(frozen=True)
class MarginTarget:
    """Targets for one categorical variable: level -> total/percent/share."""

    variable: str
    targets: dict
    kind: str = "total"  # "total" | "percent" | "proportion"

    def __post_init__(self):
        if self.kind not in ("total", "percent", "proportion"):
            raise CalibrationError(f"unknown target kind {self.kind!r}")
        if not self.targets:
            raise CalibrationError(f"no targets given for {self.variable!r}")
        for level, value in self.targets.items():
            if not value > 0:
                raise CalibrationError(
                    f"target for {self.variable!r}={level!r} must be positive"
                )


@dataclass(frozen=True)
class CalibrationReport:
    iterations: int
    max_margin_error: float
    weight_ratio_range: tuple[float, float]
    trimmed_mass: float = 0.0
    margin_error_history: tuple = ()  # max error after each raking cycle


def _level_assignments(frame: DesignFrame, target: MarginTarget):
    values = frame.column(target.variable)
    if values.dtype == object:
        missing = np.array([v is None or v == "" for v in values])
    else:
        missing = np.isnan(values)
    if missing.any():
        raise CalibrationError(
            f"margin variable {target.variable!r} has missing values; "
            "resolve them before calibrating"
        )
    observed = np.unique(values)
    for level in observed:
        if level not in target.targets:
            raise CalibrationError(
                f"observed level {level!r} of {target.variable!r} has no target"
            )
    for level in target.targets:
        if level not in observed:
            raise CalibrationError(
                f"target level {level!r} of {target.variable!r} is not observed"
            )
    return values, observed


def _absolute_targets(frame: DesignFrame, target: MarginTarget) -> dict:
    """Convert percent/proportion targets to totals on the frame's scale."""
    if target.kind == "total":
        return dict(target.targets)
    grand = float(frame.w.sum())
    denom = 100.0 if target.kind == "percent" else 1.0
    return {level: value / denom * grand for level, value in target.targets.items()}


def _report(old_w, new_w, iterations, max_err, trimmed=0.0,
            history=()) -> CalibrationReport:
    ratio = new_w / old_w
    return CalibrationReport(iterations, float(max_err),
                             (float(ratio.min()), float(ratio.max())), trimmed,
                             tuple(history))


def poststratify(frame: DesignFrame, cross_target: MarginTarget
                 ) -> tuple[DesignFrame, CalibrationReport]:
    """One-pass ratio adjustment to a full cross-classification.

    ``cross_target.variable`` must label every row with its cell (build a
    crossed column first for multi-way cells). Cell totals match exactly
    afterwards, so applying the same targets twice is a no-op.
    """
    values, observed = _level_assignments(frame, cross_target)
    totals = _absolute_targets(frame, cross_target)
    new_w = frame.w.copy()
    max_err = 0.0
    for level in observed:
        cell = values == level
        current = float(frame.w[cell].sum())
        new_w[cell] = frame.w[cell] * (totals[level] / current)
        achieved = float(new_w[cell].sum())
        max_err = max(max_err, abs(achieved - totals[level]) / totals[level])
    return frame.with_weights(new_w), _report(frame.w, new_w, 1, max_err)


def rake(frame: DesignFrame, margins, tol: float = 1e-6, max_iter: int = 100
         ) -> tuple[DesignFrame, CalibrationReport]:
    """Cyclic proportional fitting over one-way margins.

    Margins given as totals must agree on their grand total within ``tol``
    (relative); percent/proportion margins are anchored to the frame's
    current weight total. Structural zeros (a positive target for a cell
    the sample cannot reach) surface as non-convergence after max_iter.
    """
    margins = list(margins)
    if not margins:
        raise CalibrationError("rake needs at least one margin")
    prepared = []
    grand_totals = []
    for margin in margins:
        values, observed = _level_assignments(frame, margin)
        totals = _absolute_targets(frame, margin)
        prepared.append((values, observed, totals))
        grand_totals.append(sum(totals.values()))
    spread = (max(grand_totals) - min(grand_totals)) / max(grand_totals)
    if spread > tol:
        raise CalibrationError(
            f"margin grand totals disagree by {spread:.3g} relative "
            f"(got {grand_totals})"
        )

    w = frame.w.copy()

    def max_margin_error() -> float:
        err = 0.0
        for values, observed, totals in prepared:
            for level in observed:
                current = float(w[values == level].sum())
                err = max(err, abs(current - totals[level]) / totals[level])
        return err

    err = max_margin_error()
    iterations = 0
    history = []
    for iterations in range(1, max_iter + 1):
        for values, observed, totals in prepared:
            for level in observed:
                cell = values == level
                current = float(w[cell].sum())
                if current > 0:
                    w[cell] *= totals[level] / current
        err = max_margin_error()
        history.append(err)
        if err <= tol:
            break
    if err > tol:
        raise CalibrationError(
            f"raking did not converge in {max_iter} iterations "
            f"(max margin error {err:.3g}); check for structural zeros"
        )
    return frame.with_weights(w), _report(frame.w, w, iterations, err,
                                          history=history)


def trim_weights(frame: DesignFrame, cap: float | None = None,
                 quantile: float | None = 0.99, redistribute: bool = True
                 ) -> tuple[DesignFrame, CalibrationReport]:
    """Cap extreme weights, optionally preserving stratum weight totals."""
    w = frame.w
    if cap is not None:
        if not cap > 0:
            raise CalibrationError(f"absolute cap must be positive, got {cap}")
        cap_value = float(cap)
    else:
        if not 0.5 < quantile < 1:
            raise CalibrationError(f"quantile cap must be in (0.5, 1), got {quantile}")
        cap_value = float(np.quantile(w, quantile))
    if cap_value < w.min():
        raise CalibrationError(
            f"cap {cap_value:.6g} is below the smallest weight {w.min():.6g}: "
            "everything would be trimmed"
        )
    trimmed = w > cap_value
    new_w = np.minimum(w, cap_value)
    trimmed_mass = float((w - new_w).sum())
    if redistribute and trimmed.any():
        for h in np.unique(frame.strata_codes):
            rows = frame.strata_codes == h
            spare = rows & ~trimmed
            excess = float((w[rows] - new_w[rows]).sum())
            if excess == 0.0:
                continue
            if not spare.any():
                continue  # whole stratum at cap: totals cannot be preserved
            new_w[spare] = new_w[spare] * (1 + excess / new_w[spare].sum())
    return frame.with_weights(new_w), _report(w, new_w, 1, 0.0, trimmed_mass)


def read_margins_csv(path, kind: str = "total"):
    """Read (variable, level, target) rows into MarginTarget objects."""
    table = read_csv(path, schema={"variable": "char"})
    variables = table.column("variable").values
    levels = table.column("level").values
    targets = table.column("target").values
    out = {}
    for var, level, target in zip(variables, levels, targets):
        out.setdefault(var, {})[float(level)] = float(target)
    return [MarginTarget(var, targets, kind) for var, targets in out.items()]
