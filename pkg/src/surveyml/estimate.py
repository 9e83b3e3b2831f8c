"""Weighted descriptive estimators with design-based standard errors.

Variances use the with-replacement stratified first-stage approximation:
for linearized residuals z_i, PSU totals Z_hj are formed within strata and

    Var = sum_h  n_h/(n_h-1) * sum_j (Z_hj - Zbar_h)^2

where n_h counts distinct PSUs in stratum h. The linearized residual for
the ratio mean is z_i = w_i (y_i - theta) / sum(w). Confidence intervals
are symmetric Wald with a 1.96 critical value; the degrees-of-freedom knob
(#PSUs - #strata) is reported on the frame but not applied by default.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from .design import DesignFrame
from .errors import EstimationError

__all__ = [
    "CompositionRow",
    "EstimateWithSE",
    "composition_table",
    "design_effect",
    "design_df",
    "srs_mean",
    "srs_se",
    "taylor_linearized_covariance",
    "taylor_linearized_variance",
    "weighted_mean",
    "weighted_proportion",
    "weighted_total",
]

Z95 = 1.96


@dataclass(frozen=True)
class EstimateWithSE:
    """Point estimate with a design-based standard error and Wald 95% CI."""

    point: float
    se: float
    ci95: tuple[float, float]
    n: int
    method: str  # "srs" | "taylor" | "replicate"

    @classmethod
    def from_point_se(cls, point, se, n, method):
        return cls(float(point), float(se),
                   (float(point - Z95 * se), float(point + Z95 * se)),
                   int(n), method)


@dataclass(frozen=True)
class CompositionRow:
    """One level of a sample-vs-population composition table."""

    level: object
    n: int
    sample_pct: float
    weighted_pct: float
    weighted_se: float
    diff_pp: float


def _domain_values(frame: DesignFrame, variable: str):
    values = frame.column(variable)
    if values.dtype == object:
        raise EstimationError(f"column {variable!r} is not numeric")
    mask = frame.domain & ~np.isnan(values)
    if not frame.domain.any():
        raise EstimationError("empty domain")
    if not mask.any():
        raise EstimationError(f"all values of {variable!r} missing in domain")
    return values, mask


def taylor_linearized_variance(frame: DesignFrame, z: np.ndarray) -> float:
    """Between-PSU variance of the total of linearized residuals z.

    ``z`` has one entry per row; rows outside the domain are zeroed. Lonely
    strata are resolved by the frame's policy.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (frame.n,):
        raise EstimationError("z must have one value per frame row")
    z = np.where(frame.domain, z, 0.0)
    h_of_psu = frame.variance_strata()
    psu_totals = np.bincount(frame.psu_codes, weights=z,
                             minlength=len(h_of_psu))
    var = 0.0
    for h in np.unique(h_of_psu):
        if h < 0:
            continue  # certainty stratum: zero contribution
        totals = psu_totals[h_of_psu == h]
        n_h = len(totals)
        if n_h < 2:
            continue
        dev = totals - totals.mean()
        var += n_h / (n_h - 1) * float(dev @ dev)
    return var


def taylor_linearized_covariance(frame: DesignFrame, z: np.ndarray) -> np.ndarray:
    """Matrix analogue of ``taylor_linearized_variance`` for (n, p) residuals.

    Returns the (p, p) between-PSU covariance of the column totals of z.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != frame.n:
        raise EstimationError("z must be an (n, p) matrix")
    z = np.where(frame.domain[:, None], z, 0.0)
    h_of_psu = frame.variance_strata()
    p = z.shape[1]
    psu_totals = np.zeros((len(h_of_psu), p))
    np.add.at(psu_totals, frame.psu_codes, z)
    cov = np.zeros((p, p))
    for h in np.unique(h_of_psu):
        if h < 0:
            continue
        totals = psu_totals[h_of_psu == h]
        n_h = len(totals)
        if n_h < 2:
            continue
        dev = totals - totals.mean(axis=0)
        cov += n_h / (n_h - 1) * dev.T @ dev
    return cov


def weighted_mean(frame: DesignFrame, variable: str) -> EstimateWithSE:
    """Ratio-estimator mean of a numeric column over the current domain."""
    values, mask = _domain_values(frame, variable)
    wm = frame.w[mask]
    ym = values[mask]
    sw = wm.sum()
    point = float((wm * ym).sum() / sw)
    z = np.zeros(frame.n)
    z[mask] = wm * (ym - point) / sw
    se = float(np.sqrt(taylor_linearized_variance(frame, z)))
    return EstimateWithSE.from_point_se(point, se, int(mask.sum()), "taylor")


def weighted_total(frame: DesignFrame, variable: str) -> float:
    """Horvitz-Thompson total of a column over the current domain."""
    values, mask = _domain_values(frame, variable)
    return float((frame.w * values)[mask].sum())


def weighted_proportion(frame: DesignFrame, indicator: str) -> EstimateWithSE:
    """Weighted prevalence of a 0/1 column, in percent."""
    values, mask = _domain_values(frame, indicator)
    present = values[mask]
    if not np.isin(present, (0.0, 1.0)).all():
        raise EstimationError(f"column {indicator!r} is not a 0/1 indicator")
    est = weighted_mean(frame, indicator)
    return EstimateWithSE.from_point_se(100 * est.point, 100 * est.se, est.n,
                                        est.method)


def srs_se(values: np.ndarray) -> float:
    """Simple-random-sampling standard error, s / sqrt(n)."""
    values = np.asarray(values, dtype=np.float64)
    values = values[~np.isnan(values)]
    n = len(values)
    if n < 2:
        raise EstimationError(f"need at least 2 values for an SRS SE, got {n}")
    return float(values.std(ddof=1) / np.sqrt(n))


def srs_mean(frame: DesignFrame, variable: str, percent: bool = False) -> EstimateWithSE:
    """Unweighted mean with the naive i.i.d. standard error."""
    values, mask = _domain_values(frame, variable)
    present = values[mask]
    scale = 100.0 if percent else 1.0
    return EstimateWithSE.from_point_se(
        scale * float(present.mean()), scale * srs_se(present), len(present), "srs"
    )


def design_df(frame: DesignFrame) -> int:
    """Conventional design degrees of freedom: #PSUs - #strata."""
    return int(len(frame.psu_strata) - len(frame.strata_labels))


def design_effect(frame: DesignFrame, variable: str) -> tuple[float, float]:
    """Design effect of the mean and the implied effective sample size."""
    values, mask = _domain_values(frame, variable)
    present = values[mask]
    n = len(present)
    var_srs = float(present.var(ddof=1) / n)
    if var_srs == 0.0:
        raise EstimationError(f"zero SRS variance for {variable!r}")
    var_design = weighted_mean(frame, variable).se ** 2
    deff = var_design / var_srs
    return deff, (n / deff if deff > 0 else math.inf)


def composition_table(frame: DesignFrame, categorical: str,
                      max_levels: int = 50) -> list[CompositionRow]:
    """Sample vs weighted composition of a categorical column.

    One row per observed level in the domain; weighted percentages come
    from the weighted proportion of the level indicator.
    """
    values = frame.column(categorical)
    if values.dtype == object:
        mask = frame.domain & np.array([v is not None and v != "" for v in values])
    else:
        mask = frame.domain & ~np.isnan(values)
    if not mask.any():
        raise EstimationError(f"all values of {categorical!r} missing in domain")
    levels = np.unique(values[mask])
    if len(levels) > max_levels:
        raise EstimationError(
            f"{categorical!r} has {len(levels)} levels, exceeding {max_levels}"
        )
    n_total = int(mask.sum())
    rows = []
    for level in levels:
        indicator = np.where(mask, (values == level).astype(np.float64), np.nan)
        work = dict(frame.data)
        work["__level__"] = indicator
        level_frame = DesignFrame(
            work, frame.weight_name, frame.strata_name, frame.psu_name,
            domain=frame.domain, lonely_policy=frame.lonely_policy,
        )
        est = weighted_proportion(level_frame, "__level__")
        n_level = int((indicator == 1.0).sum())
        sample_pct = 100.0 * n_level / n_total
        rows.append(CompositionRow(
            level=level, n=n_level, sample_pct=sample_pct,
            weighted_pct=est.point, weighted_se=est.se,
            diff_pp=est.point - sample_pct,
        ))
    return rows
