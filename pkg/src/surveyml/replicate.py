"""Replicate weights (JKn, BRR/Fay, Rao-Wu bootstrap) and variance combining.

Replicates are stored as per-row multipliers on the base weights together
with per-replicate variance coefficients, so the combined variance is

    Var = sum_r coef_r * (theta_r - theta)^2.

JKn deletes one PSU per replicate with stratum rescaling n_h/(n_h-1) and
coef (n_h-1)/n_h; for linear statistics this reproduces the Taylor
linearization exactly. BRR needs exactly two PSUs per stratum and takes
half-samples from a Sylvester Hadamard matrix; Fay's rho softens the 2/0
multipliers to (2-rho)/rho. The Rao-Wu bootstrap redraws n_h - 1 PSUs per
stratum with replacement using a counter-based generator (Philox) so a
fixed seed reproduces bit-identically everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignFrame
from .errors import DesignError, EstimationError
from .estimate import EstimateWithSE
from .ingest import Column, RawTable, read_csv, write_csv

__all__ = [
    "ReplicateSet",
    "make_bootstrap_weights",
    "make_brr_weights",
    "make_jackknife_weights",
    "read_replicates_csv",
    "replicate_variance",
    "sylvester_hadamard",
    "write_replicates_csv",
]


@dataclass(frozen=True)
class ReplicateSet:
    """R replicate multiplier vectors plus variance coefficients."""

    method: str  # "jkn" | "brr" | "fay" | "bootstrap"
    multipliers: np.ndarray  # shape (R, n), all >= 0
    coef: np.ndarray  # shape (R,)
    seed: int | None = None

    def __post_init__(self):
        if self.multipliers.ndim != 2 or self.multipliers.shape[0] < 1:
            raise DesignError("replicate multipliers must be a (R, n) matrix, R >= 1")
        if (self.multipliers < 0).any():
            raise DesignError("replicate multipliers must be nonnegative")
        if self.coef.shape != (self.multipliers.shape[0],):
            raise DesignError("one variance coefficient per replicate required")

    @property
    def r(self) -> int:
        return self.multipliers.shape[0]


def make_jackknife_weights(frame: DesignFrame) -> ReplicateSet:
    """Delete-one-PSU (JKn) replicates, one per PSU."""
    h_of_psu = frame.variance_strata()
    if (h_of_psu < 0).any():
        # certainty PSUs contribute zero variance: no replicate deletes them
        keep_psu = np.flatnonzero(h_of_psu >= 0)
    else:
        keep_psu = np.arange(len(h_of_psu))
    reps = []
    coefs = []
    psu_codes = frame.psu_codes
    for j in keep_psu:
        h = h_of_psu[j]
        n_h = int((h_of_psu == h).sum())
        if n_h < 2:
            raise DesignError(f"stratum of PSU {j} has a single PSU after policy")
        mult = np.ones(frame.n)
        same_stratum = h_of_psu[psu_codes] == h
        mult[same_stratum] = n_h / (n_h - 1)
        mult[psu_codes == j] = 0.0
        reps.append(mult)
        coefs.append((n_h - 1) / n_h)
    return ReplicateSet("jkn", np.array(reps), np.array(coefs))


def sylvester_hadamard(order: int) -> np.ndarray:
    """Sylvester Hadamard matrix; order must be a power of two."""
    if order < 1 or order & (order - 1):
        raise DesignError(f"Sylvester construction needs a power of two, got {order}")
    h = np.array([[1.0]])
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def make_brr_weights(frame: DesignFrame, fay_rho: float = 0.0) -> ReplicateSet:
    """Balanced repeated replication via half-samples, optional Fay rho.

    Requires exactly two PSUs in every stratum. The replicate count is the
    smallest power of two >= max(#strata, 4); stratum h follows column h of
    the Hadamard matrix, the selected PSU gets multiplier (2 - rho), the
    other rho, and coef_r = 1 / (R (1-rho)^2).
    """
    if not 0 <= fay_rho < 1:
        raise DesignError(f"Fay rho must be in [0, 1), got {fay_rho}")
    counts = frame.psu_per_stratum
    if (counts != 2).any():
        raise DesignError("BRR requires exactly 2 PSUs in every stratum")
    n_strata = len(counts)
    order = 4
    while order < n_strata:
        order *= 2
    hadamard = sylvester_hadamard(order)

    # Index of each row's PSU within its stratum (0 = first by code).
    psu_codes = frame.psu_codes
    h_of_psu = frame.psu_strata
    first_psu_of_stratum = np.full(n_strata, -1, dtype=np.intp)
    for code, h in enumerate(h_of_psu):
        if first_psu_of_stratum[h] < 0:
            first_psu_of_stratum[h] = code
    is_first = first_psu_of_stratum[h_of_psu[psu_codes]] == psu_codes

    reps = np.empty((order, frame.n))
    row_stratum = frame.strata_codes
    for r in range(order):
        pick_first = hadamard[r, row_stratum] > 0
        selected = pick_first == is_first
        reps[r] = np.where(selected, 2.0 - fay_rho, fay_rho)
    coef = np.full(order, 1.0 / (order * (1.0 - fay_rho) ** 2))
    method = "fay" if fay_rho else "brr"
    return ReplicateSet(method, reps, coef)


def make_bootstrap_weights(frame: DesignFrame, b: int, seed: int) -> ReplicateSet:
    """Rao-Wu rescaled bootstrap: n_h - 1 PSUs redrawn per stratum.

    Row multipliers are m_hj * n_h / (n_h - 1) with m_hj the PSU's draw
    count, so each row's multiplier has expectation 1. Uses the Philox
    counter-based generator for cross-platform reproducibility.
    """
    if b < 1:
        raise DesignError(f"bootstrap needs B >= 1 replicates, got {b}")
    h_of_psu = frame.variance_strata()
    counts = np.bincount(h_of_psu[h_of_psu >= 0])
    if (counts[counts > 0] < 2).any():
        raise DesignError("bootstrap requires >= 2 PSUs per stratum")
    rng = np.random.Generator(np.random.Philox(key=seed))
    n_psu = len(h_of_psu)
    psu_codes = frame.psu_codes
    reps = np.empty((b, frame.n))
    strata = [np.flatnonzero(h_of_psu == h) for h in np.unique(h_of_psu) if h >= 0]
    for r in range(b):
        draw_count = np.zeros(n_psu)
        for members in strata:
            n_h = len(members)
            picks = rng.integers(0, n_h, size=n_h - 1)
            draw_count[members] += np.bincount(picks, minlength=n_h) * (n_h / (n_h - 1))
        reps[r] = draw_count[psu_codes]
    coef = np.full(b, 1.0 / b)
    return ReplicateSet("bootstrap", reps, coef, seed=seed)


def replicate_variance(statistic, frame: DesignFrame, reps: ReplicateSet,
                       ci: str = "wald") -> EstimateWithSE:
    """Combine replicate estimates of ``statistic(frame) -> float``.

    ``ci`` selects Wald (point +- 1.96 se) or percentile intervals; the
    percentile form is the default choice for non-smooth statistics like
    the AUROC when called through ``metrics.metric_ci``.
    """
    theta = float(statistic(frame))
    values = np.empty(reps.r)
    for r in range(reps.r):
        try:
            values[r] = statistic(frame.with_weights(frame.w * reps.multipliers[r]))
        except Exception as exc:
            raise EstimationError(f"statistic failed on replicate {r}: {exc}") from exc
    var = float(reps.coef @ (values - theta) ** 2)
    se = float(np.sqrt(var))
    if ci == "percentile":
        lo, hi = np.quantile(values, [0.025, 0.975])
        return EstimateWithSE(theta, se, (float(lo), float(hi)), frame.n, "replicate")
    return EstimateWithSE.from_point_se(theta, se, frame.n, "replicate")


def write_replicates_csv(reps: ReplicateSet, path) -> None:
    """One replicate per row: its variance coefficient then n multipliers."""
    n = reps.multipliers.shape[1]
    cols = [Column("coef", reps.coef.copy())]
    for i in range(n):
        cols.append(Column(f"m{i + 1:06d}", reps.multipliers[:, i].copy()))
    write_csv(RawTable("replicates", cols), path)


def read_replicates_csv(path, method: str = "imported") -> ReplicateSet:
    """Read a replicate multiplier file written by write_replicates_csv."""
    table = read_csv(path)
    names = sorted(n for n in table.column_names if n.startswith("m"))
    mult = np.column_stack([table.column(n).values for n in names])
    return ReplicateSet(method, mult, table.column("coef").values)
