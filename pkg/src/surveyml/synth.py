"""Synthetic finite populations with a census truth oracle.

A Population is a fully enumerated census of units carrying features,
a binary outcome drawn from a logistic model with cluster random
intercepts (intra-cluster correlation on the latent logistic scale), and
the stratum/cluster structure of a two-stage design. Samples drawn from
it carry exact inverse-probability weights, so any design-based estimator
can be validated against exhaustive census enumeration.

Sampling is two-stage: simple random sampling of clusters within each
stratum, then (optionally score-driven) probability-proportional-to-score
systematic sampling of units inside each selected cluster. Inclusion
probabilities are exact by construction; variance estimation downstream
uses the with-replacement first-stage approximation, as everywhere else
in the package.

The frozen REFERENCE_SPEC/REFERENCE_DESIGN pair anchors the Monte Carlo
oracle suite (Horvitz-Thompson consistency, unweighted-bias direction
under informative sampling, and Taylor confidence-interval coverage).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .design import DesignFrame
from .errors import DesignError
from .estimate import weighted_mean

__all__ = [
    "Population",
    "PopulationSpec",
    "REFERENCE_DESIGN",
    "REFERENCE_SPEC",
    "StratumSpec",
    "census_value",
    "draw_sample",
    "gen_population",
    "oracle_suite",
]

_LOGISTIC_VAR = math.pi ** 2 / 3


@dataclass(frozen=True)
class StratumSpec:
    """One stratum: cluster layout and outcome model."""

    label: float
    n_clusters: int
    cluster_size_range: tuple[int, int]
    outcome_intercept: float
    outcome_coefs: tuple[float, float]  # on (x1, x2)
    icc: float = 0.0
    x1_shift: float = 0.0

    def __post_init__(self):
        lo, hi = self.cluster_size_range
        if lo < 1 or hi < lo:
            raise DesignError("cluster sizes must be >= 1 with lo <= hi")
        if not 0 <= self.icc < 1:
            raise DesignError("intra-cluster correlation must be in [0, 1)")


@dataclass(frozen=True)
class PopulationSpec:
    """Census layout plus an optional informative selection model.

    ``selection_coefs`` maps feature name ("x1"/"x2") to a log-linear
    coefficient of the within-cluster selection score; an empty map means
    equal-probability second-stage sampling.
    """

    strata: tuple
    selection_coefs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Population:
    """A fully enumerated census; cluster rows are stored contiguously."""

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    stratum: np.ndarray
    cluster: np.ndarray  # globally unique cluster ids
    spec: PopulationSpec

    @property
    def size(self) -> int:
        return len(self.y)

    @cached_property
    def cluster_bounds(self) -> np.ndarray:
        """(C, 2) start/end row of each cluster id."""
        ids = np.arange(int(self.cluster.max()) + 1, dtype=np.float64)
        starts = np.searchsorted(self.cluster, ids, side="left")
        ends = np.searchsorted(self.cluster, ids, side="right")
        return np.column_stack([starts, ends])

    @cached_property
    def clusters_of_stratum(self) -> dict:
        out = {}
        for st in self.spec.strata:
            members = self.stratum == st.label
            out[st.label] = np.unique(self.cluster[members])
        return out


def gen_population(spec: PopulationSpec, seed: int) -> Population:
    """Deterministic census generation for a given seed."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    x1, x2, y, stratum, cluster = [], [], [], [], []
    next_cluster = 0
    for st in spec.strata:
        sigma = math.sqrt(st.icc / (1 - st.icc) * _LOGISTIC_VAR) if st.icc else 0.0
        lo, hi = st.cluster_size_range
        for _ in range(st.n_clusters):
            size = int(rng.integers(lo, hi + 1))
            b = rng.normal(0.0, sigma) if sigma else 0.0
            u1 = rng.normal(st.x1_shift, 1.0, size)
            u2 = rng.normal(0.0, 1.0, size)
            eta = (st.outcome_intercept + st.outcome_coefs[0] * u1
                   + st.outcome_coefs[1] * u2 + b)
            out = (rng.random(size) < 1 / (1 + np.exp(-eta))).astype(np.float64)
            x1.append(u1)
            x2.append(u2)
            y.append(out)
            stratum.append(np.full(size, st.label))
            cluster.append(np.full(size, float(next_cluster)))
            next_cluster += 1
    return Population(np.concatenate(x1), np.concatenate(x2), np.concatenate(y),
                      np.concatenate(stratum), np.concatenate(cluster), spec)


def _selection_scores(pop: Population, rows: np.ndarray) -> np.ndarray:
    coefs = pop.spec.selection_coefs
    if not coefs:
        return np.ones(len(rows))
    log_score = np.zeros(len(rows))
    for name, coef in coefs.items():
        log_score += coef * getattr(pop, name)[rows]
    return np.exp(log_score)


def _pps_systematic(scores: np.ndarray, take: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Systematic PPS without replacement; returns (picked index, pi).

    Units whose scaled probability would exceed one become certainties and
    the remainder is rescaled, so the returned inclusion probabilities are
    exact.
    """
    n = len(scores)
    take = min(take, n)
    pi = np.empty(n)
    certain = np.zeros(n, dtype=bool)
    remaining = take
    while True:
        free = ~certain
        p = remaining * scores[free] / scores[free].sum()
        over = p > 1
        if not over.any():
            pi[free] = p
            pi[certain] = 1.0
            break
        newly = np.flatnonzero(free)[over]
        certain[newly] = True
        remaining -= len(newly)
        if remaining <= 0:
            pi[:] = 0.0
            pi[certain] = 1.0
            break
    picked = np.flatnonzero(certain).tolist()
    free = np.flatnonzero(~certain)
    if remaining > 0 and len(free):
        order = rng.permutation(len(free))
        p_free = pi[free][order]
        start = rng.random()
        cum = np.cumsum(p_free)
        marks = start + np.arange(remaining)
        chosen = np.searchsorted(cum, marks, side="right")
        chosen = np.clip(chosen, 0, len(free) - 1)
        picked.extend(free[order[np.unique(chosen)]].tolist())
    return np.array(sorted(picked), dtype=np.intp), pi


def draw_sample(pop: Population, design: dict, seed: int) -> DesignFrame:
    """Two-stage sample with exact weights w = 1 / pi.

    ``design`` keys: ``psus_per_stratum`` and ``units_per_psu``, each an
    int or a stratum-label -> int map. Selecting everything returns the
    census with unit weights.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    take_map = design["psus_per_stratum"]
    units_map = design["units_per_psu"]
    bounds = pop.cluster_bounds
    rows_out = []
    pi_out = []
    for st in pop.spec.strata:
        clusters = pop.clusters_of_stratum[st.label]
        m_h = take_map[st.label] if isinstance(take_map, dict) else int(take_map)
        units = units_map[st.label] if isinstance(units_map, dict) else int(units_map)
        if m_h > len(clusters):
            raise DesignError(
                f"stratum {st.label!r} has {len(clusters)} PSUs, requested {m_h}"
            )
        chosen = rng.choice(clusters, size=m_h, replace=False)
        pi1 = m_h / len(clusters)
        for c in np.sort(chosen):
            start, end = bounds[int(c)]
            unit_rows = np.arange(start, end, dtype=np.intp)
            scores = _selection_scores(pop, unit_rows)
            picked, pi2 = _pps_systematic(scores, units, rng)
            rows_out.append(unit_rows[picked])
            pi_out.append(pi1 * pi2[picked])
    rows = np.concatenate(rows_out)
    pi = np.concatenate(pi_out)
    data = {
        "y": pop.y[rows],
        "x1": pop.x1[rows],
        "x2": pop.x2[rows],
        "w": 1.0 / pi,
        "stratum": pop.stratum[rows],
        "psu": pop.cluster[rows],
        "pi": pi,
    }
    return DesignFrame.from_columns(data, weight_name="w", strata_name="stratum",
                                    psu_name="psu", outcome_name="y",
                                    feature_names=("x1", "x2"))


def census_value(pop: Population, statistic: str, variable=None) -> float:
    """Exact enumeration over the census.

    ``statistic`` is "mean" or "proportion" (of a named unit attribute) or
    "auroc" with ``variable`` an array of census-aligned scores, evaluated
    by exhaustive pairwise comparison in blocks.
    """
    if statistic in ("mean", "proportion"):
        values = getattr(pop, variable or "y")
        return float(values.mean())
    if statistic == "auroc":
        scores = np.asarray(variable, dtype=np.float64)
        if scores.shape != pop.y.shape:
            raise DesignError("scores must align with the census")
        pos = scores[pop.y == 1.0]
        neg = scores[pop.y == 0.0]
        if len(pos) == 0 or len(neg) == 0:
            raise DesignError("census AUROC needs both classes")
        total = 0.0
        block = 512
        for i in range(0, len(pos), block):
            chunk = pos[i:i + block][:, None]
            total += float((chunk > neg).sum()) + 0.5 * float((chunk == neg).sum())
        return total / (len(pos) * len(neg))
    raise DesignError(f"unknown census statistic {statistic!r}")


# Frozen reference configuration for Monte Carlo oracles. Constants are
# part of the package contract: golden values in the tests depend on them.
REFERENCE_SPEC = PopulationSpec(
    strata=tuple(
        StratumSpec(
            label=float(h + 1),
            n_clusters=48,
            cluster_size_range=(14, 26),
            outcome_intercept=-1.1 + 0.12 * h,
            outcome_coefs=(0.8, -0.5),
            icc=0.05,
            x1_shift=0.15 * (h - 4.5),
        )
        for h in range(10)
    ),
    selection_coefs={"x1": 0.5},
)

REFERENCE_DESIGN = {"psus_per_stratum": 8, "units_per_psu": 14}


def oracle_suite(spec: PopulationSpec = REFERENCE_SPEC,
                 design: dict = REFERENCE_DESIGN,
                 pop_seed: int = 20240501,
                 consistency_draws: int = 200,
                 coverage_draws: int = 1000) -> dict:
    """Monte Carlo validation of the design-based machinery.

    Returns consistency (|weighted - census| < 3 SE rate), the rate at
    which the unweighted mean is farther from the census value than the
    weighted one (informative-sampling bias direction), and Taylor 95% CI
    coverage of the census mean.
    """
    pop = gen_population(spec, pop_seed)
    truth = census_value(pop, "proportion", "y")

    within_3se = 0
    unweighted_worse = 0
    covered = 0
    for draw in range(max(consistency_draws, coverage_draws)):
        frame = draw_sample(pop, design, seed=1_000_000 + draw)
        est = weighted_mean(frame, "y")
        if draw < consistency_draws:
            if abs(est.point - truth) < 3 * est.se:
                within_3se += 1
            naive = float(frame.column("y").mean())
            if abs(naive - truth) > abs(est.point - truth):
                unweighted_worse += 1
        if draw < coverage_draws:
            lo, hi = est.ci95
            covered += lo <= truth <= hi
    return {
        "census_value": truth,
        "consistency_rate": within_3se / consistency_draws,
        "unweighted_worse_rate": unweighted_worse / consistency_draws,
        "coverage": covered / coverage_draws,
    }
