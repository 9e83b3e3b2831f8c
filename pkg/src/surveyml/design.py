"""Survey design frames: weights, strata, PSUs, and domain masks.

A DesignFrame is columnar and immutable. Every row carries a positive
weight, a stratum label, and a PSU label interpreted as nested within its
stratum, so PSU identity is the (stratum, psu) pair. Domain restriction
never removes rows: masked-out rows keep their weights and design labels
so that domain estimands get correct design-based variances.

Strata with a single PSU ("lonely" PSUs) are resolved by the frame's
policy when variances are formed: "adjacent-collapse" merges the lonely
stratum with the next stratum label for variance only, "certainty" makes
it contribute zero variance, and "error" refuses.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import DesignError
from .ingest import Column, RawTable, write_csv

__all__ = [
    "DesignDiagnostics",
    "DesignFrame",
    "build_design",
    "frame_to_csv",
    "subset_domain",
    "validate_design",
]

LONELY_POLICIES = ("adjacent-collapse", "certainty", "error")


@dataclass(frozen=True)
class DesignFrame:
    """Immutable container of observations plus survey-design metadata."""

    data: dict[str, np.ndarray]
    weight_name: str
    strata_name: str
    psu_name: str
    outcome_name: str | None = None
    feature_names: tuple[str, ...] = ()
    domain: np.ndarray = field(default=None)  # type: ignore[assignment]
    lonely_policy: str = "adjacent-collapse"
    drop_count: int = 0

    def __post_init__(self):
        if self.lonely_policy not in LONELY_POLICIES:
            raise DesignError(f"unknown lonely-PSU policy {self.lonely_policy!r}")
        for name in (self.weight_name, self.strata_name, self.psu_name):
            if name not in self.data:
                raise DesignError(f"missing design column {name!r}")
        # Base weights must be strictly positive (build_design enforces it);
        # replicate-adjusted frames legitimately carry zeros for deleted PSUs.
        w = self.data[self.weight_name]
        bad = np.flatnonzero(~(w >= 0) | ~np.isfinite(w))
        if bad.size:
            raise DesignError(
                f"negative or non-finite weight at row {int(bad[0])}: {w[bad[0]]!r}"
            )
        if self.domain is None:
            object.__setattr__(self, "domain", np.ones(len(w), dtype=bool))
        if self.outcome_name is not None and self.outcome_name not in self.data:
            raise DesignError(f"missing outcome column {self.outcome_name!r}")
        for f in self.feature_names:
            if f not in self.data:
                raise DesignError(f"missing feature column {f!r}")

    @classmethod
    def from_columns(cls, data, weight_name, strata_name, psu_name,
                     outcome_name=None, feature_names=(), domain=None,
                     lonely_policy="adjacent-collapse", drop_count=0):
        """Build a frame from a name->array mapping (arrays are copied)."""
        clean = {}
        for name, values in data.items():
            arr = np.asarray(values)
            if arr.dtype != object:
                arr = arr.astype(np.float64, copy=True)
            else:
                arr = arr.copy()
            clean[name] = arr
        return cls(clean, weight_name, strata_name, psu_name, outcome_name,
                   tuple(feature_names), domain, lonely_policy, drop_count)

    # -- basic accessors ----------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.data[self.weight_name])

    @property
    def w(self) -> np.ndarray:
        return self.data[self.weight_name]

    def column(self, name: str) -> np.ndarray:
        if name not in self.data:
            raise DesignError(f"no column {name!r} in design frame")
        return self.data[name]

    # -- design structure ---------------------------------------------------
    @cached_property
    def strata_codes(self) -> np.ndarray:
        """Per-row stratum index, ordered by sorted stratum label."""
        _, inverse = np.unique(self.data[self.strata_name], return_inverse=True)
        return inverse.astype(np.intp)

    @cached_property
    def strata_labels(self) -> np.ndarray:
        return np.unique(self.data[self.strata_name])

    @cached_property
    def psu_codes(self) -> np.ndarray:
        """Per-row index of the (stratum, PSU) pair, PSUs nested in strata."""
        pair = np.column_stack([self.strata_codes, self.data[self.psu_name]])
        _, inverse = np.unique(pair, axis=0, return_inverse=True)
        return inverse.astype(np.intp)

    @cached_property
    def psu_strata(self) -> np.ndarray:
        """Stratum code of each distinct (stratum, PSU) pair."""
        out = np.empty(self.psu_codes.max() + 1, dtype=np.intp)
        out[self.psu_codes] = self.strata_codes
        return out

    @cached_property
    def psu_per_stratum(self) -> np.ndarray:
        """Distinct PSU count per stratum code."""
        return np.bincount(self.psu_strata, minlength=len(self.strata_labels))

    def variance_strata(self) -> np.ndarray:
        """Stratum code per PSU after applying the lonely-PSU policy.

        Codes are suitable for the between-PSU variance sum; a code of -1
        marks PSUs excluded from variance (certainty policy).
        """
        counts = self.psu_per_stratum
        lonely = np.flatnonzero(counts == 1)
        h_of_psu = self.psu_strata.copy()
        if lonely.size == 0:
            return h_of_psu
        if self.lonely_policy == "error":
            labels = self.strata_labels[lonely]
            raise DesignError(f"lonely PSU in strata {labels.tolist()}")
        if self.lonely_policy == "certainty":
            h_of_psu[np.isin(h_of_psu, lonely)] = -1
            return h_of_psu
        # adjacent-collapse: merge each lonely stratum with the next label
        # (the previous one for the last), repeating until none are lonely.
        n_strata = len(counts)
        if n_strata == 1:
            raise DesignError("single stratum with a single PSU: variance undefined")
        merge_into = np.arange(n_strata)
        counts = counts.copy()
        while True:
            lonely = np.flatnonzero(counts == 1)
            if lonely.size == 0:
                break
            h = int(lonely[0])
            later = np.flatnonzero(counts > 0)
            later = later[later != h]
            if later.size == 0:
                raise DesignError("cannot collapse: no companion stratum left")
            above = later[later > h]
            target = int(above[0]) if above.size else int(later[-1])
            counts[target] += counts[h]
            counts[h] = 0
            merge_into[merge_into == h] = target
        return merge_into[h_of_psu]

    # -- derived frames -----------------------------------------------------
    def with_weights(self, new_w: np.ndarray) -> "DesignFrame":
        """Same design, new weight vector (used by calibration/replication)."""
        new_w = np.asarray(new_w, dtype=np.float64)
        if new_w.shape != (self.n,):
            raise DesignError("replacement weights have wrong length")
        data = dict(self.data)
        data[self.weight_name] = new_w
        return replace(self, data=data)

    def take(self, rows: np.ndarray) -> "DesignFrame":
        """Row subset as a new frame (used by CV training splits)."""
        rows = np.asarray(rows)
        data = {k: v[rows] for k, v in self.data.items()}
        return replace(self, data=data, domain=self.domain[rows])


@dataclass(frozen=True)
class DesignDiagnostics:
    """Structural summary produced by validate_design."""

    n: int
    strata_count: int
    psu_per_stratum: dict
    lonely_psu_strata: list
    weight_cv: float
    weight_range: tuple[float, float]
    drop_count: int


def build_design(table: RawTable, mapping: dict) -> DesignFrame:
    """Construct a DesignFrame from an ingested table.

    ``mapping`` names the weight, strata and psu columns and optionally the
    outcome and features. Rows with a missing weight, stratum, or PSU are
    dropped and counted in ``drop_count``; a nonpositive weight is an error.
    """
    for key in ("weight", "strata", "psu"):
        if key not in mapping:
            raise DesignError(f"design mapping must name a {key!r} column")
        if mapping[key] not in table:
            raise DesignError(f"mapped {key} column {mapping[key]!r} not in table")
    numeric = {c.name: c.values for c in table.columns if c.kind == "numeric"}
    chars = {c.name: c.values for c in table.columns if c.kind == "char"}
    for key in ("weight", "strata", "psu"):
        if mapping[key] not in numeric:
            raise DesignError(f"design column {mapping[key]!r} must be numeric")

    keep = ~(
        np.isnan(numeric[mapping["weight"]])
        | np.isnan(numeric[mapping["strata"]])
        | np.isnan(numeric[mapping["psu"]])
    )
    dropped = int((~keep).sum())
    data = {name: vals[keep] for name, vals in numeric.items()}
    data.update({name: vals[keep] for name, vals in chars.items()})

    w = data[mapping["weight"]]
    bad = np.flatnonzero(w <= 0)
    if bad.size:
        raise DesignError(f"nonpositive weight at row {int(bad[0])}: {w[bad[0]]!r}")

    return DesignFrame.from_columns(
        data,
        weight_name=mapping["weight"],
        strata_name=mapping["strata"],
        psu_name=mapping["psu"],
        outcome_name=mapping.get("outcome"),
        feature_names=tuple(mapping.get("features", ())),
        lonely_policy=mapping.get("lonely_policy", "adjacent-collapse"),
        drop_count=dropped,
    )


def validate_design(frame: DesignFrame) -> DesignDiagnostics:
    """Structural diagnostics; lonely PSUs are reported, never raised."""
    counts = frame.psu_per_stratum
    labels = frame.strata_labels
    lonely = [labels[i] for i in np.flatnonzero(counts == 1)]
    w = frame.w
    return DesignDiagnostics(
        n=frame.n,
        strata_count=len(labels),
        psu_per_stratum={labels[i]: int(c) for i, c in enumerate(counts)},
        lonely_psu_strata=lonely,
        weight_cv=float(np.std(w) / np.mean(w)),
        weight_range=(float(w.min()), float(w.max())),
        drop_count=frame.drop_count,
    )


def subset_domain(frame: DesignFrame, predicate) -> DesignFrame:
    """Restrict the estimation domain without touching design structure.

    ``predicate`` is either a boolean mask or a callable evaluated on a
    per-row mapping view. The new mask intersects any existing one; strata
    and PSU structure are unchanged. An empty domain is an error.
    """
    if callable(predicate):
        names = list(frame.data)
        mask = np.fromiter(
            (bool(predicate({k: frame.data[k][i] for k in names}))
             for i in range(frame.n)),
            dtype=bool, count=frame.n,
        )
    else:
        mask = np.asarray(predicate, dtype=bool)
        if mask.shape != (frame.n,):
            raise DesignError("domain mask has wrong length")
    mask = mask & frame.domain
    if not mask.any():
        raise DesignError("empty domain: no rows satisfy the predicate")
    return replace(frame, domain=mask)


def frame_to_csv(frame: DesignFrame, path) -> None:
    """Debug export: every column plus the domain mask."""
    cols = []
    for name, values in frame.data.items():
        kind = "char" if values.dtype == object else "numeric"
        cols.append(Column(name, values.copy(), {}, kind))
    cols.append(Column("domain_mask", frame.domain.astype(float)))
    write_csv(RawTable("design", cols), path)
