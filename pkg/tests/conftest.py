"""Shared fixtures: synthetic design frames and NHANES data gating."""

import os
from pathlib import Path

import numpy as np
import pytest

NHANES_DIR = Path(os.environ.get("SURVEYML_NHANES_DIR", Path(__file__).parent.parent / "data" / "nhanes"))
NHANES_FILES = ["DEMO_L.xpt", "BMX_L.xpt", "BPXO_L.xpt", "DIQ_L.xpt"]


def nhanes_available() -> bool:
    return all((NHANES_DIR / f).exists() for f in NHANES_FILES)


requires_nhanes = pytest.mark.skipif(
    not nhanes_available(),
    reason="NHANES 2021-2023 files not present (this sandbox has no route to "
    "wwwn.cdc.gov; run scripts/fetch_nhanes.py on a networked machine and "
    "set SURVEYML_NHANES_DIR)",
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


def make_frame(n_strata=4, psus_per_stratum=3, rows_per_psu=5, seed=7,
               informative=False):
    """Small synthetic DesignFrame used across unit tests."""
    from surveyml.design import DesignFrame

    gen = np.random.default_rng(seed)
    strata, psu, y, x, w = [], [], [], [], []
    for s in range(n_strata):
        for c in range(psus_per_stratum):
            cluster_shift = gen.normal(0, 0.8)
            for _ in range(rows_per_psu):
                strata.append(float(s + 1))
                psu.append(float(c + 1))
                xv = gen.normal(0, 1)
                prob = 1 / (1 + np.exp(-(0.5 * xv + cluster_shift - 0.3)))
                y.append(float(gen.random() < prob))
                x.append(xv)
                base = gen.uniform(0.5, 4.0)
                w.append(base * (1 + 2 * y[-1]) if informative else base)
    data = {
        "y": np.array(y),
        "x": np.array(x),
        "w": np.array(w),
        "stratum": np.array(strata),
        "psu": np.array(psu),
    }
    return DesignFrame.from_columns(
        data, weight_name="w", strata_name="stratum", psu_name="psu",
        outcome_name="y",
    )


@pytest.fixture
def small_frame():
    return make_frame()
