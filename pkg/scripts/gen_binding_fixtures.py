#!/usr/bin/env python3
"""Regenerate the shared parity fixtures for the TypeScript bindings.

Inputs and expected outputs are computed by this package and frozen into
bindings/fixtures/parity.json; the bindings' test suite replays the
inputs through the CLI api endpoint and requires bit-for-bit agreement.
"""

import json
from pathlib import Path

import numpy as np

from surveyml.cli import run_api


def main() -> None:
    gen = np.random.default_rng(20240817)
    cases = []

    hand = {
        "op": "weighted_auroc",
        "labels": [1.0, 1.0, 0.0, 0.0],
        "scores": [0.9, 0.4, 0.5, 0.1],
        "weights": [1.0, 2.0, 1.0, 3.0],
    }
    cases.append({"name": "auroc_hand_four_pairs", "request": hand})

    n = 60
    labels = gen.integers(0, 2, n).astype(float)
    labels[0], labels[-1] = 1.0, 0.0
    cases.append({"name": "auroc_equal_weights", "request": {
        "op": "weighted_auroc",
        "labels": labels.tolist(),
        "scores": gen.normal(0, 1, n).round(6).tolist(),
        "weights": [1.0] * n,
    }})

    n = 200
    labels = gen.integers(0, 2, n).astype(float)
    labels[0], labels[-1] = 1.0, 0.0
    cases.append({"name": "auroc_weighted_ties", "request": {
        "op": "weighted_auroc",
        "labels": labels.tolist(),
        "scores": (gen.integers(0, 9, n) / 8).tolist(),
        "weights": gen.uniform(0.2, 6.0, n).round(6).tolist(),
    }})

    cases.append({"name": "sens_spec_hand", "request": {
        "op": "weighted_sens_spec",
        "labels": [1.0, 1, 1, 0, 0, 0],
        "scores": [0.9, 0.3, 0.6, 0.7, 0.2, 0.5],
        "weights": [1.0, 2, 3, 4, 5, 6],
        "threshold": 0.5,
    }})

    strata = np.repeat(np.arange(1.0, 5.0), 12)
    psu = np.tile(np.repeat(np.arange(1.0, 7.0), 2), 4)
    cases.append({"name": "psu_kfold_3x2", "request": {
        "op": "psu_kfold",
        "strata": strata.tolist(),
        "psu": psu.tolist(),
        "k": 3, "r": 2, "seed": 123,
    }})
    cases.append({"name": "psu_kfold_k1", "request": {
        "op": "psu_kfold",
        "strata": strata.tolist(),
        "psu": psu.tolist(),
        "k": 1, "r": 1, "seed": 7,
    }})

    n = 90
    x1 = gen.normal(0, 1, n).round(6)
    x2 = gen.normal(0, 1, n).round(6)
    eta = -0.4 + 1.1 * x1 - 0.6 * x2
    y = (gen.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
    cases.append({"name": "logit_fit", "request": {
        "op": "weighted_logit_fit",
        "features": [x1.tolist(), x2.tolist()],
        "outcome": y.tolist(),
        "weights": gen.uniform(0.5, 3.0, n).round(6).tolist(),
    }})

    cases.append({"name": "build_design_diag", "request": {
        "op": "build_design",
        "weights": [1.5, 2.5, 3.5, 4.5, 1.0, 2.0],
        "strata": [1.0, 1, 1, 2, 2, 2],
        "psu": [1.0, 1, 2, 1, 2, 2],
    }})

    for case in cases:
        case["expected"] = run_api(case["request"])

    out = Path(__file__).parent.parent / "bindings" / "fixtures" / "parity.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(cases, indent=2) + "\n")
    print(f"wrote {out} ({len(cases)} cases)")


if __name__ == "__main__":
    main()
