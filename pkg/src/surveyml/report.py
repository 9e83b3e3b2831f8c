"""Run reports: config echo, provenance, results, plot-ready CSV emission.

Reports serialize deterministically (sorted keys, no timestamps) so a
rerun from the echoed config and recorded seed is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .metrics import CurvePoints


@dataclass
class Report:
    """Everything one CLI task produced."""

    task: str
    config: dict
    inputs: dict
    seed: int | None
    results: dict
    warnings: list = field(default_factory=list)
    version: str = __version__

    def to_json(self) -> str:
        payload = {
            "task": self.task,
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "inputs": self.inputs,
            "results": self.results,
            "warnings": self.warnings,
        }
        return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True)


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def estimate_dict(est) -> dict:
    return {
        "point": est.point,
        "se": est.se,
        "ci95": [est.ci95[0], est.ci95[1]],
        "n": est.n,
        "method": est.method,
    }


def write_curve_csv(curve: CurvePoints, path) -> None:
    """Plot-ready (threshold, x, y) rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("threshold,x,y\n")
        for t, x, y in zip(curve.thresholds, curve.x, curve.y):
            t_txt = "inf" if np.isinf(t) else repr(float(t))
            fh.write(f"{t_txt},{float(x)!r},{float(y)!r}\n")


def write_rows_csv(path, header, rows) -> None:
    """Small table mirror; values already stringified by the caller."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def write_report(report: Report, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"report_{report.task}.json"
    path.write_text(report.to_json() + "\n", encoding="utf-8")
    return path
