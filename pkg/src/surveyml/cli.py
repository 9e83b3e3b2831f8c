"""Command-line application: describe | evaluate | cv | calibrate | synth-validate.

A run is driven by an INI config (sections below) with a few flag
overrides; every task emits a JSON report plus CSV table/curve mirrors
into the output directory. Stochastic tasks require a seed and record it,
so rerunning a report's echoed config reproduces it byte-for-byte.

Config sections:
    [input]    files (comma list of .csv/.xpt, relative to the config),
               merge_key
    [design]   weight, strata, psu, outcome?, features?, lonely_policy?
    [missing]  column = code, code, ...   (explicit missing recodes)
    [derive]   new_col = expression       (see expr module)
    [recode]   new_col = SOURCE: code=Label; code=Label; ...
    [filter]   keep = expression          (domain restriction, design kept)
    [describe] means, proportions, compositions (comma lists)
    [evaluate] model (logit|boost), features, outcome,
               train_weighted (true|false|both), bootstrap_b,
               boost_depth, boost_learning_rate, boost_rounds
    [cv]       k, r, schemes, train, eval, min_test_n, min_test_pos,
               model, features, outcome, boost_*
    [calibrate] method (poststratify|rake|trim), margins, kind,
               variable?, cap?, quantile?, redistribute?
    [synth]    preset (reference), consistency_draws, coverage_draws
    [output]   dir, seed

The extra ``api`` subcommand reads one JSON request from stdin and writes
one JSON response to stdout; it is the in-process boundary used by the
foreign-language bindings (ops: build_design, weighted_auroc,
weighted_sens_spec, psu_kfold, weighted_logit_fit).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernel_backend
from .boost import BoostParams, fit_weighted_boost, predict_boost
from .calibrate import poststratify, rake, read_margins_csv, trim_weights
from .cv import assign_psu_folds, assign_random_folds, leakage_pairs, run_cv, screen_folds
from .design import DesignFrame, build_design, subset_domain, validate_design
from .errors import SurveyError
from .estimate import composition_table, srs_mean, weighted_mean, weighted_proportion
from .expr import evaluate_expression
from .ingest import RawTable, merge_tables, normalize_missing, read_csv, read_xpt
from .metrics import (
    ScoredSet,
    metric_ci,
    unweighted_auroc_delong_ci,
    weighted_auroc,
    weighted_curves,
)
from .model import fit_weighted_logit
from .report import Report, estimate_dict, sha256_of, write_curve_csv, write_report, write_rows_csv
from .synth import REFERENCE_DESIGN, REFERENCE_SPEC, oracle_suite


# ---------------------------------------------------------------------------
# Config plumbing

def load_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # column names are case-sensitive
    path = Path(path)
    if not path.exists():
        raise SurveyError(f"config file {path} does not exist")
    parser.read(path, encoding="utf-8")
    parser._config_dir = path.parent  # resolved base for input files
    return parser


def config_echo(cfg: configparser.ConfigParser) -> dict:
    return {section: dict(cfg[section]) for section in cfg.sections()}


def _split_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _get(cfg, section, option, default=None):
    if cfg.has_option(section, option):
        return cfg.get(section, option)
    return default


def _require(cfg, section, option) -> str:
    value = _get(cfg, section, option)
    if value is None:
        raise SurveyError(f"config is missing [{section}] {option}")
    return value


def _seed_of(cfg, args) -> int:
    if args.seed is not None:
        return args.seed
    value = _get(cfg, "output", "seed")
    if value is None:
        raise SurveyError(
            "a seed is required for stochastic tasks: set [output] seed or --seed"
        )
    return int(value)


# ---------------------------------------------------------------------------
# Pipeline assembly

def load_tables(cfg, args) -> tuple[RawTable, dict]:
    files = _split_list(args.input or _require(cfg, "input", "files"))
    base = getattr(cfg, "_config_dir", Path("."))
    digests = {}
    tables = []
    for name in files:
        path = Path(name)
        if not path.is_absolute():
            path = base / path
        if not path.exists():
            raise SurveyError(f"input file {path} does not exist")
        digests[path.name] = sha256_of(path)
        if path.suffix.lower() == ".xpt":
            tables.append(read_xpt(path))
        else:
            tables.append(read_csv(path))
    table = tables[0]
    if len(tables) > 1:
        key = _require(cfg, "input", "merge_key")
        for other in tables[1:]:
            table = merge_tables(table, other, key)
    return table, digests


def _apply_missing(cfg, table: RawTable) -> RawTable:
    if not cfg.has_section("missing"):
        return table
    codes = {}
    for column, text in cfg["missing"].items():
        codes[column] = {float(tok) for tok in _split_list(text)}
    return normalize_missing(table, codes)


def _numeric_columns(table: RawTable) -> dict:
    return {c.name: c.values for c in table.columns if c.kind == "numeric"}


def _apply_derive(cfg, table: RawTable) -> RawTable:
    if not cfg.has_section("derive"):
        return table
    from .ingest import Column

    columns = list(table.columns)
    known = _numeric_columns(table)
    for name, expression in cfg["derive"].items():
        values = evaluate_expression(expression, known)
        columns.append(Column(name, values))
        known[name] = values
    return RawTable(table.name, columns)


def _apply_recode(cfg, table: RawTable) -> RawTable:
    if not cfg.has_section("recode"):
        return table
    from .ingest import Column

    columns = list(table.columns)
    for name, spec in cfg["recode"].items():
        source, _, mapping_text = spec.partition(":")
        source = source.strip()
        src = table.column(source)
        mapping = {}
        for pair in mapping_text.split(";"):
            if not pair.strip():
                continue
            code, _, label = pair.partition("=")
            mapping[float(code)] = label.strip()
        out = np.array([
            mapping.get(v) if not np.isnan(v) else None for v in src.values
        ], dtype=object)
        columns.append(Column(name, out, {}, "char"))
    return RawTable(table.name, columns)


def build_frame(cfg, args) -> tuple[DesignFrame, dict]:
    table, digests = load_tables(cfg, args)
    table = _apply_missing(cfg, table)
    table = _apply_derive(cfg, table)
    table = _apply_recode(cfg, table)
    mapping = {
        "weight": args.weight or _require(cfg, "design", "weight"),
        "strata": args.strata or _require(cfg, "design", "strata"),
        "psu": args.psu or _require(cfg, "design", "psu"),
    }
    if _get(cfg, "design", "outcome"):
        mapping["outcome"] = _get(cfg, "design", "outcome")
    if _get(cfg, "design", "features"):
        mapping["features"] = _split_list(_get(cfg, "design", "features"))
    if _get(cfg, "design", "lonely_policy"):
        mapping["lonely_policy"] = _get(cfg, "design", "lonely_policy")
    frame = build_design(table, mapping)
    keep = _get(cfg, "filter", "keep")
    if keep:
        mask = evaluate_expression(keep, _numeric_columns_frame(frame))
        frame = subset_domain(frame, mask == 1.0)
    return frame, digests


def _numeric_columns_frame(frame: DesignFrame) -> dict:
    return {k: v for k, v in frame.data.items() if v.dtype != object}


# ---------------------------------------------------------------------------
# describe

def cmd_describe(cfg, args) -> Report:
    frame, digests = build_frame(cfg, args)
    warnings_list = []
    if frame.drop_count:
        warnings_list.append(f"dropped {frame.drop_count} rows with missing design columns")
    diag = validate_design(frame)
    if diag.lonely_psu_strata:
        warnings_list.append(f"lonely PSUs in strata {diag.lonely_psu_strata}")

    results = {"n_domain": int(frame.domain.sum()), "n_frame": frame.n,
               "means": [], "proportions": [], "compositions": {}}
    outdir = Path(args.out or _get(cfg, "output", "dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)

    for variable in _split_list(_get(cfg, "describe", "means", "")):
        unweighted = srs_mean(frame, variable)
        weighted = weighted_mean(frame, variable)
        diff = weighted.point - unweighted.point
        results["means"].append({
            "variable": variable,
            "n": weighted.n,
            "unweighted": estimate_dict(unweighted),
            "weighted": estimate_dict(weighted),
            "diff": diff,
            "pct_diff": 100.0 * diff / unweighted.point if unweighted.point else None,
        })
    for variable in _split_list(_get(cfg, "describe", "proportions", "")):
        unweighted = srs_mean(frame, variable, percent=True)
        weighted = weighted_proportion(frame, variable)
        results["proportions"].append({
            "variable": variable,
            "n": weighted.n,
            "unweighted": estimate_dict(unweighted),
            "weighted": estimate_dict(weighted),
            "diff_pp": weighted.point - unweighted.point,
        })
    for variable in _split_list(_get(cfg, "describe", "compositions", "")):
        rows = composition_table(frame, variable)
        results["compositions"][variable] = [
            {"level": (row.level if isinstance(row.level, str) else float(row.level)),
             "n": row.n, "sample_pct": row.sample_pct,
             "weighted_pct": row.weighted_pct, "weighted_se": row.weighted_se,
             "diff_pp": row.diff_pp}
            for row in rows
        ]
        write_rows_csv(
            outdir / f"composition_{variable}.csv",
            ["level", "n", "sample_pct", "weighted_pct", "weighted_se", "diff_pp"],
            [[row.level, row.n, repr(row.sample_pct), repr(row.weighted_pct),
              repr(row.weighted_se), repr(row.diff_pp)] for row in rows],
        )

    write_rows_csv(
        outdir / "describe_means.csv",
        ["variable", "n", "unweighted_mean", "unweighted_se",
         "weighted_mean", "weighted_se", "diff", "pct_diff"],
        [[m["variable"], m["n"], repr(m["unweighted"]["point"]),
          repr(m["unweighted"]["se"]), repr(m["weighted"]["point"]),
          repr(m["weighted"]["se"]), repr(m["diff"]),
          repr(m["pct_diff"]) if m["pct_diff"] is not None else ""]
         for m in results["means"]],
    )
    write_rows_csv(
        outdir / "describe_proportions.csv",
        ["variable", "n", "unweighted_pct", "unweighted_se",
         "weighted_pct", "weighted_se", "diff_pp"],
        [[p["variable"], p["n"], repr(p["unweighted"]["point"]),
          repr(p["unweighted"]["se"]), repr(p["weighted"]["point"]),
          repr(p["weighted"]["se"]), repr(p["diff_pp"])]
         for p in results["proportions"]],
    )
    return Report("describe", config_echo(cfg), digests, None, results, warnings_list)


# ---------------------------------------------------------------------------
# evaluate

def _boost_params(cfg, section) -> BoostParams:
    return BoostParams(
        depth=int(_get(cfg, section, "boost_depth", "3")),
        learning_rate=float(_get(cfg, section, "boost_learning_rate", "0.1")),
        rounds=int(_get(cfg, section, "boost_rounds", "100")),
    )


def _fit_and_score(cfg, frame, features, outcome, model_type, weighted, seed):
    """Fit one model; returns (scores over complete rows, row indices)."""
    if model_type == "logit":
        work = frame if weighted else frame.with_weights(np.ones(frame.n))
        model = fit_weighted_logit(work, features, outcome)
        rows = model.rows_used
        scores = model.insample_scores
    elif model_type == "boost":
        model = fit_weighted_boost(frame, features, outcome,
                                   params=_boost_params(cfg, "evaluate"),
                                   seed=seed, weighted=weighted)
        y = frame.column(outcome)
        mask = frame.domain & ~np.isnan(y)
        for f in features:
            mask &= ~np.isnan(frame.column(f))
        rows = np.flatnonzero(mask)
        x = np.column_stack([frame.column(f)[rows] for f in features])
        scores = predict_boost(model, x)
    else:
        raise SurveyError(f"unknown model type {model_type!r}")
    return scores, rows


def _evaluate_one(cfg, frame, scores, rows, outcome, b, seed, outdir, tag):
    y = frame.column(outcome)[rows]
    w = frame.w[rows]
    scored = ScoredSet(y, scores, w)
    scored_unw = ScoredSet(y, scores, np.ones(len(rows)))

    sub = frame.take(rows)
    delong = unweighted_auroc_delong_ci(scored_unw)
    w_auroc = metric_ci(scored, weighted_auroc, sub, method="bootstrap",
                        b=b, seed=seed, ci="percentile")

    def auprc_of(s: ScoredSet) -> float:
        return weighted_curves(s)[2]

    unw_auprc = auprc_of(scored_unw)
    w_auprc = metric_ci(scored, auprc_of, sub, method="bootstrap",
                        b=b, seed=seed + 1, ci="percentile")

    roc_w, pr_w, _ = weighted_curves(scored)
    roc_u, pr_u, _ = weighted_curves(scored_unw)
    curves = {}
    for name, curve in (("roc_weighted", roc_w), ("pr_weighted", pr_w),
                        ("roc_unweighted", roc_u), ("pr_unweighted", pr_u)):
        filename = f"curve_{name}_{tag}.csv"
        write_curve_csv(curve, outdir / filename)
        curves[name] = filename
    return {
        "n_used": len(rows),
        "unweighted_auroc": estimate_dict(delong),
        "weighted_auroc": estimate_dict(w_auroc),
        "auroc_gap": w_auroc.point - delong.point,
        "unweighted_auprc": unw_auprc,
        "weighted_auprc": estimate_dict(w_auprc),
        "auprc_gap": w_auprc.point - unw_auprc,
        "curves": curves,
    }


def cmd_evaluate(cfg, args) -> Report:
    frame, digests = build_frame(cfg, args)
    seed = _seed_of(cfg, args)
    outdir = Path(args.out or _get(cfg, "output", "dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)
    model_type = _get(cfg, "evaluate", "model", "logit")
    features = _split_list(_require(cfg, "evaluate", "features"))
    outcome = _require(cfg, "evaluate", "outcome")
    b = int(_get(cfg, "evaluate", "bootstrap_b", "100"))
    mode = _get(cfg, "evaluate", "train_weighted", "true").lower()
    trainings = {"true": [True], "false": [False], "both": [False, True]}.get(mode)
    if trainings is None:
        raise SurveyError(f"train_weighted must be true/false/both, got {mode!r}")

    models = []
    for weighted in trainings:
        tag = "weighted" if weighted else "unweighted"
        scores, rows = _fit_and_score(cfg, frame, features, outcome,
                                      model_type, weighted, seed)
        entry = _evaluate_one(cfg, frame, scores, rows, outcome, b, seed,
                              outdir, f"{model_type}_{tag}")
        entry["training"] = tag
        entry["model_type"] = model_type
        models.append(entry)

    results = {"models": models}
    if len(models) == 2:
        by = {m["training"]: m for m in models}
        results["training_differences"] = {
            "unweighted_eval_auroc": (by["weighted"]["unweighted_auroc"]["point"]
                                      - by["unweighted"]["unweighted_auroc"]["point"]),
            "weighted_eval_auroc": (by["weighted"]["weighted_auroc"]["point"]
                                    - by["unweighted"]["weighted_auroc"]["point"]),
            "unweighted_eval_auprc": (by["weighted"]["unweighted_auprc"]
                                      - by["unweighted"]["unweighted_auprc"]),
            "weighted_eval_auprc": (by["weighted"]["weighted_auprc"]["point"]
                                    - by["unweighted"]["weighted_auprc"]["point"]),
        }
    return Report("evaluate", config_echo(cfg), digests, seed, results)


# ---------------------------------------------------------------------------
# cv

def cmd_cv(cfg, args) -> Report:
    frame, digests = build_frame(cfg, args)
    seed = _seed_of(cfg, args)
    k = int(_get(cfg, "cv", "k", "5"))
    r = int(_get(cfg, "cv", "r", "3"))
    schemes = _split_list(_get(cfg, "cv", "schemes", "psu, random"))
    trainings = _split_list(_get(cfg, "cv", "train", "weighted, unweighted"))
    evals = _split_list(_get(cfg, "cv", "eval", "weighted, unweighted"))
    min_test_n = int(_get(cfg, "cv", "min_test_n", "50"))
    min_test_pos = int(_get(cfg, "cv", "min_test_pos", "5"))
    model_type = _get(cfg, "cv", "model", "logit")
    features = _split_list(_require(cfg, "cv", "features"))
    outcome = _require(cfg, "cv", "outcome")

    from .boost import boost_trainer
    from .model import logit_trainer

    def make_trainer(weighted: bool):
        if model_type == "boost":
            return boost_trainer(features, outcome,
                                 params=_boost_params(cfg, "cv"),
                                 weighted=weighted, seed=seed)
        return logit_trainer(features, outcome, weighted=weighted)

    def make_metric(weighted: bool):
        if weighted:
            return weighted_auroc
        return lambda s: weighted_auroc(s.with_weights(np.ones(s.n)))

    plans = {}
    for scheme in schemes:
        if scheme == "psu":
            plan = assign_psu_folds(frame, k, r, seed)
        elif scheme == "random":
            plan = assign_random_folds(frame, k, r, seed)
        else:
            raise SurveyError(f"unknown CV scheme {scheme!r}")
        plans[scheme] = screen_folds(plan, frame, min_test_n, min_test_pos,
                                     outcome=outcome)

    cells = []
    for scheme, plan in plans.items():
        for train_mode in trainings:
            for eval_mode in evals:
                trainer = make_trainer(train_mode == "weighted")
                metric = make_metric(eval_mode == "weighted")
                matrix = run_cv(plan, frame, trainer, metric, outcome=outcome,
                                metric_name=f"{eval_mode}_auroc")
                cells.append({
                    "scheme": scheme,
                    "train": train_mode,
                    "eval": eval_mode,
                    "mean": matrix.mean if len(matrix.retained_values) else None,
                    "sd": matrix.sd if len(matrix.retained_values) else None,
                    "retained_folds": int(plan.retained.sum()),
                    "planned_folds": k * r,
                })

    results = {
        "k": k, "r": r,
        "cells": cells,
        "retained_by_scheme": {s: int(p.retained.sum()) for s, p in plans.items()},
        "leakage_pairs": {s: leakage_pairs(p, frame) for s, p in plans.items()},
    }
    outdir = Path(args.out or _get(cfg, "output", "dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)
    write_rows_csv(
        outdir / "cv_cells.csv",
        ["scheme", "train", "eval", "mean", "sd", "retained", "planned"],
        [[c["scheme"], c["train"], c["eval"],
          repr(c["mean"]) if c["mean"] is not None else "",
          repr(c["sd"]) if c["sd"] is not None else "",
          c["retained_folds"], c["planned_folds"]] for c in cells],
    )
    return Report("cv", config_echo(cfg), digests, seed, results)


# ---------------------------------------------------------------------------
# calibrate

def cmd_calibrate(cfg, args) -> Report:
    frame, digests = build_frame(cfg, args)
    method = _require(cfg, "calibrate", "method")
    outdir = Path(args.out or _get(cfg, "output", "dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)

    if method in ("rake", "poststratify"):
        margins_file = _require(cfg, "calibrate", "margins")
        base = getattr(cfg, "_config_dir", Path("."))
        margins_path = Path(margins_file)
        if not margins_path.is_absolute():
            margins_path = base / margins_path
        kind = _get(cfg, "calibrate", "kind", "total")
        margins = read_margins_csv(margins_path, kind=kind)
        if method == "poststratify":
            if len(margins) != 1:
                raise SurveyError("poststratify expects exactly one margin variable")
            adjusted, cal_report = poststratify(frame, margins[0])
        else:
            adjusted, cal_report = rake(
                frame, margins,
                tol=float(_get(cfg, "calibrate", "tol", "1e-6")),
                max_iter=int(_get(cfg, "calibrate", "max_iter", "100")),
            )
    elif method == "trim":
        cap = _get(cfg, "calibrate", "cap")
        quantile = _get(cfg, "calibrate", "quantile")
        adjusted, cal_report = trim_weights(
            frame,
            cap=float(cap) if cap else None,
            quantile=float(quantile) if quantile else 0.99,
            redistribute=_get(cfg, "calibrate", "redistribute", "true").lower() == "true",
        )
    else:
        raise SurveyError(f"unknown calibrate method {method!r}")

    weights_file = outdir / "calibrated_weights.csv"
    write_rows_csv(weights_file, ["row", "old_weight", "new_weight"],
                   [[i, repr(float(a)), repr(float(b))]
                    for i, (a, b) in enumerate(zip(frame.w, adjusted.w))])
    results = {
        "method": method,
        "iterations": cal_report.iterations,
        "max_margin_error": cal_report.max_margin_error,
        "weight_ratio_range": list(cal_report.weight_ratio_range),
        "trimmed_mass": cal_report.trimmed_mass,
        "weights_file": weights_file.name,
        "weight_cv_before": float(frame.w.std() / frame.w.mean()),
        "weight_cv_after": float(adjusted.w.std() / adjusted.w.mean()),
    }
    return Report("calibrate", config_echo(cfg), digests, None, results)


# ---------------------------------------------------------------------------
# synth-validate

def cmd_synth_validate(cfg, args) -> Report:
    seed = _seed_of(cfg, args)
    preset = _get(cfg, "synth", "preset", "reference")
    if preset != "reference":
        raise SurveyError(f"unknown synth preset {preset!r}")
    res = oracle_suite(
        REFERENCE_SPEC, REFERENCE_DESIGN,
        pop_seed=seed,
        consistency_draws=int(_get(cfg, "synth", "consistency_draws", "200")),
        coverage_draws=int(_get(cfg, "synth", "coverage_draws", "1000")),
    )
    checks = {
        "ht_consistency": res["consistency_rate"] >= 0.95,
        "unweighted_bias_direction": res["unweighted_worse_rate"] >= 0.90,
        "taylor_coverage_93_97": 0.93 <= res["coverage"] <= 0.97,
    }
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    results = {"measurements": res, "checks": checks,
               "all_passed": all(checks.values())}
    return Report("synth-validate", config_echo(cfg), {}, seed, results)


# ---------------------------------------------------------------------------
# api endpoint for bindings

def _api_build_design(req: dict) -> dict:
    data = {
        "w": np.asarray(req["weights"], dtype=np.float64),
        "stratum": np.asarray(req["strata"], dtype=np.float64),
        "psu": np.asarray(req["psu"], dtype=np.float64),
    }
    if "outcome" in req:
        data["y"] = np.asarray(req["outcome"], dtype=np.float64)
    for i, col in enumerate(req.get("features", [])):
        data[f"x{i + 1}"] = np.asarray(col, dtype=np.float64)
    bad = np.flatnonzero(~(data["w"] > 0) | ~np.isfinite(data["w"]))
    if bad.size:
        raise SurveyError(f"nonpositive weight at row {int(bad[0])}")
    frame = DesignFrame.from_columns(
        data, "w", "stratum", "psu",
        outcome_name="y" if "outcome" in req else None,
        feature_names=tuple(f"x{i + 1}" for i in range(len(req.get("features", [])))),
    )
    diag = validate_design(frame)
    return {
        "n": diag.n,
        "strata_count": diag.strata_count,
        "psu_per_stratum": {str(k): v for k, v in diag.psu_per_stratum.items()},
        "lonely_psu_strata": [float(v) for v in diag.lonely_psu_strata],
        "weight_cv": diag.weight_cv,
        "weight_range": list(diag.weight_range),
    }


def _api_scored(req: dict) -> ScoredSet:
    return ScoredSet(
        np.asarray(req["labels"], dtype=np.float64),
        np.asarray(req["scores"], dtype=np.float64),
        np.asarray(req["weights"], dtype=np.float64),
    )


def run_api(request: dict) -> dict:
    op = request.get("op")
    if op == "weighted_auroc":
        return {"result": weighted_auroc(_api_scored(request))}
    if op == "weighted_sens_spec":
        from .metrics import weighted_confusion, weighted_sens_spec

        conf = weighted_confusion(_api_scored(request),
                                  float(request["threshold"]))
        sens, spec = weighted_sens_spec(conf)
        return {"sensitivity": sens, "specificity": spec,
                "tp_w": conf.tp_w, "fp_w": conf.fp_w,
                "tn_w": conf.tn_w, "fn_w": conf.fn_w}
    if op == "psu_kfold":
        data = {
            "w": np.ones(len(request["strata"])),
            "stratum": np.asarray(request["strata"], dtype=np.float64),
            "psu": np.asarray(request["psu"], dtype=np.float64),
        }
        frame = DesignFrame.from_columns(data, "w", "stratum", "psu")
        import warnings as _warnings

        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            plan = assign_psu_folds(frame, int(request["k"]),
                                    int(request["r"]), int(request["seed"]))
        return {"assignment": plan.assignment.tolist()}
    if op == "weighted_logit_fit":
        n = len(request["outcome"])
        data = {
            "w": np.asarray(request["weights"], dtype=np.float64),
            "stratum": np.asarray(request.get("strata", np.ones(n)), dtype=np.float64),
            "psu": np.asarray(request.get("psu", np.arange(n)), dtype=np.float64),
            "y": np.asarray(request["outcome"], dtype=np.float64),
        }
        names = []
        for i, col in enumerate(request["features"]):
            names.append(f"x{i + 1}")
            data[names[-1]] = np.asarray(col, dtype=np.float64)
        frame = DesignFrame.from_columns(data, "w", "stratum", "psu", outcome_name="y")
        model = fit_weighted_logit(frame, names, "y")
        return {
            "coefficients": model.coefficients.tolist(),
            "converged": model.converged,
            "iterations": model.iterations,
            "pseudo_loglik": model.pseudo_loglik,
            "scores": model.insample_scores.tolist(),
        }
    if op == "build_design":
        return _api_build_design(request)
    raise SurveyError(f"unknown api op {op!r}")


def cmd_api(args) -> int:
    try:
        request = json.loads(sys.stdin.read())
        response = {"ok": True, **run_api(request)}
    except (SurveyError, KeyError, ValueError, TypeError) as exc:
        response = {"ok": False,
                    "error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(response))
        return 1
    print(json.dumps(response))
    return 0


# ---------------------------------------------------------------------------
# entry point

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="surveyml",
        description="Design-based survey statistics and ML evaluation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="task", required=True)
    for task in ("describe", "evaluate", "cv", "calibrate", "synth-validate"):
        p = sub.add_parser(task)
        p.add_argument("--config", required=(task != "synth-validate"))
        p.add_argument("--input", help="comma list overriding [input] files")
        p.add_argument("--weight")
        p.add_argument("--strata")
        p.add_argument("--psu")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_parser("api")

    args = parser.parse_args(argv)
    if args.task == "api":
        return cmd_api(args)

    try:
        if args.task == "synth-validate" and args.config is None:
            cfg = configparser.ConfigParser(interpolation=None)
            cfg.optionxform = str
            if args.seed is None:
                args.seed = 20240501
        else:
            cfg = load_config(args.config)
        handler = {
            "describe": cmd_describe,
            "evaluate": cmd_evaluate,
            "cv": cmd_cv,
            "calibrate": cmd_calibrate,
            "synth-validate": cmd_synth_validate,
        }[args.task]
        report = handler(cfg, args)
    except SurveyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    outdir = Path(args.out or _get(cfg, "output", "dir", "out"))
    path = write_report(report, outdir)
    if args.format == "json":
        print(path)
    else:
        for line in _render_text(report):
            print(line)
    if args.task == "synth-validate" and not report.results["all_passed"]:
        return 1
    return 0


def _render_text(report: Report):
    yield f"task: {report.task} (surveyml {report.version}, kernels: {kernel_backend()})"
    for warning in report.warnings:
        yield f"warning: {warning}"
    yield json.dumps(report.results, indent=2, sort_keys=True)


if __name__ == "__main__":
    sys.exit(main())
