"""End-to-end CLI runs over synthetic XPT/CSV inputs."""

import json

import numpy as np
import pytest

from surveyml.cli import main, run_api
from surveyml.errors import SurveyError
from surveyml.ingest import Column, RawTable, write_csv, write_xpt
from surveyml.synth import PopulationSpec, StratumSpec, draw_sample, gen_population


def sample_tables(seed=31):
    """A two-file survey: design+age in XPT, bmi+disease codes in CSV."""
    spec = PopulationSpec(
        strata=tuple(
            StratumSpec(float(h + 1), 10, (12, 20), -1.2 + 0.2 * h,
                        (0.9, 0.5), icc=0.08, x1_shift=0.3 * h)
            for h in range(4)
        ),
        selection_coefs={"x1": 0.4},
    )
    pop = gen_population(spec, seed)
    frame = draw_sample(pop, {"psus_per_stratum": 6, "units_per_psu": 8}, seed + 1)
    n = frame.n
    gen = np.random.default_rng(seed + 2)
    seqn = np.arange(1.0, n + 1)
    age = 45 + 12 * frame.column("x1")
    bmi = 28 + 4 * frame.column("x2")
    disease = np.where(frame.column("y") == 1.0, 1.0, 2.0)
    junk = gen.random(n) < 0.04
    disease = np.where(junk, 9.0, disease)  # refused/don't know code

    demo = RawTable("DEMO_S", [
        Column("SEQN", seqn.copy()),
        Column("AGE", age),
        Column("WT", frame.w.copy()),
        Column("STRA", frame.column("stratum").copy()),
        Column("PSU", frame.column("psu").copy()),
    ])
    lab = RawTable("LAB_S", [
        Column("SEQN", seqn.copy()),
        Column("BMI", bmi),
        Column("DIQ", disease),
    ])
    return demo, lab


BASE_CONFIG = """
[input]
files = demo.xpt, lab.csv
merge_key = SEQN

[design]
weight = WT
strata = STRA
psu = PSU

[missing]
DIQ = 9

[derive]
disease = DIQ == 1
agegrp = cut(AGE, 40, 60)

[filter]
keep = AGE >= 20

[describe]
means = AGE, BMI
proportions = disease
compositions = agegrp

[evaluate]
model = logit
features = AGE, BMI
outcome = disease
bootstrap_b = 40
train_weighted = true

[cv]
k = 2
r = 1
schemes = psu, random
train = weighted, unweighted
eval = weighted, unweighted
min_test_n = 5
min_test_pos = 2
model = logit
features = AGE, BMI
outcome = disease

[output]
seed = 4242
"""


@pytest.fixture
def workdir(tmp_path):
    demo, lab = sample_tables()
    write_xpt(demo, tmp_path / "demo.xpt")
    write_csv(lab, tmp_path / "lab.csv")
    (tmp_path / "run.ini").write_text(BASE_CONFIG)
    return tmp_path


def run_cli(workdir, task, *extra):
    out = workdir / f"out_{task}"
    code = main([task, "--config", str(workdir / "run.ini"),
                 "--out", str(out), *extra])
    report_path = out / f"report_{task}.json"
    report = json.loads(report_path.read_text()) if report_path.exists() else None
    return code, report, out


class TestDescribe:
    def test_report_structure(self, workdir):
        code, report, out = run_cli(workdir, "describe")
        assert code == 0
        assert report["task"] == "describe"
        assert {m["variable"] for m in report["results"]["means"]} == {"AGE", "BMI"}
        assert report["results"]["proportions"][0]["variable"] == "disease"
        assert "agegrp" in report["results"]["compositions"]
        assert (out / "describe_means.csv").exists()
        assert (out / "composition_agegrp.csv").exists()
        assert len(report["inputs"]) == 2

    def test_oversampling_direction(self, workdir):
        # Age-linked informative selection: unweighted age mean exceeds the
        # weighted one, the same direction the design intends.
        _, report, _ = run_cli(workdir, "describe")
        age = report["results"]["means"][0]
        assert age["unweighted"]["point"] > age["weighted"]["point"]

    def test_byte_identical_rerun(self, workdir):
        _, _, out1 = run_cli(workdir, "describe")
        code = main(["describe", "--config", str(workdir / "run.ini"),
                     "--out", str(workdir / "out_again")])
        assert code == 0
        a = (out1 / "report_describe.json").read_bytes()
        b = (workdir / "out_again" / "report_describe.json").read_bytes()
        assert a == b

    def test_equal_weight_input_diffs_zero(self, workdir):
        demo, lab = sample_tables()
        demo.column("WT").values[:] = 1.0
        write_xpt(demo, workdir / "demo.xpt")
        _, report, _ = run_cli(workdir, "describe")
        for mean in report["results"]["means"]:
            assert abs(mean["diff"]) < 1e-9
        for prop in report["results"]["proportions"]:
            assert abs(prop["diff_pp"]) < 1e-9
        for row in report["results"]["compositions"]["agegrp"]:
            assert abs(row["diff_pp"]) < 1e-9

    def test_missing_config_errors(self, tmp_path, capsys):
        code = main(["describe", "--config", str(tmp_path / "none.ini")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_csv_format_renders_text(self, workdir, capsys):
        code = main(["describe", "--config", str(workdir / "run.ini"),
                     "--out", str(workdir / "out_txt"), "--format", "csv"])
        assert code == 0
        shown = capsys.readouterr().out
        assert "task: describe" in shown
        assert "means" in shown


class TestEvaluate:
    def test_weighted_and_unweighted_metrics(self, workdir):
        code, report, out = run_cli(workdir, "evaluate")
        assert code == 0
        (model,) = report["results"]["models"]
        assert model["training"] == "weighted"
        assert 0.5 < model["unweighted_auroc"]["point"] < 1.0
        assert 0.5 < model["weighted_auroc"]["point"] < 1.0
        gap = model["auroc_gap"]
        assert gap == pytest.approx(model["weighted_auroc"]["point"]
                                    - model["unweighted_auroc"]["point"])
        for filename in model["curves"].values():
            assert (out / filename).exists()
        assert report["seed"] == 4242

    def test_constant_model_auroc_half(self, workdir):
        config = (workdir / "run.ini").read_text().replace(
            "features = AGE, BMI\noutcome = disease\nbootstrap_b = 40",
            "features =\noutcome = disease\nbootstrap_b = 40")
        (workdir / "run.ini").write_text(config)
        code, report, _ = run_cli(workdir, "evaluate")
        assert code == 0
        (model,) = report["results"]["models"]
        assert model["unweighted_auroc"]["point"] == 0.5
        assert model["weighted_auroc"]["point"] == 0.5
        assert model["auroc_gap"] == 0.0

    def test_both_trainings_boost(self, workdir):
        config = (workdir / "run.ini").read_text()
        config = config.replace("model = logit\nfeatures = AGE, BMI\noutcome = disease\nbootstrap_b = 40\ntrain_weighted = true",
                                "model = boost\nfeatures = AGE, BMI\noutcome = disease\nbootstrap_b = 20\ntrain_weighted = both\nboost_rounds = 15")
        (workdir / "run.ini").write_text(config)
        code, report, _ = run_cli(workdir, "evaluate")
        assert code == 0
        assert len(report["results"]["models"]) == 2
        assert "training_differences" in report["results"]
        diffs = report["results"]["training_differences"]
        assert set(diffs) == {"unweighted_eval_auroc", "weighted_eval_auroc",
                              "unweighted_eval_auprc", "weighted_eval_auprc"}


class TestCv:
    def test_factorial_grid_shape(self, workdir):
        code, report, out = run_cli(workdir, "cv")
        assert code == 0
        cells = report["results"]["cells"]
        assert len(cells) == 8  # 2 schemes x 2 trainings x 2 evals
        for cell in cells:
            assert cell["planned_folds"] == 2
        assert report["results"]["leakage_pairs"]["psu"] == 0
        assert report["results"]["leakage_pairs"]["random"] > 0
        assert (out / "cv_cells.csv").exists()

    def test_seed_repeat_identical(self, workdir):
        _, _, out1 = run_cli(workdir, "cv")
        code = main(["cv", "--config", str(workdir / "run.ini"),
                     "--out", str(workdir / "cv_again")])
        assert code == 0
        assert ((out1 / "report_cv.json").read_bytes()
                == (workdir / "cv_again" / "report_cv.json").read_bytes())


class TestCalibrate:
    def test_rake_to_margins(self, workdir):
        (workdir / "margins.csv").write_text(
            "variable,level,target\nagegrp,1,30\nagegrp,2,45\nagegrp,3,25\n")
        config = (workdir / "run.ini").read_text() + (
            "\n[calibrate]\nmethod = rake\nmargins = margins.csv\nkind = percent\n")
        (workdir / "run.ini").write_text(config)
        code, report, out = run_cli(workdir, "calibrate")
        assert code == 0
        assert report["results"]["max_margin_error"] <= 1e-6
        assert (out / "calibrated_weights.csv").exists()

    def test_trim(self, workdir):
        config = (workdir / "run.ini").read_text() + (
            "\n[calibrate]\nmethod = trim\nquantile = 0.9\n")
        (workdir / "run.ini").write_text(config)
        code, report, _ = run_cli(workdir, "calibrate")
        assert code == 0
        assert report["results"]["trimmed_mass"] > 0
        assert report["results"]["weight_cv_after"] < report["results"]["weight_cv_before"]


class TestSynthValidate:
    def test_small_run_reports_measurements(self, workdir):
        config = (workdir / "run.ini").read_text() + (
            "\n[synth]\npreset = reference\nconsistency_draws = 40\ncoverage_draws = 150\n")
        (workdir / "run.ini").write_text(config)
        out = workdir / "out_sv"
        code = main(["synth-validate", "--config", str(workdir / "run.ini"),
                     "--out", str(out), "--seed", "20240501"])
        report = json.loads((out / "report_synth-validate.json").read_text())
        meas = report["results"]["measurements"]
        assert set(meas) >= {"census_value", "consistency_rate",
                             "unweighted_worse_rate", "coverage"}
        assert code in (0, 1)  # exit reflects property checks at small draws


class TestApi:
    def test_weighted_auroc_parity_with_metrics(self):
        from surveyml.metrics import ScoredSet, weighted_auroc

        labels = [1.0, 1.0, 0.0, 0.0]
        scores = [0.9, 0.4, 0.5, 0.1]
        weights = [1.0, 2.0, 1.0, 3.0]
        response = run_api({"op": "weighted_auroc", "labels": labels,
                            "scores": scores, "weights": weights})
        direct = weighted_auroc(ScoredSet(np.array(labels), np.array(scores),
                                          np.array(weights)))
        assert response["result"] == direct == pytest.approx(10 / 12)

    def test_psu_kfold_matches_primary(self):
        from surveyml.cv import assign_psu_folds
        from surveyml.design import DesignFrame

        strata = [1.0, 1, 1, 1, 2, 2, 2, 2]
        psu = [1.0, 1, 2, 2, 1, 1, 2, 2]
        response = run_api({"op": "psu_kfold", "strata": strata, "psu": psu,
                            "k": 2, "r": 3, "seed": 99})
        frame = DesignFrame.from_columns(
            {"w": np.ones(8), "s": np.array(strata), "c": np.array(psu)},
            "w", "s", "c")
        plan = assign_psu_folds(frame, 2, 3, 99)
        assert response["assignment"] == plan.assignment.tolist()

    def test_logit_fit(self):
        gen = np.random.default_rng(1)
        x = gen.normal(0, 1, 120)
        y = (gen.random(120) < 1 / (1 + np.exp(-x))).astype(float)
        response = run_api({
            "op": "weighted_logit_fit",
            "features": [x.tolist()],
            "outcome": y.tolist(),
            "weights": np.ones(120).tolist(),
        })
        assert response["converged"]
        assert len(response["coefficients"]) == 2

    def test_build_design_validation(self):
        response = run_api({
            "op": "build_design",
            "weights": [1.0, 2.0, 3.0, 4.0],
            "strata": [1.0, 1.0, 2.0, 2.0],
            "psu": [1.0, 2.0, 1.0, 2.0],
        })
        assert response["n"] == 4
        assert response["strata_count"] == 2
        with pytest.raises(SurveyError, match="nonpositive"):
            run_api({"op": "build_design", "weights": [1.0, -1.0],
                     "strata": [1.0, 1.0], "psu": [1.0, 2.0]})

    def test_sens_spec(self):
        response = run_api({
            "op": "weighted_sens_spec",
            "labels": [1.0, 1, 1, 0, 0, 0],
            "scores": [0.9, 0.3, 0.6, 0.7, 0.2, 0.5],
            "weights": [1.0, 2, 3, 4, 5, 6],
            "threshold": 0.5,
        })
        assert response["sensitivity"] == pytest.approx(4 / 6)
        assert response["specificity"] == pytest.approx(5 / 15)

    def test_unknown_op(self):
        with pytest.raises(SurveyError, match="unknown api op"):
            run_api({"op": "nope"})
