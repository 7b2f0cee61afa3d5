"""Config parsing, CLI exit codes, CSV schemas, runners, checkpoints, determinism."""

import json
import os

import numpy as np
import pytest

from reachlab.errors import ConfigError, SchemaError
from reachlab.harness import experiments
from reachlab.harness.bundle import ResultBundle
from reachlab.harness.cli import main as cli_main
from reachlab.harness.config import parse_config
from reachlab.harness.io import (
    CSV_SCHEMAS,
    canonical_json,
    validate_csv,
    validate_path_csv,
    write_csv,
)

KRAMERS_RAW = {
    "seed": 1,
    "potential": {"name": "double_well_1d"},
    "w0": [-1.0],
    "target": [1.0],
    "radius": 0.2,
    "d_grid": [0.25, 0.3, 0.4],
    "dt": 5e-3,
    "max_steps": 20000,
    "n_runs": 4,
}

LABEL_RAW = {
    "seed": 3,
    "model": {"family": "multinomial-logistic", "input_dim": 2, "n_classes": 3},
    "data": {"n_samples": 60, "separation": 2.5},
    "corruption_grid": [0.0, 0.3, 0.6],
    "beta": 0.02,
    "prior_scale2": 1.0,
    "trainer": {"step_size": 0.3, "max_iters": 3000, "grad_tol": 1e-7},
    "sgd": {"eta": 0.1, "batch_size": 8, "max_steps": 8000},
    "n_runs": 4,
    "threshold_extra": 0.15,
}

FINETUNE_RAW = {
    "seed": 2,
    "model": {"family": "multinomial-logistic", "input_dim": 2, "n_classes": 3},
    "data": {"n_samples": 60, "separation": 2.5},
    "tasks": [
        {"label": "full", "corruption": 0.0},
        {"label": "pair", "keep_classes": [0, 1]},
    ],
    "beta": 0.02,
    "prior_scale2": 1.0,
    "trainer": {"step_size": 0.3, "max_iters": 3000, "grad_tol": 1e-7},
    "sgd": {"eta": 0.1, "batch_size": 8, "max_steps": 5000},
    "n_runs": 4,
    "threshold_extra": 0.1,
}


# -- parse_config -------------------------------------------------------------------


def test_parse_rejects_unknown_kind_and_shape():
    with pytest.raises(ConfigError, match="unknown experiment kind"):
        parse_config("frobnicate", {"seed": 0})
    with pytest.raises(ConfigError, match="JSON object"):
        parse_config("kramers-sweep", [1, 2])


def test_parse_rejects_kind_mismatch():
    raw = dict(KRAMERS_RAW, kind="label-sweep")
    with pytest.raises(ConfigError, match="kind"):
        parse_config("kramers-sweep", raw)


def test_parse_accepts_matching_kind_key():
    cfg = parse_config("kramers-sweep", dict(KRAMERS_RAW, kind="kramers-sweep"))
    assert cfg.kind == "kramers-sweep"
    assert cfg.seed == 1


def test_parse_requires_a_seed():
    raw = {k: v for k, v in KRAMERS_RAW.items() if k != "seed"}
    with pytest.raises(ConfigError, match="seed"):
        parse_config("kramers-sweep", raw)
    with pytest.raises(ConfigError, match="seed"):
        parse_config("kramers-sweep", dict(KRAMERS_RAW, seed=-1))
    cfg = parse_config("kramers-sweep", raw, seed_override=9)
    assert cfg.seed == 9


def test_parse_seed_override_beats_the_file():
    cfg = parse_config("kramers-sweep", dict(KRAMERS_RAW), seed_override=7)
    assert cfg.seed == 7


def test_parse_rejects_unknown_and_missing_keys():
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_config("kramers-sweep", dict(KRAMERS_RAW, typo=1))
    raw = {k: v for k, v in KRAMERS_RAW.items() if k != "d_grid"}
    with pytest.raises(ConfigError, match="d_grid"):
        parse_config("kramers-sweep", raw)


def test_parse_fills_defaults():
    raw = {k: v for k, v in KRAMERS_RAW.items() if k not in ("radius", "n_runs")}
    cfg = parse_config("kramers-sweep", raw)
    assert cfg.params["radius"] == 0.1
    assert cfg.params["n_runs"] == 500


def test_parse_type_checks_fields():
    with pytest.raises(ConfigError, match="number"):
        parse_config("kramers-sweep", dict(KRAMERS_RAW, dt="small"))
    with pytest.raises(ConfigError, match="integer"):
        parse_config("kramers-sweep", dict(KRAMERS_RAW, max_steps=2.5))
    with pytest.raises(ConfigError, match="list"):
        parse_config("kramers-sweep", dict(KRAMERS_RAW, d_grid=0.1))
    # bool is not an acceptable integer even though Python subclasses it
    with pytest.raises(ConfigError):
        parse_config("kramers-sweep", dict(KRAMERS_RAW, n_runs=True))


def test_parse_cross_validates_dimensions_and_grids():
    with pytest.raises(ConfigError, match="dimension"):
        parse_config("kramers-sweep", dict(KRAMERS_RAW, w0=[-1.0, 0.0]))
    with pytest.raises(ConfigError, match="distinct"):
        parse_config("kramers-sweep", dict(KRAMERS_RAW, d_grid=[0.1, 0.1, 0.1]))
    with pytest.raises(ConfigError, match="corruption_grid"):
        parse_config("label-sweep", dict(LABEL_RAW, corruption_grid=[0.0, 0.5, 1.5]))
    with pytest.raises(ConfigError, match="descending"):
        parse_config(
            "structure-curve",
            {
                "seed": 0,
                "model": LABEL_RAW["model"],
                "data": LABEL_RAW["data"],
                "beta_grid": [0.1, 1.0],
                "prior_scale2": 1.0,
            },
        )


def test_parse_checks_nested_objects():
    with pytest.raises(ConfigError, match="model"):
        parse_config("label-sweep", dict(LABEL_RAW, model={"family": "multinomial-logistic"}))
    with pytest.raises(ConfigError, match="trainer"):
        parse_config("label-sweep", dict(LABEL_RAW, trainer={"step": 0.1}))
    with pytest.raises(ConfigError, match="sgd"):
        parse_config("label-sweep", dict(LABEL_RAW, sgd={"eta": 0.1}))
    bad = dict(FINETUNE_RAW, tasks=[{"label": "a"}, {"label": "a"}])
    with pytest.raises(ConfigError, match="distinct"):
        parse_config("finetune-matrix", bad)
    bad = dict(FINETUNE_RAW, tasks=[{"label": "a", "keep_classes": [0, 7]}, {"label": "b"}])
    with pytest.raises(ConfigError, match="keep_classes"):
        parse_config("finetune-matrix", bad)


def test_parse_rejects_oversized_batches():
    with pytest.raises(ConfigError, match="n_samples"):
        parse_config(
            "batch-sweep",
            {
                "seed": 0,
                "model": LABEL_RAW["model"],
                "data": {"n_samples": 20, "separation": 2.0},
                "batch_grid": [4, 8, 64],
                "eta": 0.05,
                "max_steps": 100,
            },
        )


def test_snapshot_reparses_to_the_same_config():
    cfg = parse_config("label-sweep", dict(LABEL_RAW))
    snap = cfg.snapshot()
    again = parse_config(snap["kind"], snap)
    assert again == cfg


# -- CSV schemas ----------------------------------------------------------------------


def test_write_csv_round_trips_and_validates(tmp_path):
    p = tmp_path / "kramers_sweep.csv"
    rows = [(0.1, 10.0, 54.2, 38.0, 1 / 54.2, 500, 0)]
    write_csv(str(p), "kramers_sweep.csv", rows)
    validate_csv(str(p), "kramers_sweep.csv")


def test_validate_csv_rejects_header_drift(tmp_path):
    p = tmp_path / "kramers_sweep.csv"
    p.write_text("D,inv_D,mean_time\n0.1,10,54\n")
    with pytest.raises(SchemaError, match="header"):
        validate_csv(str(p), "kramers_sweep.csv")


def test_validate_csv_rejects_bad_cells(tmp_path):
    cols = ",".join(c for c, _ in CSV_SCHEMAS["kramers_sweep.csv"])
    p = tmp_path / "kramers_sweep.csv"
    p.write_text(f"{cols}\n0.1,10,inf,38,0.02,500,0\n")
    with pytest.raises(SchemaError, match="finite"):
        validate_csv(str(p), "kramers_sweep.csv")
    p.write_text(f"{cols}\n0.1,10,54,38,0.02,many,0\n")
    with pytest.raises(SchemaError, match="integer"):
        validate_csv(str(p), "kramers_sweep.csv")
    p.write_text(f"{cols}\n0.1,10,54\n")
    with pytest.raises(SchemaError, match="cells"):
        validate_csv(str(p), "kramers_sweep.csv")


def test_validate_csv_allows_declared_optional_floats(tmp_path):
    p = tmp_path / "finetune_times.csv"
    write_csv(str(p), "finetune_times.csv", [("a", "b", None, None, 4, 4)])
    text = p.read_text().strip().split("\n")[1]
    assert text == "a,b,,,4,4"


def test_write_csv_rejects_wrong_row_width(tmp_path):
    with pytest.raises(SchemaError, match="cells"):
        write_csv(str(tmp_path / "kramers_sweep.csv"), "kramers_sweep.csv", [(1.0, 2.0)])


def test_validate_csv_requires_registered_schema(tmp_path):
    p = tmp_path / "anything.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError, match="schema"):
        validate_csv(str(p), "anything.csv")


def test_path_csv_validator(tmp_path):
    p = tmp_path / "path.csv"
    p.write_text("t,w0,w1\n0,1,2\n0.1,1,2\n")
    validate_path_csv(str(p))
    p.write_text("t,x,y\n0,1,2\n")
    with pytest.raises(SchemaError, match="header"):
        validate_path_csv(str(p))
    p.write_text("t,w0\n0,nan\n")
    with pytest.raises(SchemaError, match="finite"):
        validate_path_csv(str(p))


def test_canonical_json_is_sorted_and_rejects_nan():
    assert canonical_json({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})


# -- runners ---------------------------------------------------------------------------


def test_kramers_runner_outputs(tmp_path):
    cfg = parse_config("kramers-sweep", dict(KRAMERS_RAW))
    b = experiments.run_kramers_sweep(cfg, str(tmp_path))
    assert len(b.records) == 3
    assert not b.flags
    assert b.summary["barrier"] is not None
    assert b.summary["barrier_if_half_exponent"] == pytest.approx(2 * b.summary["barrier"])
    # faster escapes at larger D
    means = [r["mean_time"] for r in b.records]
    assert means[0] > means[2]
    validate_csv(str(tmp_path / "kramers_sweep.csv"), "kramers_sweep.csv")
    man = json.loads((tmp_path / "plots" / "manifest.json").read_text())
    assert {e["file"] for e in man["files"]} == {"arrhenius.dat", "arrhenius_fit.dat"}
    again = ResultBundle.load(str(tmp_path / "bundle.json"))
    assert again.same_results(b)


def test_label_runner_outputs(tmp_path):
    cfg = parse_config("label-sweep", dict(LABEL_RAW))
    b = experiments.run_label_sweep(cfg, str(tmp_path))
    assert len(b.records) == 3
    assert b.summary["cbeta_increasing_in_rho"] is True
    assert all(r["descent_converged"] for r in b.records)
    assert all(r["n_censored"] == 0 for r in b.records)
    validate_csv(str(tmp_path / "label_sweep.csv"), "label_sweep.csv")
    # thresholds sit a fixed margin above the estimated floor
    for r in b.records:
        assert r["threshold"] == pytest.approx(r["min_loss"] + 0.15)


def test_scatter_runner_outputs(tmp_path):
    raw = {
        "seed": 3,
        "model": {"family": "multinomial-logistic", "input_dim": 2, "n_classes": 3},
        "data": {"n_samples": 60, "separation": 2.5},
        "tasks": [
            {"label": "clean", "corruption": 0.0},
            {"label": "mid", "corruption": 0.4},
            {"label": "high", "corruption": 0.8},
        ],
        "beta": 0.02,
        "prior_scale2": 1.0,
        "trainer": {"step_size": 0.3, "max_iters": 3000, "grad_tol": 1e-7},
        "sgd": {"eta": 0.1, "batch_size": 8, "max_steps": 8000},
        "n_runs": 4,
        "threshold_extra": 0.15,
    }
    cfg = parse_config("complexity-scatter", raw)
    b = experiments.run_complexity_scatter(cfg, str(tmp_path))
    assert [r["label"] for r in b.records] == ["clean", "mid", "high"]
    assert b.summary["spearman_cbeta_time"] is not None
    validate_csv(str(tmp_path / "complexity_scatter.csv"), "complexity_scatter.csv")


def test_structure_runner_outputs(tmp_path):
    raw = {
        "seed": 1,
        "model": {"family": "multinomial-logistic", "input_dim": 1, "n_classes": 2},
        "data": {"n_samples": 30, "separation": 10.0},
        "beta_grid": [1e6, 30.0, 0.3, 3e-4],
        "prior_scale2": 0.01,
        "trainer": {"step_size": 0.5, "max_iters": 20000, "grad_tol": 1e-10},
    }
    cfg = parse_config("structure-curve", raw)
    b = experiments.run_structure_curve(cfg, str(tmp_path))
    assert b.summary["monotone_loss_in_kl"] is True
    assert b.summary["expected_loss_at_beta_max"] == pytest.approx(
        b.summary["log_n_classes"], abs=0.05)
    validate_csv(str(tmp_path / "structure_curve.csv"), "structure_curve.csv")


def test_action_runner_outputs(tmp_path):
    raw = {
        "seed": 0,
        "potential": {"name": "quadratic", "a": [1.0, 2.0]},
        "start": [1.2, -0.8],
        "end": [float(1.2 * np.exp(-1.5)), float(-0.8 * np.exp(-3.0))],
        "duration": 1.5,
        "n_knots": 61,
        "D": 0.001,
    }
    cfg = parse_config("action-check", raw)
    b = experiments.run_action_check(cfg, str(tmp_path))
    assert [r["path"] for r in b.records] == ["straight", "optimized"]
    assert b.summary["optimizer_converged"] is True
    # relaxing toward the gradient flow must lower the cost
    assert b.summary["action_drop"] > 0
    validate_csv(str(tmp_path / "action_check.csv"), "action_check.csv")
    validate_path_csv(str(tmp_path / "action_path.csv"))
    raw2 = dict(raw, optimize=False)
    b2 = experiments.run_action_check(parse_config("action-check", raw2), str(tmp_path / "no_opt"))
    assert [r["path"] for r in b2.records] == ["straight"]
    assert "optimized_total" not in b2.summary


def test_finetune_runner_direction_and_checkpoints(tmp_path):
    cfg = parse_config("finetune-matrix", dict(FINETUNE_RAW))
    out = tmp_path / "run"
    b = experiments.run_finetune_matrix(cfg, str(out))
    labels = b.summary["labels"]
    assert labels == ["full", "pair"]
    times = b.summary["median_times"]
    # the subset task is free after the full task, but not the reverse
    assert times[0][1] < times[1][0]
    d = b.summary["distances"]
    assert d[0][1] < d[1][0]
    assert b.timing["cells_reused"] == 0
    for name in ("finetune_times.csv", "finetune_distances.csv", "finetune_scatter.csv"):
        validate_csv(str(out / name), name)
    assert len(os.listdir(out / "checkpoint")) == 4

    # a second run over the same directory reuses every cell
    b2 = experiments.run_finetune_matrix(cfg, str(out))
    assert b2.timing["cells_reused"] == 4
    assert b2.same_results(b)

    # invalidate one cell: only that one is recomputed, results unchanged
    os.remove(out / "checkpoint" / "cell_1_0.json")
    b3 = experiments.run_finetune_matrix(cfg, str(out))
    assert b3.timing["cells_reused"] == 3
    assert b3.same_results(b)

    # a different config hash ignores stale checkpoints entirely
    cfg2 = parse_config("finetune-matrix", dict(FINETUNE_RAW, seed=5))
    b4 = experiments.run_finetune_matrix(cfg2, str(out))
    assert b4.timing["cells_reused"] == 0


def test_bundles_are_deterministic_across_workers(tmp_path):
    cfg = parse_config("kramers-sweep", dict(KRAMERS_RAW))
    b1 = experiments.run_kramers_sweep(cfg, str(tmp_path / "w1"), workers=1)
    b2 = experiments.run_kramers_sweep(cfg, str(tmp_path / "w2"), workers=2)
    assert canonical_json(b1.result_fields()) == canonical_json(b2.result_fields())


def test_rerun_reproduces_a_bundle_from_its_snapshot(tmp_path):
    cfg = parse_config("kramers-sweep", dict(KRAMERS_RAW))
    b1 = experiments.run_kramers_sweep(cfg, str(tmp_path / "a"))
    b2 = experiments.rerun(str(tmp_path / "a" / "bundle.json"), str(tmp_path / "b"))
    assert b2.same_results(b1)
    assert b2.timing != {} and b1.timing != {}


# -- CLI --------------------------------------------------------------------------------


def _write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_cli_success_exit_zero(tmp_path, capsys):
    raw = {
        "seed": 0,
        "potential": {"name": "quadratic", "a": [1.0, 2.0]},
        "start": [1.0, 1.0],
        "end": [0.1, 0.1],
        "duration": 1.0,
        "n_knots": 21,
        "D": 0.05,
        "optimize": False,
    }
    cfgp = _write_json(tmp_path / "cfg.json", raw)
    rc = cli_main(["action-check", "--config", cfgp, "--out", str(tmp_path / "out")])
    assert rc == 0
    assert "1 record(s)" in capsys.readouterr().out
    assert (tmp_path / "out" / "bundle.json").exists()


def test_cli_seed_flag_overrides_config(tmp_path):
    raw = dict(KRAMERS_RAW, d_grid=[0.25, 0.3, 0.4], n_runs=2, max_steps=5000)
    cfgp = _write_json(tmp_path / "cfg.json", raw)
    rc = cli_main(["kramers-sweep", "--config", cfgp, "--out", str(tmp_path / "o1"), "--seed", "11"])
    assert rc == 0
    b = ResultBundle.load(str(tmp_path / "o1" / "bundle.json"))
    assert b.config["seed"] == 11


def test_cli_rejects_bad_configs_with_exit_two(tmp_path, capsys):
    rc = cli_main(["kramers-sweep", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert rc == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli_main(["kramers-sweep", "--config", str(bad), "--out", str(tmp_path)]) == 2
    warped = _write_json(tmp_path / "warped.json", dict(KRAMERS_RAW, typo=1))
    assert cli_main(["kramers-sweep", "--config", warped, "--out", str(tmp_path)]) == 2
    ok = _write_json(tmp_path / "ok.json", dict(KRAMERS_RAW))
    assert cli_main(["kramers-sweep", "--config", ok, "--out", str(tmp_path), "--workers", "0"]) == 2
    assert capsys.readouterr().err  # every rejection explains itself on stderr


def test_cli_flags_censored_cells_but_still_succeeds(tmp_path, capsys):
    # noise too weak to cross the barrier: cells are flagged, not fatal
    raw = dict(KRAMERS_RAW, d_grid=[1e-4, 2e-4, 3e-4], max_steps=200, n_runs=2)
    cfgp = _write_json(tmp_path / "cfg.json", raw)
    out = tmp_path / "out"
    rc = cli_main(["kramers-sweep", "--config", cfgp, "--out", str(out)])
    assert rc == 0
    assert "3 cell(s) flagged" in capsys.readouterr().out
    b = ResultBundle.load(str(out / "bundle.json"))
    assert b.records == [] and len(b.flags) == 3
    assert b.summary["fit"] is None


def test_cli_runtime_failure_exit_three_with_note(tmp_path, capsys):
    # schema-valid, but the layered model refuses a zero starting scale
    raw = {
        "seed": 0,
        "model": {
            "family": "mlp-1-hidden",
            "input_dim": 1,
            "n_classes": 2,
            "hidden": 4,
            "activation": "tanh",
        },
        "data": {"n_samples": 20, "separation": 4.0},
        "beta_grid": [10.0, 1.0],
        "prior_scale2": 1.0,
        "trainer": {"step_size": 0.3, "max_iters": 200, "grad_tol": 1e-6},
    }
    cfgp = _write_json(tmp_path / "cfg.json", raw)
    out = tmp_path / "out"
    rc = cli_main(["structure-curve", "--config", cfgp, "--out", str(out)])
    assert rc == 3
    note = json.loads((out / "aborted.json").read_text())
    assert note["kind"] == "structure-curve"
    assert note["config"]["seed"] == 0
    assert "init_scale" in note["error"]
    assert capsys.readouterr().err.startswith("error: experiment failed")
