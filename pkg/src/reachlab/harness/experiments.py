"""Experiment runners behind the CLI.

Each runner takes a parsed ExperimentConfig, executes its sweep cells
(concurrently when asked -- every cell draws from its own seed stream,
so scheduling cannot change results), and persists a ResultBundle plus
schema-checked CSVs and plot data under the output directory.

Domain failures inside a cell (diverged training, an ensemble that
never converges) flag that cell and the sweep continues; programming
errors propagate and abort the run.
"""

import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import stats

from .. import action, complexity, diffusion, landscape, rates, tasks
from .._version import __version__
from ..errors import ContractError, NumericalError, SimulationError, TrainingDivergedError
from ..rng import stream
from .bundle import ResultBundle, timing_stamp
from .config import (
    build_model,
    build_sgd,
    build_trainer,
    check_potential,
    parse_config,
)
from .io import PlotSet, canonical_json, validate_path_csv, write_csv

# spawn-path tags under the experiment seed; one tag per purpose keeps
# every consumer on a provably disjoint stream
_DATA, _CORRUPT, _TRAIN, _CELL, _NOISE = 1, 2, 3, 4, 5

_DOMAIN_ERRORS = (ContractError, NumericalError, SimulationError, TrainingDivergedError)


def _sub_seed(seed, *path):
    """Derive an independent integer seed for a library call."""
    return int(stream(seed, *path).integers(1 << 62))


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _map_cells(fn, arg_list, workers):
    """Run cells in order; returns (ok, result-or-message) per cell."""
    if workers > 1 and len(arg_list) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(arg_list))) as ex:
            futures = [ex.submit(fn, a) for a in arg_list]
            out = []
            for f in futures:
                try:
                    out.append((True, f.result()))
                except _DOMAIN_ERRORS as exc:
                    out.append((False, f"{type(exc).__name__}: {exc}"))
            return out
    out = []
    for a in arg_list:
        try:
            out.append((True, fn(a)))
        except _DOMAIN_ERRORS as exc:
            out.append((False, f"{type(exc).__name__}: {exc}"))
    return out


def _spearman(xs, ys):
    if len(xs) < 3:
        return None
    rho = stats.spearmanr(xs, ys).statistic
    return _finite_or_none(rho)


# -- shared task construction --------------------------------------------------


def _base_dataset(params, seed):
    model = build_model(params["model"])
    d = params["data"]
    data = tasks.generate_blobs(
        model.n_classes, d["n_samples"], model.input_dim, d["separation"], _sub_seed(seed, _DATA)
    )
    return model, data


def _spec_dataset(params, seed, k):
    """Dataset for task-spec k: base blobs, class subset, label noise.

    Every spec in a family corrupts through the same stream, so two specs
    that differ only in corruption level share corrupted rows: the family
    is nested by construction, not just in expectation.
    """
    model, data = _base_dataset(params, seed)
    spec = params["tasks"][k]
    if spec["keep_classes"] is not None:
        data = tasks.subset_classes(data, spec["keep_classes"])
    if spec["corruption"] > 0:
        data = tasks.corrupt_labels(data, spec["corruption"], _sub_seed(seed, _CORRUPT))
    return model, data


# restarts for the loss-floor estimate: a single descent can land in a shallow
# basin and skew the convergence threshold for its whole cell
_FLOOR_RESTARTS = 4


def _threshold_point(task, trainer, extra, name):
    """Convergence threshold: estimated minimum loss plus a margin."""
    min_loss, w_min, ok = np.inf, None, False
    for r in range(_FLOOR_RESTARTS):
        tr = dataclasses.replace(trainer, seed=trainer.seed + r)
        w, conv, _ = complexity.train_minimizer(task, tr, name=name)
        val = tasks.loss(task, w)
        if val < min_loss:
            min_loss, w_min, ok = val, w, conv
    return float(min_loss + extra), float(min_loss), bool(ok), w_min


# -- kramers-sweep -------------------------------------------------------------


def _kramers_cell(args):
    params, seed, k, D = args
    pot = check_potential(params["potential"])
    dp = diffusion.DiffusionParams(
        D=D, dt=params["dt"], max_steps=params["max_steps"], seed=_sub_seed(seed, _CELL, k)
    )
    st = diffusion.first_passage(
        pot,
        np.array(params["w0"]),
        np.array(params["target"]),
        params["radius"],
        dp,
        params["n_runs"],
    )
    return {
        "D": D,
        "inv_D": 1.0 / D,
        "mean_time": st.mean,
        "median_time": st.median,
        "rate": st.rate,
        "n_runs": st.n_runs,
        "n_censored": st.n_censored,
        "samples": [float(v) for v in st.samples],
    }


def run_kramers_sweep(cfg, out_dir, workers=1):
    params, seed = cfg.params, cfg.seed
    t0 = time.time()
    args = [(params, seed, k, D) for k, D in enumerate(params["d_grid"])]
    results = _map_cells(_kramers_cell, args, workers)
    records, flags = [], {}
    for (ok, res), D in zip(results, params["d_grid"]):
        if ok:
            records.append(res)
        else:
            flags[f"D={D:g}"] = res
    summary = {"barrier": None, "barrier_if_half_exponent": None, "fit": None}
    if len(records) >= 3:
        fit = rates.arrhenius_fit([(r["inv_D"], r["mean_time"]) for r in records])
        summary = {
            "barrier": fit.slope,
            "barrier_if_half_exponent": 2.0 * fit.slope,
            "fit": fit.to_dict(),
        }
    bundle = ResultBundle(
        cfg.kind,
        cfg.snapshot(),
        __version__,
        records,
        summary,
        flags,
        timing_stamp(t0, time.time(), workers),
    )
    bundle.save(out_dir)
    write_csv(
        os.path.join(out_dir, "kramers_sweep.csv"),
        "kramers_sweep.csv",
        [
            (
                r["D"],
                r["inv_D"],
                r["mean_time"],
                r["median_time"],
                r["rate"],
                r["n_runs"],
                r["n_censored"],
            )
            for r in records
        ],
    )
    plots = PlotSet(out_dir)
    plots.add(
        "arrhenius.dat",
        ["inv_D", "log_mean_time"],
        [(r["inv_D"], math.log(r["mean_time"])) for r in records],
    )
    if summary["fit"] is not None:
        s, b = summary["fit"]["slope"], summary["fit"]["intercept"]
        plots.add(
            "arrhenius_fit.dat",
            ["inv_D", "fitted_log_time"],
            [(r["inv_D"], b + s * r["inv_D"]) for r in records],
        )
    plots.finish()
    return bundle


# -- label-sweep ---------------------------------------------------------------


def _label_cell(args):
    params, seed, k, rho = args
    model, base = _base_dataset(params, seed)
    # one corruption stream for the whole grid: corrupted rows nest as
    # rho grows, so the sweep is not clouded by independent redraws
    data = tasks.corrupt_labels(base, rho, _sub_seed(seed, _CORRUPT)) if rho > 0 else base
    task = tasks.Task(data, model)
    trainer = build_trainer(params["trainer"], _sub_seed(seed, _TRAIN))
    threshold, min_loss, descent_ok, _ = _threshold_point(
        task, trainer, params["threshold_extra"], f"rho={rho:g}"
    )
    w_mean, mean_ok, _ = complexity.train_posterior_mean(
        data, model, params["beta"], params["prior_scale2"], trainer, name=f"rho={rho:g}"
    )
    rep = complexity.c_beta(task, w_mean, params["beta"], params["prior_scale2"])
    st = diffusion.convergence_time(
        task,
        complexity.initial_point(model, trainer),
        threshold,
        build_sgd(params["sgd"]),
        params["n_runs"],
        _sub_seed(seed, _CELL, k),
    )
    return {
        "rho": rho,
        "c_beta": rep.total,
        "c_beta_parts": rep.to_dict(),
        "median_time": st.median,
        "mean_time": st.mean,
        "n_censored": st.n_censored,
        "n_runs": st.n_runs,
        "samples": [float(v) for v in st.samples],
        "threshold": threshold,
        "min_loss": min_loss,
        "descent_converged": bool(descent_ok and mean_ok),
    }


def run_label_sweep(cfg, out_dir, workers=1):
    params, seed = cfg.params, cfg.seed
    t0 = time.time()
    grid = params["corruption_grid"]
    results = _map_cells(
        _label_cell, [(params, seed, k, rho) for k, rho in enumerate(grid)], workers
    )
    records, flags = [], {}
    for (ok, res), rho in zip(results, grid):
        if ok:
            records.append(res)
        else:
            flags[f"rho={rho:g}"] = res
    by_rho = sorted(records, key=lambda r: r["rho"])
    cb = [r["c_beta"] for r in by_rho]
    med = [r["median_time"] for r in by_rho]
    summary = {
        "spearman_cbeta_time": _spearman(cb, med),
        "cbeta_increasing_in_rho": bool(all(a < b for a, b in zip(cb, cb[1:]))) if cb else False,
    }
    bundle = ResultBundle(
        cfg.kind,
        cfg.snapshot(),
        __version__,
        records,
        summary,
        flags,
        timing_stamp(t0, time.time(), workers),
    )
    bundle.save(out_dir)
    write_csv(
        os.path.join(out_dir, "label_sweep.csv"),
        "label_sweep.csv",
        [
            (
                r["rho"],
                r["c_beta"],
                r["median_time"],
                r["mean_time"],
                r["n_censored"],
                r["n_runs"],
                r["threshold"],
                r["min_loss"],
            )
            for r in records
        ],
    )
    plots = PlotSet(out_dir)
    plots.add("complexity_vs_rho.dat", ["rho", "c_beta"], [(r["rho"], r["c_beta"]) for r in by_rho])
    plots.add(
        "time_vs_rho.dat", ["rho", "median_time"], [(r["rho"], r["median_time"]) for r in by_rho]
    )
    plots.add(
        "time_vs_complexity.dat",
        ["c_beta", "median_time"],
        [(r["c_beta"], r["median_time"]) for r in by_rho],
    )
    plots.finish()
    return bundle


# -- batch-sweep ---------------------------------------------------------------


def _batch_cell(args):
    params, seed, k, B = args
    model, data = _base_dataset(params, seed)
    task = tasks.Task(data, model)
    trainer = build_trainer(params["trainer"], _sub_seed(seed, _TRAIN))
    threshold, min_loss, _, _ = _threshold_point(
        task, trainer, params["threshold_extra"], f"B={B}"
    )
    w0 = complexity.initial_point(model, trainer)
    sgd = build_sgd({"eta": params["eta"], "max_steps": params["max_steps"]}, batch_size=B)
    st = diffusion.convergence_time(
        task, w0, threshold, sgd, params["n_runs"], _sub_seed(seed, _CELL, k)
    )
    S_hat = diffusion.noise_covariance(
        task, w0, B, params["noise_draws"], _sub_seed(seed, _NOISE, k)
    )
    S_exact = diffusion.exact_minibatch_covariance(task, w0, B)
    denom = float(np.linalg.norm(S_exact))
    frob = float(np.linalg.norm(S_hat - S_exact)) / denom if denom > 0 else float("nan")
    return {
        "batch_size": B,
        "noise_trace": float(np.trace(S_hat)),
        "noise_trace_exact": float(np.trace(S_exact)),
        "frobenius_rel_err": _finite_or_none(frob),
        "median_time": st.median,
        "mean_time": st.mean,
        "n_censored": st.n_censored,
        "n_runs": st.n_runs,
        "threshold": threshold,
        "min_loss": min_loss,
    }


def run_batch_sweep(cfg, out_dir, workers=1):
    params, seed = cfg.params, cfg.seed
    t0 = time.time()
    grid = params["batch_grid"]
    results = _map_cells(
        _batch_cell, [(params, seed, k, B) for k, B in enumerate(grid)], workers
    )
    records, flags = [], {}
    for (ok, res), B in zip(results, grid):
        if ok:
            records.append(res)
        else:
            flags[f"B={B}"] = res
    trace_by_b = {r["batch_size"]: r["noise_trace"] for r in records}
    ratio_pairs = [
        [b, trace_by_b[b] / trace_by_b[2 * b]]
        for b in sorted(trace_by_b)
        if 2 * b in trace_by_b and trace_by_b[2 * b] > 0
    ]
    summary = {
        "trace_ratio_pairs": ratio_pairs,
        "max_frobenius_rel_err": max((r["frobenius_rel_err"] for r in records), default=None),
    }
    bundle = ResultBundle(
        cfg.kind,
        cfg.snapshot(),
        __version__,
        records,
        summary,
        flags,
        timing_stamp(t0, time.time(), workers),
    )
    bundle.save(out_dir)
    write_csv(
        os.path.join(out_dir, "batch_sweep.csv"),
        "batch_sweep.csv",
        [
            (
                r["batch_size"],
                r["noise_trace"],
                r["noise_trace_exact"],
                r["frobenius_rel_err"],
                r["median_time"],
                r["mean_time"],
                r["n_censored"],
                r["n_runs"],
            )
            for r in records
        ],
    )
    plots = PlotSet(out_dir)
    plots.add(
        "batch_sweep.dat",
        ["batch_size", "noise_trace", "median_time"],
        [(r["batch_size"], r["noise_trace"], r["median_time"]) for r in records],
    )
    plots.finish()
    return bundle


# -- complexity-scatter --------------------------------------------------------


def _scatter_cell(args):
    params, seed, k = args
    model, data = _spec_dataset(params, seed, k)
    label = params["tasks"][k]["label"]
    task = tasks.Task(data, model)
    trainer = build_trainer(params["trainer"], _sub_seed(seed, _TRAIN))
    threshold, min_loss, _, _ = _threshold_point(task, trainer, params["threshold_extra"], label)
    w_mean, _, _ = complexity.train_posterior_mean(
        data, model, params["beta"], params["prior_scale2"], trainer, name=label
    )
    rep = complexity.c_beta(task, w_mean, params["beta"], params["prior_scale2"])
    st = diffusion.convergence_time(
        task,
        complexity.initial_point(model, trainer),
        threshold,
        build_sgd(params["sgd"]),
        params["n_runs"],
        _sub_seed(seed, _CELL, k),
    )
    return {
        "label": label,
        "c_beta": rep.total,
        "c_beta_parts": rep.to_dict(),
        "median_time": st.median,
        "mean_time": st.mean,
        "n_censored": st.n_censored,
        "n_runs": st.n_runs,
        "threshold": threshold,
        "min_loss": min_loss,
    }


def run_complexity_scatter(cfg, out_dir, workers=1):
    params, seed = cfg.params, cfg.seed
    t0 = time.time()
    n = len(params["tasks"])
    results = _map_cells(_scatter_cell, [(params, seed, k) for k in range(n)], workers)
    records, flags = [], {}
    for (ok, res), spec in zip(results, params["tasks"]):
        if ok:
            records.append(res)
        else:
            flags[spec["label"]] = res
    pts = [
        (r["c_beta"], r["median_time"])
        for r in records
        if r["median_time"] is not None and r["median_time"] > 0
    ]
    fit = None
    if len(pts) >= 3:
        rf = rates.arrhenius_fit(pts)
        fit = {"slope": rf.slope, "intercept": rf.intercept, "r2": rf.r2}
    summary = {
        "spearman_cbeta_time": _spearman(
            [r["c_beta"] for r in records], [r["median_time"] for r in records]
        ),
        "log_time_fit": fit,
    }
    bundle = ResultBundle(
        cfg.kind,
        cfg.snapshot(),
        __version__,
        records,
        summary,
        flags,
        timing_stamp(t0, time.time(), workers),
    )
    bundle.save(out_dir)
    write_csv(
        os.path.join(out_dir, "complexity_scatter.csv"),
        "complexity_scatter.csv",
        [
            (r["label"], r["c_beta"], r["median_time"], r["mean_time"], r["n_censored"], r["n_runs"])
            for r in records
        ],
    )
    plots = PlotSet(out_dir)
    plots.add(
        "complexity_scatter.dat",
        ["c_beta", "median_time"],
        [(r["c_beta"], r["median_time"]) for r in records],
    )
    plots.finish()
    return bundle


# -- finetune-matrix -----------------------------------------------------------


def _finetune_prep_cell(args):
    params, seed, i = args
    model, data = _spec_dataset(params, seed, i)
    label = params["tasks"][i]["label"]
    task = tasks.Task(data, model)
    trainer = build_trainer(params["trainer"], _sub_seed(seed, _TRAIN))
    threshold, min_loss, ok, w_min = _threshold_point(
        task, trainer, params["threshold_extra"], label
    )
    return {
        "label": label,
        "threshold": threshold,
        "min_loss": min_loss,
        "descent_converged": ok,
        "w_min": [float(v) for v in w_min],
    }


def _finetune_cell(args):
    """One matrix cell: start at task i's minimizer, converge on task j.

    An ensemble in which no run converges is the analogue of an
    unreachable fine-tuning target, so it is recorded as a fully
    censored cell rather than treated as an error.
    """
    params, seed, i, j, w_start, threshold = args
    model, data = _spec_dataset(params, seed, j)
    task = tasks.Task(data, model)
    rec = {
        "from": params["tasks"][i]["label"],
        "to": params["tasks"][j]["label"],
        "median_time": None,
        "mean_time": None,
        "n_censored": params["n_runs"],
        "n_runs": params["n_runs"],
    }
    try:
        st = diffusion.convergence_time(
            task,
            np.array(w_start),
            threshold,
            build_sgd(params["sgd"]),
            params["n_runs"],
            _sub_seed(seed, _CELL, i, j),
        )
    except SimulationError:
        return rec
    rec.update(
        median_time=st.median,
        mean_time=st.mean,
        n_censored=st.n_censored,
    )
    return rec


def _checkpoint_path(ck_dir, i, j):
    return os.path.join(ck_dir, f"cell_{i}_{j}.json")


def _load_checkpoint(ck_dir, cfg_hash, i, j):
    try:
        with open(_checkpoint_path(ck_dir, i, j)) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError):
        return None
    if d.get("config_sha256") != cfg_hash:
        return None
    return d.get("record")


def run_finetune_matrix(cfg, out_dir, workers=1):
    params, seed = cfg.params, cfg.seed
    t0 = time.time()
    labels = [s["label"] for s in params["tasks"]]
    n = len(labels)
    os.makedirs(out_dir, exist_ok=True)

    prep_out = _map_cells(_finetune_prep_cell, [(params, seed, i) for i in range(n)], workers)
    preps, flags = [None] * n, {}
    for i, (ok, res) in enumerate(prep_out):
        if ok:
            preps[i] = res
        else:
            flags[f"prep:{labels[i]}"] = res

    cell_ids = [
        (i, j) for i in range(n) for j in range(n) if preps[i] is not None and preps[j] is not None
    ]
    cfg_hash = hashlib.sha256(canonical_json(cfg.snapshot()).encode()).hexdigest()
    ck_dir = os.path.join(out_dir, "checkpoint")
    os.makedirs(ck_dir, exist_ok=True)
    cells, todo = {}, []
    for i, j in cell_ids:
        rec = _load_checkpoint(ck_dir, cfg_hash, i, j)
        if rec is not None:
            cells[(i, j)] = rec
        else:
            todo.append((i, j))
    reused = len(cells)
    out = _map_cells(
        _finetune_cell,
        [(params, seed, i, j, preps[i]["w_min"], preps[j]["threshold"]) for i, j in todo],
        workers,
    )
    for (i, j), (ok, res) in zip(todo, out):
        if not ok:
            flags[f"cell:{labels[i]}->{labels[j]}"] = res
            continue
        cells[(i, j)] = res
        with open(_checkpoint_path(ck_dir, i, j), "w") as fh:
            fh.write(canonical_json({"config_sha256": cfg_hash, "record": res}))

    records = [cells[(i, j)] for i in range(n) for j in range(n) if (i, j) in cells]
    times = [
        [cells[(i, j)]["median_time"] if (i, j) in cells else None for j in range(n)]
        for i in range(n)
    ]

    # distance matrix over the same datasets, same trainer discipline
    model = build_model(params["model"])
    datasets = [_spec_dataset(params, seed, k)[1] for k in range(n)]
    trainer = build_trainer(params["trainer"], _sub_seed(seed, _TRAIN))
    dm = complexity.distance_matrix(
        datasets, model, params["beta"], params["prior_scale2"], trainer, ids=labels
    )
    dmd = dm.to_json_dict()

    scatter = [
        (labels[i], labels[j], dmd["values"][i][j], times[i][j])
        for i in range(n)
        for j in range(n)
        if i != j and dmd["values"][i][j] is not None and times[i][j] is not None
    ]
    agree = disagree = 0
    for i in range(n):
        for j in range(i + 1, n):
            tij, tji = times[i][j], times[j][i]
            dij, dji = dmd["values"][i][j], dmd["values"][j][i]
            if None in (tij, tji, dij, dji):
                continue
            if (tij - tji) * (dij - dji) > 0:
                agree += 1
            else:
                disagree += 1
    summary = {
        "labels": labels,
        "median_times": times,
        "distances": dmd["values"],
        "distance_flags": dmd["flags"],
        "base_complexities": dmd["base_totals"],
        "prep": [p if p is not None else None for p in preps],
        "spearman_distance_time": _spearman([s[2] for s in scatter], [s[3] for s in scatter]),
        "asymmetry_pairs_agree": agree,
        "asymmetry_pairs_total": agree + disagree,
    }
    bundle = ResultBundle(
        cfg.kind,
        cfg.snapshot(),
        __version__,
        records,
        summary,
        flags,
        timing_stamp(t0, time.time(), workers, cells_reused=reused),
    )
    bundle.save(out_dir)
    write_csv(
        os.path.join(out_dir, "finetune_times.csv"),
        "finetune_times.csv",
        [
            (
                labels[i],
                labels[j],
                cells[(i, j)]["median_time"],
                cells[(i, j)]["mean_time"],
                cells[(i, j)]["n_censored"],
                cells[(i, j)]["n_runs"],
            )
            for i in range(n)
            for j in range(n)
            if (i, j) in cells
        ],
    )
    write_csv(
        os.path.join(out_dir, "finetune_distances.csv"),
        "finetune_distances.csv",
        [
            (labels[i], labels[j], dmd["values"][i][j])
            for i in range(n)
            for j in range(n)
        ],
    )
    write_csv(
        os.path.join(out_dir, "finetune_scatter.csv"),
        "finetune_scatter.csv",
        scatter,
    )
    plots = PlotSet(out_dir)
    if scatter:
        plots.add(
            "transfer_scatter.dat",
            ["distance", "median_time"],
            [(s[2], s[3]) for s in scatter],
        )
    plots.finish()
    return bundle


# -- structure-curve -----------------------------------------------------------


def run_structure_curve(cfg, out_dir, workers=1):
    params, seed = cfg.params, cfg.seed
    t0 = time.time()
    model, data = _base_dataset(params, seed)
    if params["corruption"] > 0:
        data = tasks.corrupt_labels(data, params["corruption"], _sub_seed(seed, _CORRUPT, 0))
    task = tasks.Task(data, model)
    trainer = build_trainer(params["trainer"], _sub_seed(seed, _TRAIN))
    sc = complexity.structure_curve(task, params["beta_grid"], params["prior_scale2"], trainer)
    summary = {
        "monotone_loss_in_kl": sc.is_monotone(),
        "lambda2": params["prior_scale2"],
        "expected_loss_at_beta_max": sc.records[0]["expected_loss"],
        "log_n_classes": math.log(model.n_classes),
    }
    bundle = ResultBundle(
        cfg.kind,
        cfg.snapshot(),
        __version__,
        sc.records,
        summary,
        {},
        timing_stamp(t0, time.time(), workers),
    )
    bundle.save(out_dir)
    write_csv(
        os.path.join(out_dir, "structure_curve.csv"),
        "structure_curve.csv",
        [
            (r["beta"], r["kl_nats"], r["expected_loss"], int(r["converged"]), r["n_iter"])
            for r in sc.records
        ],
    )
    plots = PlotSet(out_dir)
    plots.add(
        "structure_curve.dat",
        ["kl_nats", "expected_loss"],
        sorted((r["kl_nats"], r["expected_loss"]) for r in sc.records),
    )
    plots.finish()
    return bundle


# -- action-check --------------------------------------------------------------


def _breakdown_record(name, brk):
    return {
        "path": name,
        "total": float(brk.total),
        "static_term": float(brk.static_term),
        "dynamic_term": float(brk.dynamic_term),
        "defect": float(brk.defect),
    }


def run_action_check(cfg, out_dir, workers=1):
    params = cfg.params
    t0 = time.time()
    pot = check_potential(params["potential"])
    w0, wf = np.array(params["start"]), np.array(params["end"])
    T, n_knots, D = params["duration"], params["n_knots"], params["D"]
    ts = np.linspace(0.0, T, n_knots)
    s = (ts / T)[:, None]
    straight = diffusion.Path(ts, w0[None, :] * (1 - s) + wf[None, :] * s)
    records = [_breakdown_record("straight", action.om_action(pot, straight, D))]
    summary = {"straight_total": records[0]["total"]}
    os.makedirs(out_dir, exist_ok=True)
    plots = PlotSet(out_dir)
    if params["optimize"]:
        crit = action.minimum_action_path(
            pot, w0, wf, T, n_knots, D, opt=action.OptConfig(maxiter=params["maxiter"])
        )
        records.append(_breakdown_record("optimized", crit.action))
        summary.update(
            optimized_total=records[1]["total"],
            action_drop=records[0]["total"] - records[1]["total"],
            el_residual=float(crit.el_residual),
            el_scale=float(crit.el_scale),
            optimizer_converged=bool(crit.converged),
            n_alternates=len(crit.alternates),
        )
        path_csv = os.path.join(out_dir, "action_path.csv")
        crit.path.to_csv(path_csv)
        validate_path_csv(path_csv)
        if crit.path.dim <= 2:
            cols = ["t"] + [f"w{i}" for i in range(crit.path.dim)]
            rows = [
                tuple([t] + list(w)) for t, w in zip(crit.path.times, crit.path.points)
            ]
            plots.add("optimal_path.dat", cols, rows)
    bundle = ResultBundle(
        cfg.kind,
        cfg.snapshot(),
        __version__,
        records,
        summary,
        {},
        timing_stamp(t0, time.time(), workers),
    )
    bundle.save(out_dir)
    write_csv(
        os.path.join(out_dir, "action_check.csv"),
        "action_check.csv",
        [
            (r["path"], r["total"], r["static_term"], r["dynamic_term"], r["defect"])
            for r in records
        ],
    )
    plots.finish()
    return bundle


# -- dispatch ------------------------------------------------------------------

RUNNERS = {
    "kramers-sweep": run_kramers_sweep,
    "label-sweep": run_label_sweep,
    "batch-sweep": run_batch_sweep,
    "complexity-scatter": run_complexity_scatter,
    "finetune-matrix": run_finetune_matrix,
    "structure-curve": run_structure_curve,
    "action-check": run_action_check,
}


def run_experiment(cfg, out_dir, workers=1):
    return RUNNERS[cfg.kind](cfg, out_dir, workers=workers)


def rerun(bundle_path, out_dir, workers=1):
    """Re-execute a bundle from its embedded config snapshot."""
    prev = ResultBundle.load(bundle_path)
    cfg = parse_config(prev.kind, dict(prev.config))
    return run_experiment(cfg, out_dir, workers=workers)
