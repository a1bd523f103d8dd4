"""Seeded experiment runner with deterministic, worker-count-invariant output.

Seed discipline: every random stream derives from
``SeedSequence([master_seed, replication, n, STREAM, ...])``, so adding
replications or changing the worker count never perturbs existing
records.  Tasks are pure functions of ``(config, replication, n)`` and
results are merged in ``(replication, n, x_index)`` order.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import BOUND_TOL, gap_bound_report
from .config import ExperimentConfig, config_from_dict
from .curvature import max_fisher_eig_in_ball
from .decision import FiniteMarginal, GroundTruth
from .estimators import (
    BerryEsseenRadius,
    EpsilonCalibrated,
    FixedRadius,
    fit_mle,
    noisy_ball_region,
    plugin_region,
    sigma_min_unconditional,
)
from .models import (
    CategoricalTableModel,
    OverparamSoftmaxModel,
    SoftmaxLinearModel,
)
from .nml import OptConfig

__all__ = [
    "ExperimentRecord",
    "RECORD_COLUMNS",
    "build_model",
    "build_truth",
    "run_experiment",
    "emit_tables",
    "aggregate_records",
    "records_csv_equal",
    "decay_study",
    "OUT_DIR_ENV",
]

OUT_DIR_ENV = "METANML_OUT"

# sub-stream tags under (master, rep, n)
_STREAM_DATA = 0
_STREAM_OPT = 1
_STREAM_TIE = 2
_STREAM_BALL = 3
_STREAM_THETA0 = 4
_STREAM_PANEL = 5


@dataclass
class ExperimentRecord:
    schema_version: int
    name: str
    seed: int
    rep: int
    n: int
    x_index: int
    schedule: str
    radius: float
    gap: float
    approx_gap: float
    leakage: float
    gap_bound: float
    fisher_bound: float | None
    sqrt_n_bound: float | None
    coverage: bool | None
    gap_bound_holds: bool
    fisher_bound_holds: bool | None
    predicted_class: int
    map_class: int
    warn: str
    wall_time_s: float


RECORD_COLUMNS = [
    "schema_version", "name", "seed", "rep", "n", "x_index", "schedule",
    "radius", "gap", "approx_gap", "leakage", "gap_bound", "fisher_bound",
    "sqrt_n_bound", "coverage", "gap_bound_holds", "fisher_bound_holds",
    "predicted_class", "map_class", "warn", "wall_time_s",
]


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def build_model(cfg):
    if cfg.model == "categorical":
        return CategoricalTableModel(cfg.num_cells, cfg.num_classes)
    if cfg.model == "softmax":
        return SoftmaxLinearModel(cfg.num_features, cfg.num_classes)
    return OverparamSoftmaxModel(cfg.num_features, cfg.num_classes)


def build_truth(cfg, model):
    """Ground truth panel, marginal, and true parameter from the config."""
    if cfg.theta0:
        theta0 = np.asarray(cfg.theta0, dtype=float)
        if theta0.shape != (model.dim,):
            raise ValueError(
                f"theta0 must have {model.dim} entries, got {theta0.size}")
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, _STREAM_THETA0]))
        theta0 = cfg.theta0_scale * rng.standard_normal(model.dim)
    if cfg.model == "categorical":
        xs = list(range(cfg.num_cells))
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, _STREAM_PANEL]))
        xs = [rng.standard_normal(cfg.num_features) for _ in range(cfg.num_x)]
    if cfg.x_marginal:
        marginal = FiniteMarginal(cfg.x_marginal)
        if marginal.size != len(xs):
            raise ValueError("x_marginal length must match the panel size")
    else:
        marginal = FiniteMarginal.uniform(len(xs))
    return GroundTruth.from_model(model, theta0, xs, marginal)


def _eval_indices(cfg, gt):
    if cfg.eval_panel is None or cfg.eval_panel >= len(gt.xs):
        return list(range(len(gt.xs)))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_PANEL, 1]))
    return sorted(rng.choice(len(gt.xs), size=cfg.eval_panel, replace=False).tolist())


def _opt_seed(master, rep, n, x_index):
    ss = np.random.SeedSequence([master, rep, n, _STREAM_OPT, x_index])
    hi, lo = ss.generate_state(2)
    return (int(hi) << 32) | int(lo)


def _sigma_min_oracle(cfg, model, gt):
    return sigma_min_unconditional(model, gt.theta0, gt.xs, gt.marginal.probs)


def _replication_task(args):
    """One (replication, n) unit; pure function of its arguments."""
    cfg, rep, n = args
    model = build_model(cfg)
    gt = build_truth(cfg, model)
    eval_idx = _eval_indices(cfg, gt)
    data_rng = np.random.default_rng(
        np.random.SeedSequence([cfg.seed, rep, n, _STREAM_DATA]))
    dataset = gt.sample(n, data_rng)
    fit = fit_mle(model, dataset)
    kind = cfg.schedule_kind

    sigma_min = None
    region_global = None
    rho = 0.0
    sqrt_n_ready = False
    if kind == "fixed":
        region_global = noisy_ball_region(model, fit.theta, FixedRadius(cfg.rho))
        rho = cfg.rho
    elif kind == "plugin":
        region_global = plugin_region(fit.theta)
        rho = 0.0
    elif kind == "berry_esseen":
        if cfg.sigma_min_mode == "oracle":
            sigma_min = _sigma_min_oracle(cfg, model, gt)
        else:
            sigma_min = sigma_min_unconditional(model, fit.theta, gt.xs,
                                                gt.marginal.probs)
        rule = BerryEsseenRadius(cfg.delta, cfg.c, sigma_min)
        region_global = noisy_ball_region(model, fit.theta, rule, n=n)
        rho = region_global.radius
        sqrt_n_ready = True
    elif kind == "epsilon" and not cfg.per_query:
        ref_x = gt.xs[cfg.reference_x]
        ball_seed = _opt_seed(cfg.seed, rep, n, _STREAM_BALL)
        region_global = noisy_ball_region(
            model, fit.theta,
            EpsilonCalibrated(cfg.epsilon, seed=ball_seed), x=ref_x)
        rho = region_global.radius

    records = []
    coverage = None
    for x_index in eval_idx:
        t0 = time.perf_counter()
        if region_global is not None:
            region = region_global
        else:  # per-query epsilon rule
            ball_seed = _opt_seed(cfg.seed, rep, n, _STREAM_BALL) + x_index
            region = noisy_ball_region(
                model, fit.theta,
                EpsilonCalibrated(cfg.epsilon, seed=ball_seed),
                x=gt.xs[x_index])
        opt = OptConfig(seed=_opt_seed(cfg.seed, rep, n, x_index))
        tie_rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, rep, n, _STREAM_TIE, x_index]))
        report = gap_bound_report(gt, model, region, x_index, opt, tie_rng)
        sqrt_n_bound = None
        if sqrt_n_ready:
            sig2 = max_fisher_eig_in_ball(
                model, gt.theta0, 2.0 * region.radius, gt.xs[x_index],
                seed=_opt_seed(cfg.seed, rep, n, _STREAM_BALL))
            sqrt_n_bound = 2.0 * math.sqrt(max(sig2, 0.0) / sigma_min) / math.sqrt(n)
        if getattr(region, "radius", None) is not None and gt.theta0 is not None:
            coverage = bool(
                np.linalg.norm(fit.theta - gt.theta0) <= region.radius)
        else:
            coverage = None
        warn = ";".join(tuple(fit.warnings) + tuple(report.warnings))
        records.append(ExperimentRecord(
            schema_version=cfg.schema_version,
            name=cfg.name,
            seed=cfg.seed,
            rep=rep,
            n=n,
            x_index=x_index,
            schedule=kind,
            radius=float(getattr(region, "radius", 0.0) or 0.0),
            gap=report.gap,
            approx_gap=report.approx_gap,
            leakage=report.leakage,
            gap_bound=report.gap_bound,
            fisher_bound=report.fisher_bound,
            sqrt_n_bound=sqrt_n_bound,
            coverage=coverage,
            gap_bound_holds=report.gap_bound_holds,
            fisher_bound_holds=report.fisher_bound_holds,
            predicted_class=report.predicted_class,
            map_class=report.map_class,
            warn=warn,
            wall_time_s=time.perf_counter() - t0,
        ))
    return records


def run_experiment(cfg, workers=None, out_dir=None, master_seed=None):
    """Run all (replication, n) units and aggregate.

    Returns ``(records, aggregate, paths)``; ``paths`` is None unless an
    output directory was resolved from the argument, the METANML_OUT
    environment variable, or the config.
    """
    if master_seed is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "seed": int(master_seed)})
    n_workers = workers if workers is not None else cfg.workers
    tasks = [(cfg, rep, n) for rep in range(cfg.replications)
             for n in cfg.n_grid]
    if n_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            chunks = list(pool.map(_replication_task, tasks, chunksize=4))
    else:
        chunks = [_replication_task(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r.rep, r.n, r.x_index))
    aggregate = aggregate_records(cfg, records)
    resolved = out_dir or os.environ.get(OUT_DIR_ENV) or cfg.out_dir
    paths = emit_tables(records, aggregate, resolved) if resolved else None
    return records, aggregate, paths


def _median(values):
    return float(np.median(np.asarray(values, dtype=float))) if values else None


def aggregate_records(cfg, records):
    """Per-n medians, coverage frequency, violations, and the decay slope."""
    per_n = []
    for n in sorted(set(r.n for r in records)):
        rs = [r for r in records if r.n == n]
        cov = [r.coverage for r in rs if r.coverage is not None]
        chain_viol = sum(
            1 for r in rs
            if r.coverage and r.sqrt_n_bound is not None
            and math.expm1(r.leakage) > r.sqrt_n_bound + BOUND_TOL)
        per_n.append({
            "n": n,
            "records": len(rs),
            "median_gap": _median([r.gap for r in rs]),
            "median_exp_leak_minus_1": _median(
                [math.expm1(r.leakage) for r in rs]),
            "median_gap_bound": _median([r.gap_bound for r in rs]),
            "median_sqrt_n_bound": _median(
                [r.sqrt_n_bound for r in rs if r.sqrt_n_bound is not None]),
            "coverage_freq": (float(np.mean(cov)) if cov else None),
            "chain_violations": chain_viol,
            "gap_bound_violations": sum(1 for r in rs if not r.gap_bound_holds),
            "fisher_bound_violations": sum(
                1 for r in rs if r.fisher_bound_holds is False),
        })
    slope = None
    pts = [(row["n"], row["median_exp_leak_minus_1"]) for row in per_n
           if row["median_exp_leak_minus_1"] and row["median_exp_leak_minus_1"] > 0]
    if len(pts) >= 2:
        lx = np.log([p[0] for p in pts])
        ly = np.log([p[1] for p in pts])
        slope = float(np.polyfit(lx, ly, 1)[0])
    empirical_n0 = None
    for row in sorted(per_n, key=lambda r: r["n"]):
        gaps = [r.gap for r in records if r.n == row["n"]]
        if gaps and float(np.quantile(gaps, 0.95)) <= 0.05:
            empirical_n0 = row["n"]
            break
    return {
        "schema_version": cfg.schema_version,
        "name": cfg.name,
        "master_seed": cfg.seed,
        "schedule": cfg.schedule_kind,
        "total_records": len(records),
        "per_n": per_n,
        "leak_decay_slope": slope,
        "empirical_n0": empirical_n0,
        "total_gap_bound_violations": sum(
            row["gap_bound_violations"] for row in per_n),
        "total_chain_violations": sum(row["chain_violations"] for row in per_n),
    }


def emit_tables(records, aggregate, out_dir):
    """Write records.csv, summary.json, and plot.csv under ``out_dir``."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        rec_path = os.path.join(out_dir, "records.csv")
        with open(rec_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(RECORD_COLUMNS)
            for r in records:
                writer.writerow([_cell(getattr(r, col)) for col in RECORD_COLUMNS])
        sum_path = os.path.join(out_dir, "summary.json")
        with open(sum_path, "w", encoding="utf-8") as fh:
            json.dump(aggregate, fh, indent=2, sort_keys=True)
            fh.write("\n")
        plot_path = os.path.join(out_dir, "plot.csv")
        with open(plot_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "median_gap", "median_exp_leak_minus_1",
                             "median_gap_bound", "median_sqrt_n_bound"])
            for row in aggregate["per_n"]:
                writer.writerow([_cell(row["n"]),
                                 _cell(row["median_gap"]),
                                 _cell(row["median_exp_leak_minus_1"]),
                                 _cell(row["median_gap_bound"]),
                                 _cell(row["median_sqrt_n_bound"])])
    except OSError as exc:
        raise OSError(f"cannot write tables under {out_dir}: {exc}") from exc
    return {"records": rec_path, "summary": sum_path, "plot": plot_path}


def records_csv_equal(path_a, path_b, ignore=("wall_time_s",)):
    """Byte-level equality of two record tables, skipping timing columns."""

    def load(path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header = rows[0]
        keep = [i for i, col in enumerate(header) if col not in ignore]
        return [[row[i] for i in keep] for row in rows]

    return load(path_a) == load(path_b)


_LOGIT_07 = 0.8472978603872034  # ln(0.7 / 0.3)


def decay_preset(replications=200, master_seed=20250807, workers=4,
                 out_dir=None):
    """Two-class decay study: CLT-radius balls on a Bernoulli truth."""
    return config_from_dict(dict(
        name="bernoulli-decay",
        model="categorical",
        num_classes=2,
        num_cells=1,
        theta0=(_LOGIT_07,),
        seed=master_seed,
        schedule_kind="berry_esseen",
        delta=0.05,
        c=0.0,
        sigma_min_mode="oracle",
        n_grid=(100, 1000, 10000),
        replications=replications,
        workers=workers,
        out_dir=out_dir,
    ))


def decay_study(replications=200, master_seed=20250807, workers=4,
                out_dir=None):
    """Run the decay preset and return (records, aggregate, paths)."""
    cfg = decay_preset(replications, master_seed, workers, out_dir)
    return run_experiment(cfg, workers=workers, out_dir=out_dir)
