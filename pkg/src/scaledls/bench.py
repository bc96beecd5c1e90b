"""Benchmark harness: scaled least squares against the batch baselines.

Protocol per (seed, dataset): run every configured method, take each
method's final test error, and set the minimum achievable test error to
the maximum of those finals. Each method is then scored by the time and
iteration count at which its test-error curve first drops to that
threshold. Reported times and iteration counts are medians over seeds.

The scaled-least-squares trace has two points: after the least-squares
step and after rescaling; its iteration count is the root-finder's. When
baselines start from the least-squares vector, the cost of computing that
vector is charged to their clocks as start-up time, so that every method
is measured end to end from raw data.
"""

from __future__ import annotations

import csv
import json
import platform
import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg

from ._backend import backend_name
from .errors import ScaledLSError
from .losses import as_family
from .optimize import (
    OptimizerConfig,
    empirical_risk,
    minimize,
    risk_gradient,
    test_error,
)
from .regression import fit_ols
from .sls import ScaleSolveConfig, fit_sls
from .synth import DesignSpec, load_csv, sample_dataset

BASELINES = ("nr", "ns", "bfgs", "lbfgs", "gd", "agd")
ALL_METHODS = ("sls",) + BASELINES

# failure modes recorded in the report instead of aborting the run
_METHOD_FAILURES = (ScaledLSError, scipy.linalg.LinAlgError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class CsvSpec:
    """A CSV-backed dataset: split seeds come from the run, not the file."""

    path: str
    response_column: object
    delimiter: str = ","
    has_header: bool = True
    test_fraction: float = 0.1


@dataclass(frozen=True)
class BenchConfig:
    dataset: object  # DesignSpec or CsvSpec
    family: object
    methods: tuple = ALL_METHODS
    init_mode: str = "ols"  # "ols" or "random"
    seeds: tuple = (0,)
    output: str | None = None
    formats: tuple = ("csv", "json")
    subsample: object = None  # forwarded to the least-squares step
    optimizer: OptimizerConfig | None = None  # template; method/init overridden
    scale: ScaleSolveConfig = ScaleSolveConfig()

    def __post_init__(self):
        if not self.methods:
            raise ValueError("methods must be nonempty")
        unknown = [m for m in self.methods if m not in ALL_METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {ALL_METHODS}")
        if self.init_mode not in ("ols", "random"):
            raise ValueError("init_mode must be 'ols' or 'random'")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        bad = [f for f in self.formats if f not in ("csv", "json")]
        if bad:
            raise ValueError(f"unknown formats {bad}")

    @property
    def repetitions(self):
        return len(self.seeds)


@dataclass
class MethodRun:
    """One method's trace on one seed, in threshold-ready form."""

    method: str
    seed: int
    iters: list = field(default_factory=list)
    cum_time_s: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    test_err: list = field(default_factory=list)
    failed: str | None = None

    @property
    def final_test_err(self):
        return self.test_err[-1]


@dataclass
class ThresholdStats:
    min_achievable_err: float
    per_method: dict  # method -> dict(time_s, iters, final_test_err, crossed)


def threshold_stats(runs):
    """Min-achievable-error threshold and first-crossing stats per method.

    ``runs`` maps method name to a MethodRun (failed runs excluded by the
    caller). The threshold is the max over methods of the final test error;
    crossing uses <=. A method that never crosses (possible only through
    floating noise) is scored at its final index and flagged.
    """
    if not runs:
        raise ValueError("threshold_stats needs at least one trace")
    for m, run in runs.items():
        if not run.test_err:
            raise ValueError(f"trace for {m} is empty")
    threshold = max(run.final_test_err for run in runs.values())
    per_method = {}
    for m, run in runs.items():
        crossed = True
        idx = None
        for i, err in enumerate(run.test_err):
            if err <= threshold:
                idx = i
                break
        if idx is None:
            idx = len(run.test_err) - 1
            crossed = False
        per_method[m] = {
            "time_s": run.cum_time_s[idx],
            "iters": run.iters[idx],
            "final_test_err": run.final_test_err,
            "crossed": crossed,
        }
    return ThresholdStats(min_achievable_err=threshold, per_method=per_method)


def _build_dataset(cfg, seed):
    if isinstance(cfg.dataset, DesignSpec):
        data, _ = sample_dataset(replace(cfg.dataset, seed=seed))
    elif isinstance(cfg.dataset, CsvSpec):
        spec = cfg.dataset
        data = load_csv(
            spec.path,
            spec.response_column,
            delimiter=spec.delimiter,
            has_header=spec.has_header,
            test_fraction=spec.test_fraction,
            seed=seed,
        )
    else:
        raise TypeError(f"unsupported dataset spec {type(cfg.dataset).__name__}")
    if data.test_mask is None:
        raise ValueError(
            "benchmarking needs a held-out split; the dataset has none "
            "(too few rows, or test_fraction = 0)"
        )
    return data


def _sls_run(data, family, cfg, seed):
    result = fit_sls(data, family, subsample=cfg.subsample, cfg=cfg.scale, seed=seed)
    run = MethodRun(method="sls", seed=seed)
    points = (
        (result.beta_ols, 0, result.ols_seconds),
        (result.beta_sls, result.root_trace.iterations, result.wall_time_seconds),
    )
    for beta, iters, t in points:
        run.iters.append(iters)
        run.cum_time_s.append(t)
        run.objective.append(empirical_risk(data, family, beta))
        run.grad_norm.append(float(np.linalg.norm(risk_gradient(data, family, beta))))
        run.test_err.append(test_error(data, family, beta))
    return run, result


def _optimizer_config(cfg, method, seed, init):
    template = cfg.optimizer or OptimizerConfig(method="gd")
    return replace(template, method=method, seed=seed, init=init)


def _baseline_run(data, family, cfg, method, seed, init, time_offset):
    opt_cfg = _optimizer_config(cfg, method, seed, init)
    trace = minimize(data, family, opt_cfg)
    run = MethodRun(method=method, seed=seed)
    run.iters = list(range(len(trace.objective)))
    run.cum_time_s = [time_offset + t for t in trace.cum_time_seconds]
    run.objective = list(trace.objective)
    run.grad_norm = list(trace.grad_norm)
    run.test_err = list(trace.test_error)
    return run


@dataclass
class BenchReport:
    per_method: dict
    min_achievable_err: float
    environment: dict
    config: dict
    per_seed: list
    runs: list  # every MethodRun, for trace emission

    def as_dict(self):
        return {
            "min_achievable_err": self.min_achievable_err,
            "per_method": self.per_method,
            "per_seed": self.per_seed,
            "environment": self.environment,
            "config": self.config,
        }


def _describe_config(cfg):
    if isinstance(cfg.dataset, DesignSpec):
        ds = {
            "kind": "synthetic",
            "n": cfg.dataset.n,
            "p": cfg.dataset.p,
            "base_dist": cfg.dataset.base_dist,
            "response": cfg.dataset.response,
        }
        if cfg.dataset.covariance is not None:
            ds["cov_condition"] = cfg.dataset.covariance.condition
            ds["cov_seed"] = cfg.dataset.covariance.seed
    else:
        ds = {
            "kind": "csv",
            "path": str(cfg.dataset.path),
            "response_column": cfg.dataset.response_column,
            "test_fraction": cfg.dataset.test_fraction,
        }
    return {
        "dataset": ds,
        "family": as_family(cfg.family).name,
        "methods": list(cfg.methods),
        "init_mode": cfg.init_mode,
        "seeds": list(cfg.seeds),
        "subsample": cfg.subsample if not isinstance(cfg.subsample, np.ndarray)
        else list(map(int, cfg.subsample)),
    }


def _environment():
    from scaledls import __version__  # deferred: bench is imported during init

    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": backend_name(),
        "scaledls": __version__,
    }


def run_bench(cfg):
    """Run every configured method on every seed and aggregate the report.

    A method that raises is marked failed in the report without aborting
    the other methods or seeds.
    """
    family = as_family(cfg.family)
    all_runs = []
    per_seed_stats = []

    for seed in cfg.seeds:
        data = _build_dataset(cfg, seed)
        runs = {}
        failures = {}

        ols_beta = None
        ols_seconds = 0.0
        if "sls" in cfg.methods:
            try:
                sls_run_record, sls_result = _sls_run(data, family, cfg, seed)
                ols_beta = sls_result.beta_ols
                ols_seconds = sls_result.ols_seconds
                runs["sls"] = sls_run_record
            except _METHOD_FAILURES as exc:
                failures["sls"] = f"{type(exc).__name__}: {exc}"
        if cfg.init_mode == "ols" and ols_beta is None:
            # the baselines still need the shared vector (sls not requested
            # or its scale step failed); compute plain least squares, timed
            t0 = time.perf_counter()
            ols_beta = fit_ols(data, subsample=cfg.subsample, seed=seed).beta
            ols_seconds = time.perf_counter() - t0

        for method in cfg.methods:
            if method == "sls":
                continue
            if cfg.init_mode == "ols":
                init, offset = ols_beta, ols_seconds
            else:
                init, offset = "random", 0.0
            try:
                runs[method] = _baseline_run(
                    data, family, cfg, method, seed, init, offset
                )
            except _METHOD_FAILURES as exc:
                failures[method] = f"{type(exc).__name__}: {exc}"

        stats = threshold_stats(runs) if runs else None
        per_seed_stats.append((seed, stats, failures))
        all_runs.extend(runs.values())

    per_method = {}
    for method in cfg.methods:
        times, iters, finals = [], [], []
        crossed = True
        fail_msgs = []
        for seed, stats, failures in per_seed_stats:
            if method in failures:
                fail_msgs.append(f"seed {seed}: {failures[method]}")
                continue
            if stats is None or method not in stats.per_method:
                continue
            entry = stats.per_method[method]
            times.append(entry["time_s"])
            iters.append(entry["iters"])
            finals.append(entry["final_test_err"])
            crossed = crossed and entry["crossed"]
        if not times:
            per_method[method] = {"failed": "; ".join(fail_msgs) or "no runs"}
            continue
        per_method[method] = {
            "time_to_min_err_s": statistics.median(times),
            "iters_to_min_err": statistics.median_low(iters),
            "final_test_err": statistics.median(finals),
            "crossed": crossed,
            "trace_file": None,
        }
        if fail_msgs:
            per_method[method]["failed_seeds"] = fail_msgs

    achievable = [
        entry["final_test_err"]
        for entry in per_method.values()
        if "final_test_err" in entry
    ]
    report = BenchReport(
        per_method=per_method,
        min_achievable_err=max(achievable) if achievable else float("nan"),
        environment=_environment(),
        config=_describe_config(cfg),
        per_seed=[
            {
                "seed": seed,
                "min_achievable_err": stats.min_achievable_err if stats else None,
                "per_method": stats.per_method if stats else {},
                "failures": failures,
            }
            for seed, stats, failures in per_seed_stats
        ],
        runs=all_runs,
    )
    if cfg.output is not None:
        emit_report(report, cfg.output, cfg.formats)
    return report


_TRACE_COLUMNS = ("iter", "cum_time_s", "objective", "grad_norm", "test_err")


def _trace_filename(run, multi_seed):
    if multi_seed:
        return f"trace_{run.method}_seed{run.seed}.csv"
    return f"trace_{run.method}.csv"


def emit_report(report, output_dir, formats=("csv", "json")):
    """Write report.json / report.csv and per-method trace CSVs.

    Returns the list of written paths. Trace files carry the columns
    iter, cum_time_s, objective, grad_norm, test_err; with several seeds
    each (method, seed) pair gets its own file.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    seeds = {run.seed for run in report.runs}
    multi = len(seeds) > 1
    for run in report.runs:
        path = out / _trace_filename(run, multi)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_TRACE_COLUMNS)
            for row in zip(
                run.iters, run.cum_time_s, run.objective, run.grad_norm, run.test_err
            ):
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        written.append(path)
        entry = report.per_method.get(run.method)
        if entry is not None and entry.get("trace_file") is None:
            entry["trace_file"] = str(path)

    if "json" in formats:
        path = out / "report.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2, allow_nan=True)
        written.append(path)
    if "csv" in formats:
        path = out / "report.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["method", "time_to_min_err_s", "iters_to_min_err", "final_test_err"]
            )
            for method, entry in report.per_method.items():
                if "failed" in entry:
                    writer.writerow([method, "failed", "failed", "failed"])
                else:
                    writer.writerow(
                        [
                            method,
                            repr(entry["time_to_min_err_s"]),
                            entry["iters_to_min_err"],
                            repr(entry["final_test_err"]),
                        ]
                    )
        written.append(path)
    return written
