"""Command line interface.

Subcommands:

    bench run   --config FILE      run a benchmark from a TOML config
    bench synth ...                emit a synthetic dataset as CSV
    fit sls|mle ...                fit one model on a CSV, print JSON
    convert ...                    rescale coefficients between families

Successful commands exit 0 and print JSON to stdout. Failures exit nonzero
after printing a machine-readable {"error": {...}} object to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from .bench import ALL_METHODS, BenchConfig, CsvSpec, run_bench
from .convert import convert_glm
from .errors import ScaledLSError
from .losses import family_from_name
from .optimize import OptimizerConfig, minimize
from .sls import ScaleSolveConfig, fit_sls
from .synth import DesignSpec, RandomSpd, WellSpread, load_csv, sample_dataset, write_csv


def _print_json(payload):
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _csv_options(parser, include_split=True):
    parser.add_argument("--data", required=True, help="path to a CSV file")
    parser.add_argument("--delimiter", default=",")
    parser.add_argument(
        "--no-header", action="store_true", help="the CSV has no header row"
    )
    if include_split:
        parser.add_argument(
            "--test-fraction",
            type=float,
            default=0.0,
            help="held-out fraction (0 disables the split)",
        )


def _load_data(args, response):
    return load_csv(
        args.data,
        response,
        delimiter=args.delimiter,
        has_header=not args.no_header,
        test_fraction=getattr(args, "test_fraction", 0.0),
        seed=getattr(args, "seed", 0),
    )


def _response_arg(raw):
    try:
        return int(raw)
    except ValueError:
        return raw


def _cmd_fit_sls(args):
    data = _load_data(args, _response_arg(args.response))
    family = family_from_name(args.family)
    subsample = args.subsample
    if subsample is not None and subsample != "auto":
        subsample = int(subsample)
    result = fit_sls(data, family, subsample=subsample, seed=args.seed)
    _print_json(
        {
            "family": args.family,
            "c": result.c,
            "beta": result.beta_sls.tolist(),
            "beta_ols": result.beta_ols.tolist(),
            "root_iterations": result.root_trace.iterations,
            "wall_time_seconds": result.wall_time_seconds,
        }
    )


def _cmd_fit_mle(args):
    data = _load_data(args, _response_arg(args.response))
    family = family_from_name(args.family)
    cfg = OptimizerConfig(
        method=args.method,
        seed=args.seed,
        grad_tol=args.grad_tol,
        max_iters=args.max_iters,
    )
    trace = minimize(data, family, cfg)
    _print_json(
        {
            "family": args.family,
            "method": args.method,
            "beta": trace.iterates[-1].tolist(),
            "c": None,
            "grad_norm": trace.grad_norm[-1],
            "iterations": trace.n_iterations,
            "converged": trace.converged,
        }
    )


def _cmd_convert(args):
    beta = np.asarray(json.loads(args.beta), dtype=np.float64)
    response = _response_arg(args.response) if args.response is not None else None
    if response is None:
        # whole file is the design matrix
        import csv as _csv

        with open(args.data, newline="", encoding="utf-8") as fh:
            rows = list(_csv.reader(fh, delimiter=args.delimiter))
        if not args.no_header:
            rows = rows[1:]
        X = np.asarray([[float(v) for v in row] for row in rows], dtype=np.float64)
    else:
        data = _load_data(args, response)
        X = data.train_X
    result = convert_glm(
        X, beta, family_from_name(args.family_from), family_from_name(args.family_to)
    )
    _print_json(
        {
            "from": args.family_from,
            "to": args.family_to,
            "rho": result.rho,
            "kappa": result.kappa,
            "beta": result.beta_target.tolist(),
            "root_iterations": result.trace.iterations,
        }
    )


def _cmd_bench_synth(args):
    covariance = None
    if args.cov_condition is not None:
        covariance = RandomSpd(condition=args.cov_condition, seed=args.cov_seed)
    beta = WellSpread(args.tau) if args.beta is None else json.loads(args.beta)
    spec = DesignSpec(
        n=args.n,
        p=args.p,
        base_dist=args.dist,
        covariance=covariance,
        beta_pop=beta,
        response=args.response,
        seed=args.seed,
    )
    data, beta_pop = sample_dataset(spec)
    write_csv(data, args.out, delimiter=args.delimiter)
    _print_json(
        {
            "out": args.out,
            "n": data.n,
            "p": data.p,
            "beta_pop": np.asarray(beta_pop).tolist(),
            "meta": data.meta,
        }
    )


def _parse_bench_config(path):
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    ds = raw.get("dataset", {})
    kind = ds.get("kind", "synthetic")
    if kind == "synthetic":
        covariance = None
        if "cov_condition" in ds:
            covariance = RandomSpd(
                condition=float(ds["cov_condition"]), seed=int(ds.get("cov_seed", 0))
            )
        beta = ds.get("beta")
        beta_pop = WellSpread(float(ds.get("tau", 1.0))) if beta is None else beta
        dataset = DesignSpec(
            n=int(ds["n"]),
            p=int(ds["p"]),
            base_dist=ds.get("base_dist", "gaussian"),
            covariance=covariance,
            beta_pop=beta_pop,
            response=ds.get("response", "logistic"),
            seed=int(ds.get("seed", 0)),
        )
    elif kind == "csv":
        dataset = CsvSpec(
            path=ds["path"],
            response_column=_response_arg(str(ds["response_column"])),
            delimiter=ds.get("delimiter", ","),
            has_header=bool(ds.get("has_header", True)),
            test_fraction=float(ds.get("test_fraction", 0.1)),
        )
    else:
        raise ValueError(f"dataset.kind must be 'synthetic' or 'csv', got {kind!r}")

    run = raw.get("run", {})
    seeds = run.get("seeds")
    if seeds is None:
        reps = int(run.get("repetitions", 1))
        base = int(run.get("base_seed", 0))
        seeds = [base + i for i in range(reps)]

    opt = raw.get("optimizer", {})
    optimizer = OptimizerConfig(
        method="gd",
        grad_tol=float(opt.get("grad_tol", 1e-8)),
        max_iters=int(opt.get("max_iters", 500)),
        linesearch_alpha=float(opt.get("linesearch_alpha", 0.3)),
        linesearch_beta=float(opt.get("linesearch_beta", 0.8)),
        lbfgs_memory=int(opt.get("lbfgs_memory", 10)),
        ns_subsample=opt.get("ns_subsample"),
    )
    sc = raw.get("scale", {})
    scale = ScaleSolveConfig(
        init=sc.get("init", "variance"),
        tol=float(sc.get("tol", 1e-10)),
        max_iters=int(sc.get("max_iters", 100)),
        bracket_max=float(sc.get("bracket_max", 1e6)),
    )

    subsample = run.get("subsample")
    if isinstance(subsample, int):
        pass
    elif subsample not in (None, "auto"):
        raise ValueError("run.subsample must be an integer or 'auto'")

    return BenchConfig(
        dataset=dataset,
        family=family_from_name(run.get("family", "logistic")),
        methods=tuple(run.get("methods", list(ALL_METHODS))),
        init_mode=run.get("init", "ols"),
        seeds=tuple(int(s) for s in seeds),
        output=run.get("output"),
        formats=tuple(run.get("formats", ["csv", "json"])),
        subsample=subsample,
        optimizer=optimizer,
        scale=scale,
    )


def _cmd_bench_run(args):
    cfg = _parse_bench_config(args.config)
    report = run_bench(cfg)
    _print_json(report.as_dict())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scaledls",
        description="Scaled least squares and batch-optimizer benchmarking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="benchmark harness")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)

    bench_run = bench_sub.add_parser("run", help="run a benchmark from a config file")
    bench_run.add_argument("--config", required=True, help="TOML config path")
    bench_run.set_defaults(func=_cmd_bench_run)

    bench_synth = bench_sub.add_parser("synth", help="emit a synthetic CSV")
    bench_synth.add_argument("--out", required=True)
    bench_synth.add_argument("--n", type=int, required=True)
    bench_synth.add_argument("--p", type=int, required=True)
    bench_synth.add_argument(
        "--dist", default="gaussian", choices=["gaussian", "rademacher", "expminusone"]
    )
    bench_synth.add_argument("--cov-condition", type=float, default=None)
    bench_synth.add_argument("--cov-seed", type=int, default=0)
    bench_synth.add_argument("--tau", type=float, default=1.0)
    bench_synth.add_argument(
        "--beta", default=None, help="explicit coefficients as a JSON array"
    )
    bench_synth.add_argument(
        "--response", default="logistic", choices=["logistic", "poisson", "none"]
    )
    bench_synth.add_argument("--seed", type=int, default=0)
    bench_synth.add_argument("--delimiter", default=",")
    bench_synth.set_defaults(func=_cmd_bench_synth)

    fit = sub.add_parser("fit", help="fit a single model on a CSV")
    fit_sub = fit.add_subparsers(dest="fit_command", required=True)

    fit_sls_p = fit_sub.add_parser("sls", help="scaled least squares")
    fit_sls_p.add_argument(
        "--family", required=True,
        help="linear | logistic | poisson | log-loss | square-loss | boosting-loss",
    )
    _csv_options(fit_sls_p)
    fit_sls_p.add_argument("--response", required=True, help="column name or index")
    fit_sls_p.add_argument(
        "--subsample", default=None, help="row count or 'auto' for the Gram step"
    )
    fit_sls_p.add_argument("--seed", type=int, default=0)
    fit_sls_p.set_defaults(func=_cmd_fit_sls)

    fit_mle = fit_sub.add_parser("mle", help="empirical risk minimization")
    fit_mle.add_argument("--family", required=True)
    _csv_options(fit_mle)
    fit_mle.add_argument("--response", required=True)
    fit_mle.add_argument("--method", default="nr", choices=list(ALL_METHODS[1:]))
    fit_mle.add_argument("--grad-tol", type=float, default=1e-8)
    fit_mle.add_argument("--max-iters", type=int, default=500)
    fit_mle.add_argument("--seed", type=int, default=0)
    fit_mle.set_defaults(func=_cmd_fit_mle)

    conv = sub.add_parser("convert", help="rescale coefficients between families")
    conv.add_argument("--from", dest="family_from", required=True)
    conv.add_argument("--to", dest="family_to", required=True)
    conv.add_argument("--beta", required=True, help="source coefficients, JSON array")
    _csv_options(conv, include_split=False)
    conv.add_argument(
        "--response",
        default=None,
        help="response column to drop; omit when the CSV holds predictors only",
    )
    conv.set_defaults(func=_cmd_convert)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ScaledLSError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        json.dump(
            {"error": {"type": type(exc).__name__, "message": str(exc)}},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
