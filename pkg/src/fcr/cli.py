"""Command-line interface: ``fcr <command> [options]``.

Exit codes: 0 success, 2 usage error, 3 data format error, 4 numerical
failure, 5 I/O error. Options may also come from a TOML file given with
``--config``; flags override the file, which overrides built-in defaults.
Top-level keys of the file apply to every command and a ``[command]`` table
to that command only. Set ``FCR_LOG`` to ``error``, ``info`` or ``debug`` for
diagnostics on standard error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .baselines import fpcr_fit, fpls_fit
from .continuum import fit as fcr_fit
from .continuum import predict
from .errors import DataFormatError, DimensionError, EmptyDatasetError, NumericalError
from .fgrid import DEFAULT_RANK_TOL
from .io import (
    atomic_write_text,
    gm_to_dict,
    load_gm,
    load_model,
    model_to_json,
    read_curves_csv,
    read_dataset,
    vector_to_csv,
)
from .oracle import agreement_suite
from .simulate import estimate_generative_model, run_estimation_study, run_prediction_study
from .tuning import DEFAULT_ALPHAS, TuningGrid, tune

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger("fcr")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4, 5


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text: str):
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text):
    if isinstance(text, (list, tuple)):
        return tuple(str(v) for v in text)
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _pmax(text):
    if str(text) == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"pmax must be an integer or 'auto', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with option defaults")
    common.add_argument("--out", help="output path (standard output if omitted)")

    parser = argparse.ArgumentParser(prog="fcr", description="Functional continuum regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def data_args(p, y=True):
        p.add_argument("--x", help="curve CSV (first row is the grid)")
        if y:
            p.add_argument("--y", help="response CSV (one column)")

    p = sub.add_parser("fit", parents=[common], help="fit one model and write its JSON")
    data_args(p)
    p.add_argument("--method", choices=("fcr", "fpcr", "fpls"), default="fcr")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)

    p = sub.add_parser("predict", parents=[common], help="predict responses from a saved model")
    p.add_argument("--model", help="model JSON")
    data_args(p, y=False)

    p = sub.add_parser("tune", parents=[common], help="select (p, alpha) by GCV")
    data_args(p)
    p.add_argument("--gcv-table", help="path for the GCV table CSV")
    p.add_argument("--alpha-grid", type=_float_list, default=DEFAULT_ALPHAS)
    p.add_argument("--pmax", type=_pmax, default="auto")
    p.add_argument("--var-threshold", type=float, default=0.99)
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimation study")
    p.add_argument("--gm", help="generative model JSON (bundled surrogate if omitted)")
    p.add_argument("--scenario", choices=("i", "ii"), default=None)
    p.add_argument("--snr", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--n", type=int, default=35)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", type=_str_list, default=("fcr", "fpcr:2", "fpls:2"))
    p.add_argument("--pmax", type=_pmax, default=2)
    p.add_argument("--alpha-grid", type=_float_list, default=DEFAULT_ALPHAS)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("remspe-study", parents=[common], help="repeated-split prediction study")
    data_args(p)
    p.add_argument("--methods", type=_str_list, default=("fcr", "fpcr", "fpls", "mean"))
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--splits", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pmax", type=_pmax, default=5)
    p.add_argument("--alpha-grid", type=_float_list, default=DEFAULT_ALPHAS)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("oracle-check", parents=[common], help="compare fits with a brute-force oracle")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--alphas", type=_float_list, default=(0.0, 0.25, 0.5, 0.75, 0.9))
    p.add_argument("--pmax", type=int, default=2)
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("estimate-gm", parents=[common], help="estimate a generative model from curves")
    data_args(p, y=False)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--scenario", choices=("i", "ii"), default="i")
    p.add_argument("--snr", type=float)
    p.add_argument("--sigma", type=float)
    return parser


_LIST_OPTIONS = {"alpha_grid": _float_list, "alphas": _float_list, "methods": _str_list, "pmax": _pmax}


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config {path}: {exc}") from exc
    merged = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    merged.update(raw.get(command, {}))
    out = {}
    for key, val in merged.items():
        key = key.replace("-", "_")
        conv = _LIST_OPTIONS.get(key)
        if conv is not None and isinstance(val, (list, str)):
            val = conv(",".join(map(str, val)) if isinstance(val, list) else val)
        out[key] = val
    return out


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config, args.command)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) {', '.join(missing)}")


def _check(cond: bool, message: str):
    if not cond:
        raise UsageError(message)


def validate(args: argparse.Namespace) -> None:
    """Check required options and numeric ranges before any computation."""
    cmd = args.command
    if cmd in ("fit", "tune", "remspe-study"):
        _require(args, "x", "y")
    if cmd == "predict":
        _require(args, "model", "x")
    if cmd == "estimate-gm":
        _require(args, "x")
    if cmd == "tune":
        _require(args, "out")
    if hasattr(args, "alpha"):
        _check(0 <= args.alpha < 1, "--alpha must lie in [0, 1)")
    if hasattr(args, "p"):
        _check(args.p >= 1, "--p must be at least 1")
    for name in ("alpha_grid", "alphas"):
        vals = getattr(args, name, None)
        if vals is not None:
            _check(len(vals) > 0 and all(0 <= a < 1 for a in vals), f"--{name.replace('_', '-')} values must lie in [0, 1)")
    if getattr(args, "pmax", None) is not None and args.pmax != "auto":
        _check(isinstance(args.pmax, int) and args.pmax >= 1, "--pmax must be a positive integer or 'auto'")
    if hasattr(args, "var_threshold"):
        _check(0 < args.var_threshold <= 1, "--var-threshold must lie in (0, 1]")
    if hasattr(args, "rank_tol"):
        _check(0 < args.rank_tol < 1, "--rank-tol must lie in (0, 1)")
    if hasattr(args, "jobs"):
        _check(args.jobs >= 1, "--jobs must be at least 1")
    for name in ("snr", "sigma"):
        val = getattr(args, name, None)
        if val is not None:
            _check(val > 0 if name == "snr" else val >= 0, f"--{name} must be {'positive' if name == 'snr' else 'nonnegative'}")
    if cmd == "simulate":
        _check(args.n >= 5, "--n must be at least 5")
        _check(args.replicates >= 1, "--replicates must be at least 1")
    if cmd == "remspe-study":
        _check(0 < args.test_fraction < 0.5, "--test-fraction must lie in (0, 0.5)")
        _check(args.splits >= 1, "--splits must be at least 1")
    if cmd == "oracle-check":
        _check(args.instances >= 1, "--instances must be at least 1")
        _check(args.restarts >= 50, "--restarts must be at least 50")
        _check(args.pmax >= 1, "--pmax must be at least 1")
    if cmd == "estimate-gm":
        _check(args.k >= 1, "--k must be at least 1")


# ---------------------------------------------------------------------------
# commands


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)
        logger.info("wrote %s", path)


def _tuning(args) -> TuningGrid:
    return TuningGrid(alphas=args.alpha_grid, pmax=args.pmax)


def cmd_fit(args) -> int:
    ds = read_dataset(args.x, args.y)
    if args.method == "fcr":
        model = fcr_fit(ds, args.alpha, args.p, rank_tol=args.rank_tol)
        if model.truncated:
            logger.warning("sequence ended after %d of %d components", model.p, args.p)
    else:
        fitter = fpcr_fit if args.method == "fpcr" else fpls_fit
        model = fitter(ds, args.p, rank_tol=args.rank_tol)
    _emit(model_to_json(model), args.out)
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    grid, curves = read_curves_csv(args.x)
    if grid != model.grid:
        raise DataFormatError("curve grid differs from the model grid")
    _emit(vector_to_csv(predict(model, curves)), args.out)
    return 0


def cmd_tune(args) -> int:
    ds = read_dataset(args.x, args.y)
    grid = TuningGrid(alphas=args.alpha_grid, pmax=args.pmax, var_threshold=args.var_threshold)
    report = tune(ds, grid, rank_tol=args.rank_tol, jobs=args.jobs)
    logger.info("selected p=%d alpha=%r", report.best_p, report.best_alpha)
    if args.gcv_table:
        atomic_write_text(args.gcv_table, report.table_csv())
    _emit(model_to_json(report.model), args.out)
    return 0


def cmd_simulate(args) -> int:
    gm = load_gm(args.gm)
    if args.scenario is not None:
        gm = gm.with_scenario(args.scenario)
    report = run_estimation_study(
        gm,
        methods=args.methods,
        n=args.n,
        replicates=args.replicates,
        snr=args.snr,
        seed=args.seed,
        tuning=_tuning(args),
        sigma=args.sigma,
        jobs=args.jobs,
    )
    _emit(report.to_csv(), args.out)
    return 0


def cmd_remspe_study(args) -> int:
    ds = read_dataset(args.x, args.y)
    report = run_prediction_study(
        ds,
        methods=args.methods,
        test_fraction=args.test_fraction,
        splits=args.splits,
        seed=args.seed,
        tuning=_tuning(args),
        jobs=args.jobs,
    )
    _emit(report.to_csv(), args.out)
    return 0


def cmd_oracle_check(args) -> int:
    rows = agreement_suite(args.instances, args.alphas, args.pmax, args.restarts, args.seed)
    lines = ["instance,alpha,p,fit_objective,oracle_objective,gap,result"]
    for r in rows:
        lines.append(
            f"{r.instance},{r.alpha!r},{r.p},{r.fit_objective!r},{r.oracle_objective!r},"
            f"{r.gap!r},{'pass' if r.passed else 'FAIL'}"
        )
    failed = sum(not r.passed for r in rows)
    _emit("\n".join(lines) + "\n", args.out)
    print(f"{len(rows) - failed}/{len(rows)} checks passed", file=sys.stderr)
    return 0 if failed == 0 else EXIT_NUMERICAL


def cmd_estimate_gm(args) -> int:
    import json

    ds = read_dataset(args.x)
    gm = estimate_generative_model(ds, k=args.k, scenario=args.scenario)
    if args.sigma is not None or args.snr is not None:
        from dataclasses import replace

        gm = replace(gm, sigma=args.sigma, snr=args.snr)
    _emit(json.dumps(gm_to_dict(gm), indent=1) + "\n", args.out)
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "tune": cmd_tune,
    "simulate": cmd_simulate,
    "remspe-study": cmd_remspe_study,
    "oracle-check": cmd_oracle_check,
    "estimate-gm": cmd_estimate_gm,
}


def _setup_logging() -> None:
    level = os.environ.get("FCR_LOG", "").strip().upper()
    if not level:
        return
    if level not in ("ERROR", "INFO", "DEBUG", "WARNING"):
        level = "ERROR"
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("fcr")
    root.handlers[:] = [handler]
    root.setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        validate(args)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"fcr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, DimensionError, EmptyDatasetError) as exc:
        print(f"fcr: data format error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"fcr: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"fcr: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"fcr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
