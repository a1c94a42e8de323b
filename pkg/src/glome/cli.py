"""Batch command-line interface: simulate, fit, select, experiment, bounds.

Every flag has a default and may also be supplied through a JSON file via
``--config``; explicit command-line values win over the file.  Progress
goes to stderr, results to stdout or the requested output files.  Exit
codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import bounds as bounds_mod
from . import io as io_mod
from .em import EmConfig, fit, fit_range
from .exceptions import GlomeError
from .selection import (
    criterion_table_from_fits,
    jump_criterion,
    select_aic_bic,
    select_fixed_kappa,
    slope_criterion,
)
from .simulate import error_decay_study, get_scenario, run_selection_trials, sample_scenario

_COV_ALIASES = {"full": "full", "diag": "diagonal", "iso": "isotropic"}


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _threads_default() -> int:
    env = os.environ.get("GLOME_THREADS")
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, metavar="PATH",
                        help="JSON file providing flag values (CLI overrides it)")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default: 0)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (default: GLOME_THREADS env var or 1)")


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", default=None, metavar="CSV", help="input dataset")
    parser.add_argument("--x-cols", default=None, metavar="NAMES",
                        help="comma-separated covariate columns (default: x1)")
    parser.add_argument("--y-cols", default=None, metavar="NAMES",
                        help="comma-separated response columns (default: y1)")


def _add_em_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--restarts", type=int, default=None,
                        help="EM restarts per K (default: 5)")
    parser.add_argument("--max-iter", type=int, default=None,
                        help="EM iteration cap (default: 1000)")
    parser.add_argument("--cov", choices=sorted(_COV_ALIASES), default=None,
                        help="expert covariance structure (default: full)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glome",
        description="Mixture-of-experts conditional density estimation with "
                    "penalized selection of the number of components.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a scenario dataset as CSV")
    p.add_argument("--scenario", choices=("ws", "ms"), default=None,
                   help="scenario name (default: ws)")
    p.add_argument("--n", type=int, default=None, help="sample size (default: 1000)")
    p.add_argument("--out", default=None, help="output CSV path (default: dataset.csv)")
    _add_common(p)

    p = sub.add_parser("fit", help="fit a fixed-K model to a CSV dataset")
    _add_data_flags(p)
    p.add_argument("--k", type=int, default=None, help="number of components (default: 1)")
    _add_em_flags(p)
    p.add_argument("--out", default=None, help="output JSON path (default: fit.json)")
    _add_common(p)

    p = sub.add_parser("select", help="fit K = 1..K_max and select K")
    _add_data_flags(p)
    p.add_argument("--k-max", type=int, default=None, help="largest K (default: 8)")
    p.add_argument("--method", choices=("jump", "slope", "aic", "bic", "kappa"),
                   default=None, help="selection method (default: jump)")
    p.add_argument("--kappa", type=float, default=None,
                   help="penalty multiplier for --method kappa")
    p.add_argument("--swap-roles", action="store_true", default=None,
                   help="exchange the covariate and response columns")
    _add_em_flags(p)
    p.add_argument("--out", default=None, help="output JSON path (default: selection.json)")
    _add_common(p)

    p = sub.add_parser("experiment", help="repeated simulate/fit/select trials")
    p.add_argument("--scenario", choices=("ws", "ms"), default=None,
                   help="scenario name (default: ws)")
    p.add_argument("--n", type=int, default=None, help="sample size (default: 1000)")
    p.add_argument("--k-max", type=int, default=None, help="largest K (default: 8)")
    p.add_argument("--trials", type=int, default=None, help="trial count (default: 10)")
    p.add_argument("--methods", default=None,
                   help="comma-separated selection methods (default: jump,slope)")
    p.add_argument("--divergence", choices=("none", "selected", "all"), default=None,
                   help="tensorized-KL estimation scope (default: none)")
    p.add_argument("--n-y", type=int, default=None,
                   help="inner Monte Carlo draws per covariate (default: 100)")
    p.add_argument("--decay-grid", default=None,
                   help="comma-separated sample sizes; replaces the single-n study "
                        "with an error-decay sweep")
    _add_em_flags(p)
    p.add_argument("--out-dir", default=None, help="output directory (default: .)")
    _add_common(p)

    p = sub.add_parser("bounds", help="print the theoretical bound values as JSON")
    p.add_argument("--dim", type=int, default=None, help="model dimension (default: 11)")
    p.add_argument("--n", type=int, default=None, help="sample size (default: 2000)")
    p.add_argument("--frak-c", type=float, default=None,
                   help="combined bracketing constant (default: 1.0)")
    p.add_argument("--rho", type=float, default=None,
                   help="Jensen-KL mixing weight (default: 0.5)")
    p.add_argument("--c1", type=float, default=None,
                   help="oracle leading constant (default: 2.0)")
    p.add_argument("--eps-d", type=float, default=None,
                   help="slack parameter (default: 1.0)")
    p.add_argument("--kappa", type=float, default=None,
                   help="penalty multiplier (default: 1.0)")
    p.add_argument("--z", type=float, default=None,
                   help="complexity offset z_m (default: 0.0)")
    _add_common(p)

    return parser


_DEFAULTS = {
    "simulate": {"scenario": "ws", "n": 1000, "out": "dataset.csv", "seed": 0},
    "fit": {"data": None, "x_cols": "x1", "y_cols": "y1", "k": 1, "restarts": 5,
            "max_iter": 1000, "cov": "full", "out": "fit.json", "seed": 0},
    "select": {"data": None, "x_cols": "x1", "y_cols": "y1", "k_max": 8,
               "method": "jump", "kappa": None, "swap_roles": False, "restarts": 5,
               "max_iter": 1000, "cov": "full", "out": "selection.json", "seed": 0},
    "experiment": {"scenario": "ws", "n": 1000, "k_max": 8, "trials": 10,
                   "methods": "jump,slope", "divergence": "none", "n_y": 100,
                   "decay_grid": None, "restarts": 5, "max_iter": 1000, "cov": "full",
                   "out_dir": ".", "seed": 0},
    "bounds": {"dim": 11, "n": 2000, "frak_c": 1.0, "rho": 0.5, "c1": 2.0,
               "eps_d": 1.0, "kappa": 1.0, "z": 0.0, "seed": 0},
}


def _resolve_options(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Merge defaults < config file < explicit command-line flags."""
    opts = dict(_DEFAULTS[args.command])
    opts["threads"] = None
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_opts = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"--config: {exc}")
        unknown = set(file_opts) - set(opts)
        if unknown:
            parser.error(f"--config: unknown keys {sorted(unknown)}")
        opts.update(file_opts)
    for key in opts:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            opts[key] = cli_value
    if opts["threads"] is None:
        opts["threads"] = _threads_default()
    return opts


def _em_config(opts: dict) -> EmConfig:
    return EmConfig(
        max_iter=opts["max_iter"],
        n_restarts=opts["restarts"],
        cov_structure=_COV_ALIASES[opts["cov"]],
        seed=opts["seed"],
    )


def _load_dataset(opts: dict, parser, swap_roles: bool = False):
    if not opts["data"]:
        parser.error("--data is required")
    spec = io_mod.DatasetSpec(
        path=opts["data"],
        x_columns=tuple(opts["x_cols"].split(",")),
        y_columns=tuple(opts["y_cols"].split(",")),
        swap_roles=swap_roles,
    )
    return io_mod.load_csv(spec)


def _cmd_simulate(opts: dict) -> int:
    data = sample_scenario(get_scenario(opts["scenario"]), opts["n"], seed=opts["seed"])
    io_mod.save_dataset_csv(data, opts["out"])
    print(json.dumps({"n": data.n, "D": data.D, "L": data.L, "seed": opts["seed"],
                      "out": str(opts["out"])}))
    return 0


def _cmd_fit(opts: dict, parser) -> int:
    data = _load_dataset(opts, parser)
    config = _em_config(opts)
    result = fit(data, opts["k"], config)
    io_mod.save_report(result, opts["out"], include_forward=True)
    _progress(f"fit K={opts['k']}: loglik={result.loglik:.6f} "
              f"(restart {result.restart_index}, {result.n_iter} iterations)")
    print(json.dumps({"K": opts["k"], "loglik": result.loglik,
                      "converged": result.converged, "out": str(opts["out"])}))
    return 0


def _cmd_select(opts: dict, parser) -> int:
    data = _load_dataset(opts, parser, swap_roles=bool(opts["swap_roles"]))
    config = _em_config(opts)
    ranged = fit_range(data, opts["k_max"], config, threads=opts["threads"])
    for K, msg in sorted(ranged.errors.items()):
        _progress(f"K={K} failed: {msg}")
    table = criterion_table_from_fits(data, ranged.fits, config.cov_structure)

    method = opts["method"]
    if method == "jump":
        sel = jump_criterion(table)
    elif method == "slope":
        sel = slope_criterion(table)
    elif method in ("aic", "bic"):
        sel = select_aic_bic(table, method)
    else:
        if opts["kappa"] is None:
            parser.error("--method kappa requires --kappa")
        sel = select_fixed_kappa(table, opts["kappa"])

    out = Path(opts["out"])
    io_mod.save_report(sel, out)
    criterion_csv = out.parent / "criterion.csv"
    criterion_csv.write_text(table.to_csv(), encoding="utf-8")
    print(json.dumps({"chosen_K": sel.chosen_K, "kappa_hat": sel.kappa_hat,
                      "method": sel.method, "out": str(out),
                      "criterion": str(criterion_csv)}))
    return 0


def _cmd_experiment(opts: dict) -> int:
    scenario = get_scenario(opts["scenario"])
    config = _em_config(opts)
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    if opts["decay_grid"]:
        grid = [int(v) for v in str(opts["decay_grid"]).split(",")]
        decay = error_decay_study(
            scenario, grid, opts["trials"], em=config, seed=opts["seed"],
            K_max=opts["k_max"], n_y=opts["n_y"], threads=opts["threads"],
        )
        io_mod.save_report(decay, out_dir / "decay.json")
        io_mod.write_decay_csv(decay, out_dir / "decay.csv")
        print(json.dumps({"slope": decay.slope, "intercept": decay.intercept,
                          "out_dir": str(out_dir)}))
        return 0

    methods = tuple(str(opts["methods"]).split(","))
    report = run_selection_trials(
        scenario, opts["n"], opts["k_max"], opts["trials"], em=config,
        methods=methods, seed=opts["seed"], divergence=opts["divergence"],
        n_y=opts["n_y"], threads=opts["threads"],
    )
    io_mod.save_report(report, out_dir / "report.json")
    io_mod.write_histogram_csv(report, out_dir / "histogram.csv")
    io_mod.write_boxplot_csv(report, out_dir / "boxplot.csv")
    summary = {
        "scenario": report.scenario, "n": report.n, "n_trials": report.n_trials,
        "modal_K": {m: report.modal_K(m) for m in report.methods},
        "out_dir": str(out_dir),
    }
    print(json.dumps(summary))
    return 0


def _cmd_bounds(opts: dict) -> int:
    cfg = bounds_mod.TheoryConfig(rho=opts["rho"], C1=opts["c1"], eps_d=opts["eps_d"],
                                  frak_C=opts["frak_c"])
    out = {
        "complexity_bound": bounds_mod.complexity_bound(opts["dim"], opts["frak_c"],
                                                        opts["n"]),
        "penalty_lower_bound": bounds_mod.penalty_lower_bound(
            opts["dim"], opts["n"], opts["frak_c"], opts["z"], opts["kappa"]),
        "kappa0": bounds_mod.kappa0(cfg),
    }
    print(json.dumps(out))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = _resolve_options(args, parser)
    try:
        if args.command == "simulate":
            return _cmd_simulate(opts)
        if args.command == "fit":
            return _cmd_fit(opts, parser)
        if args.command == "select":
            return _cmd_select(opts, parser)
        if args.command == "experiment":
            return _cmd_experiment(opts)
        if args.command == "bounds":
            return _cmd_bounds(opts)
        parser.error(f"unknown command {args.command!r}")
    except (GlomeError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
