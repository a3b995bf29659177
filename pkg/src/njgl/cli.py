"""Command-line interface: simulate, fit, screen, metrics, cv.

Exit codes: 0 on success, 1 when a solver exhausts its budget with
residuals out of tolerance (results are still written, flagged in the
diagnostics), 2 on usage or validation errors.  The environment variable
NJGL_THREADS caps internal parallelism for decomposed solves.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .admm import AdmmOptions
from .baselines import solve_fgl, solve_ggl, solve_gl_model
from .cnjgl import solve_cnjgl
from .datagen import gen_community, gen_erdos, gen_scalefree
from .io import read_json, read_matrix, write_json, write_matrix, write_table
from .metrics import MetricConfig, cross_validate, evaluate
from .model import EmpiricalModel, PenaltyConfig
from .pnjgl import solve_pnjgl
from .screening import (
    METHODS,
    build_screen_graph,
    check_necessary_cnjgl,
    check_necessary_pnjgl,
    check_sufficient,
    connected_components,
    solve_decomposed,
)

__all__ = ["main", "build_parser"]

_GENERATORS = {"erdos": gen_erdos, "scalefree": gen_scalefree, "community": gen_community}


def _parse_q(text: str) -> float:
    if text == "inf":
        return math.inf
    if text in ("1", "2"):
        return float(text)
    raise argparse.ArgumentTypeError("q must be 1, 2 or inf")


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver options")
    defaults = AdmmOptions()
    group.add_argument("--eps", type=float, default=defaults.eps)
    group.add_argument("--t-max", type=int, default=defaults.t_max)
    group.add_argument("--inner-cap", type=int, default=defaults.inner_cap)
    group.add_argument("--rho0", type=float, default=defaults.rho0)
    group.add_argument("--mu", type=float, default=defaults.mu)
    group.add_argument("--rho-max", type=float, default=defaults.rho_max)


def _options_from(args) -> AdmmOptions:
    return AdmmOptions(
        rho0=args.rho0, mu=args.mu, t_max=args.t_max,
        eps=args.eps, inner_cap=args.inner_cap, rho_max=args.rho_max,
    )


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cov", nargs="+", required=True, metavar="FILE",
                        help="per-class covariance CSV files")
    parser.add_argument("--n", nargs="+", required=True, type=float, metavar="COUNT",
                        help="per-class sample counts")


def _model_from(args) -> EmpiricalModel:
    if len(args.cov) != len(args.n):
        raise ValueError("--cov and --n must list one entry per class")
    for path in args.cov:
        if not Path(path).is_file():
            raise ValueError(f"covariance file not found: {path}")
    return EmpiricalModel([read_matrix(p) for p in args.cov], args.n)


def _check_method_arity(method: str, num_classes: int) -> None:
    if method in ("pnjgl", "fgl") and num_classes != 2:
        raise ValueError(f"method {method!r} requires exactly 2 classes, got {num_classes}")
    if method == "ggl" and num_classes < 2:
        raise ValueError("method 'ggl' requires at least 2 classes")


def cmd_simulate(args) -> int:
    if args.p is not None and args.p < 1:
        raise ValueError("--p must be positive")
    generator = _GENERATORS[args.network]
    kwargs = {"n_perturbed": args.perturbed, "n_cohub": args.cohubs}
    if args.network == "community":
        dataset = generator(args.p or 100, args.n, args.seed, **kwargs)
    else:
        if args.p is None:
            raise ValueError("--p is required for this network type")
        dataset = generator(args.p, args.n, args.seed, **kwargs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    truth = dataset.truth
    write_matrix(out / "theta_true_1.csv", truth.theta1)
    write_matrix(out / "theta_true_2.csv", truth.theta2)
    write_matrix(out / "X_1.csv", dataset.x1)
    write_matrix(out / "X_2.csv", dataset.x2)
    write_matrix(out / "S_1.csv", dataset.s1)
    write_matrix(out / "S_2.csv", dataset.s2)
    write_json(out / "manifest.json", {
        "command": "simulate",
        "generator": f"njgl.datagen.gen_{args.network}",
        "version": __version__,
        "network": args.network,
        "p": dataset.truth.theta1.shape[0],
        "n": args.n,
        "seed": args.seed,
        "n_perturbed": args.perturbed,
        "n_cohub": args.cohubs,
        "perturbed_idx": list(truth.perturbed_idx),
        "cohub_idx": list(truth.cohub_idx),
        "files": {
            "truth": ["theta_true_1.csv", "theta_true_2.csv"],
            "observations": ["X_1.csv", "X_2.csv"],
            "covariances": ["S_1.csv", "S_2.csv"],
        },
    })
    print(f"wrote dataset to {out}")
    return 0


def _decomposition_files(method: str, num_classes: int) -> list[str]:
    if method in ("pnjgl", "fgl"):
        return ["V.csv"]
    if method == "cnjgl":
        return [f"V_{k + 1}.csv" for k in range(num_classes)]
    return []


def cmd_fit(args) -> int:
    model = _model_from(args)
    _check_method_arity(args.method, model.num_classes)
    config = PenaltyConfig(args.lambda1, args.lambda2, args.q)
    options = _options_from(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    screened = args.screen == "on"
    if screened:
        estimate, decomp = solve_decomposed(args.method, model, config, options)
        converged = decomp.converged
        failure = decomp.convergence_failure
        diag_payload = decomp.to_dict()
        # Roll up the dominant block's solver diagnostics for reporting.
        worst = max(
            decomp.block_diagnostics, key=lambda d: max(d.residuals.values())
        )
        diag_payload.update({
            "residuals": dict(worst.residuals),
            "objective": sum(d.objective for d in decomp.block_diagnostics),
            "total_sweeps": sum(d.total_sweeps for d in decomp.block_diagnostics),
        })
    elif args.method == "gl":
        estimate, diags = solve_gl_model(model, args.lambda1, options)
        diag_payload = {
            "per_class": [d.to_dict() for d in diags],
            "converged": all(d.converged for d in diags),
            "convergence_failure": any(d.convergence_failure for d in diags),
            "objective": sum(d.objective for d in diags),
        }
        converged = diag_payload["converged"]
        failure = diag_payload["convergence_failure"]
    else:
        if args.method == "pnjgl":
            estimate, diag = solve_pnjgl(model, config, options)
        elif args.method == "cnjgl":
            estimate, diag = solve_cnjgl(model, config, options)
        elif args.method == "fgl":
            estimate, diag = solve_fgl(model, args.lambda1, args.lambda2, options)
        else:
            estimate, diag = solve_ggl(model, args.lambda1, args.lambda2, options)
        diag_payload = diag.to_dict()
        converged = diag.converged
        failure = diag.convergence_failure

    for k, theta in enumerate(estimate.thetas):
        write_matrix(out / f"theta_{k + 1}.csv", theta)
    v_files = _decomposition_files(args.method, model.num_classes)
    if estimate.decomposition is not None:
        for name, v in zip(v_files, estimate.decomposition):
            write_matrix(out / name, v)
    diag_payload.update({
        "command": "fit",
        "version": __version__,
        "method": args.method,
        "q": "inf" if math.isinf(args.q) else int(args.q),
        "lambda1": args.lambda1,
        "lambda2": args.lambda2,
        "sample_sizes": list(model.sample_sizes),
        "screen": screened,
        "covariance_files": [str(p) for p in args.cov],
        "raw_files": [str(p) for p in args.raw],
        "estimate_files": [f"theta_{k + 1}.csv" for k in range(model.num_classes)],
        "decomposition_files": v_files if estimate.decomposition is not None else [],
    })
    write_json(out / "diagnostics.json", diag_payload)
    if failure:
        print("warning: convergence failure; see diagnostics.json", file=sys.stderr)
        return 1
    print(f"wrote estimates to {out} (converged={converged})")
    return 0


def cmd_screen(args) -> int:
    model = _model_from(args)
    _check_method_arity(args.method, model.num_classes)
    config = PenaltyConfig(args.lambda1, args.lambda2, args.q)
    partition = connected_components(build_screen_graph(model, config.lambda1))
    if args.method in ("pnjgl", "fgl"):
        report = check_necessary_pnjgl(model, config, partition)
        payload = report.to_dict()
    elif args.method == "cnjgl":
        report = check_necessary_cnjgl(model, config, partition)
        payload = report.to_dict()
    else:
        payload = {
            "blocks": [list(b) for b in partition.blocks],
            "block_sizes": partition.block_sizes(),
            "sufficient_holds": check_sufficient(model, config.lambda1, partition),
        }
    p = model.p
    payload.update({
        "command": "screen",
        "method": args.method,
        "lambda1": args.lambda1,
        "lambda2": args.lambda2,
        "q": "inf" if math.isinf(args.q) else int(args.q),
        "num_blocks": len(payload["blocks"]),
        "predicted_subproblem_sizes": payload["block_sizes"],
        "cost_model": {
            "whole_per_sweep_flops": float(p**3),
            "decomposed_per_sweep_flops": float(sum(b**3 for b in payload["block_sizes"])),
        },
    })
    text = _json_dumps(payload)
    print(text)
    if args.out:
        from .io import atomic_write_text

        atomic_write_text(args.out, text + "\n")
    return 0


def _json_dumps(payload) -> str:
    import json

    return json.dumps(payload, indent=2, sort_keys=True)


def cmd_metrics(args) -> int:
    truth_dir = Path(args.truth)
    fit_dir = Path(args.fit)
    manifest = read_json(truth_dir / "manifest.json")
    fit_diag = read_json(fit_dir / "diagnostics.json")
    method = fit_diag["method"]
    truths = [read_matrix(truth_dir / "theta_true_1.csv"),
              read_matrix(truth_dir / "theta_true_2.csv")]
    estimates = [read_matrix(fit_dir / f) for f in fit_diag["estimate_files"]]
    decomposition = [read_matrix(fit_dir / f) for f in fit_diag["decomposition_files"]]
    config = MetricConfig(edge_threshold=args.edge_threshold,
                          score_multiplier=args.score_multiplier)

    from .model import PrecisionSet

    estimate = PrecisionSet(
        thetas=tuple(estimates),
        decomposition=tuple(decomposition) if decomposition else None,
    )
    report = evaluate(
        truths, estimate, method,
        perturbed_idx=manifest.get("perturbed_idx", ()),
        cohub_idx=manifest.get("cohub_idx", ()),
        config=config,
    )
    out = Path(args.out) if args.out else fit_dir
    out.mkdir(parents=True, exist_ok=True)
    row = report.to_row()
    payload = dict(row)
    payload.update({
        "command": "metrics",
        "version": __version__,
        "edge_threshold": config.edge_threshold,
        "score_multiplier": config.score_multiplier,
        "truth_dir": str(truth_dir),
        "fit_dir": str(fit_dir),
        "column_scores": {
            label: {
                "scores": [list(map(float, sc)) for sc in res.scores],
                "thresholds": [float(t) for t in res.thresholds],
            }
            for label, res in report.column_scores.items()
        },
    })
    write_json(out / "metrics.json", payload)
    write_table(out / "metrics.csv", list(row.keys()), [list(row.values())])
    if not args.no_figures:
        from .plots import node_score_figure

        node_score_figure(
            report.column_scores,
            out / "node_scores.png",
            perturbed_idx=manifest.get("perturbed_idx", ()),
            cohub_idx=manifest.get("cohub_idx", ()),
        )
    print(_json_dumps(row))
    return 0


def cmd_cv(args) -> int:
    for path in args.raw:
        if not Path(path).is_file():
            raise ValueError(f"observation file not found: {path}")
    data = [read_matrix(p) for p in args.raw]
    _check_method_arity(args.method, len(data))
    grid_values = np.loadtxt(args.grid, delimiter=",", ndmin=2)
    if grid_values.shape[1] != 2:
        raise ValueError("grid file must have two columns: lambda1,lambda2")
    grid = [(float(a), float(b)) for a, b in grid_values]
    rows = cross_validate(
        data, args.method, grid, folds=args.folds, seed=args.seed,
        q=args.q, options=_options_from(args),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table(
        out / "cv_table.csv",
        ["lambda1", "lambda2", "mean_loglik", "std_loglik", "mean_positive_edges"],
        [[r.lambda1, r.lambda2, r.mean_loglik, r.std_loglik, r.mean_positive_edges] for r in rows],
    )
    if not args.no_figures:
        from .plots import cv_curve_figure

        cv_curve_figure(rows, out / "cv_curve.png")
    best = max(rows, key=lambda r: r.mean_loglik)
    print(f"wrote {len(rows)} grid points to {out / 'cv_table.csv'}; "
          f"best mean log-likelihood {best.mean_loglik:.6g} at "
          f"lambda1={best.lambda1:g}, lambda2={best.lambda2:g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="njgl",
        description="Joint estimation of sparse Gaussian graphical models "
                    "with node-based penalties.",
        epilog="Set NJGL_THREADS to cap internal parallelism.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic two-class dataset")
    sim.add_argument("--network", choices=sorted(_GENERATORS), required=True)
    sim.add_argument("--p", type=int, default=None, help="feature count")
    sim.add_argument("--n", type=int, required=True, help="observations per class")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--perturbed", type=int, default=2, help="planted perturbed nodes")
    sim.add_argument("--cohubs", type=int, default=2, help="planted co-hub nodes")
    sim.add_argument("--out", required=True, metavar="DIR")
    sim.set_defaults(handler=cmd_simulate)

    fit = sub.add_parser("fit", help="fit precision matrices from covariances")
    fit.add_argument("--method", choices=METHODS, required=True)
    fit.add_argument("--q", type=_parse_q, default=2.0, help="column norm: 1, 2 or inf")
    fit.add_argument("--lambda1", type=float, required=True)
    fit.add_argument("--lambda2", type=float, default=0.0)
    _add_model_flags(fit)
    fit.add_argument("--raw", nargs="*", default=[], metavar="FILE",
                     help="optional per-class observation files (recorded only)")
    fit.add_argument("--screen", choices=("on", "off"), default="off",
                     help="decompose via screening before solving")
    fit.add_argument("--out", required=True, metavar="DIR")
    _add_solver_flags(fit)
    fit.set_defaults(handler=cmd_fit)

    scr = sub.add_parser("screen", help="report block-diagonal screening conditions")
    scr.add_argument("--method", choices=METHODS, required=True)
    scr.add_argument("--q", type=_parse_q, default=2.0)
    scr.add_argument("--lambda1", type=float, required=True)
    scr.add_argument("--lambda2", type=float, default=0.0)
    _add_model_flags(scr)
    scr.add_argument("--out", default=None, metavar="FILE", help="also save the JSON report")
    scr.set_defaults(handler=cmd_screen)

    met = sub.add_parser("metrics", help="score a fit against a simulated truth")
    met.add_argument("--truth", required=True, metavar="DIR")
    met.add_argument("--fit", required=True, metavar="DIR")
    met.add_argument("--out", default=None, metavar="DIR",
                     help="output directory (default: the fit directory)")
    met.add_argument("--edge-threshold", type=float, default=1e-6)
    met.add_argument("--score-multiplier", type=float, default=5.5)
    met.add_argument("--no-figures", action="store_true")
    met.set_defaults(handler=cmd_metrics)

    cv = sub.add_parser("cv", help="cross-validated log-likelihood over a grid")
    cv.add_argument("--raw", nargs="+", required=True, metavar="FILE",
                    help="per-class observation CSV files")
    cv.add_argument("--method", choices=METHODS, required=True)
    cv.add_argument("--q", type=_parse_q, default=2.0)
    cv.add_argument("--grid", required=True, metavar="FILE",
                    help="headerless CSV of lambda1,lambda2 rows")
    cv.add_argument("--folds", type=int, default=5)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--out", required=True, metavar="DIR")
    cv.add_argument("--no-figures", action="store_true")
    _add_solver_flags(cv)
    cv.set_defaults(handler=cmd_cv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
