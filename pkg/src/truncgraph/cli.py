"""Command line front end.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import incoherence_alpha, theory_constants
from .errors import NumericalError, ValidationError
from .experiment import ExperimentConfig, run_experiment
from .glasso import SolverConfig, ebic_select, edge_set, graphical_lasso, lambda_path
from .io import (read_matrix_csv, read_scheme_csv, write_edges_csv, write_json, write_matrix_csv,
                 write_scheme_csv)
from .pairlik import EstimatorConfig, ZeroInflatedMatrix, estimate_covariance, psd_repair
from .simgen import GraphSpec, make_ground_truth, make_scheme, sample_latent, truncate

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _add_graph_args(p: argparse.ArgumentParser, defaults: bool = True):
    d = GraphSpec() if defaults else None
    p.add_argument("--structure", choices=["chain", "random", "hub"], default=d and d.structure)
    p.add_argument("--p", type=int, default=d and d.p)
    p.add_argument("--edge-prob", type=float, default=d and d.edge_prob)
    p.add_argument("--groups", type=int, default=d and d.groups)
    p.add_argument("--strength", type=float, default=d and d.strength)
    p.add_argument("--graph-seed", type=int, default=d and d.seed)


def _add_scheme_args(p: argparse.ArgumentParser, defaults: bool = True):
    p.add_argument("--scheme-kind", choices=["identical", "decreasing", "custom"],
                   default="identical" if defaults else None)
    p.add_argument("--scheme-params", type=json.loads, default=None,
                   help='JSON object, e.g. \'{"a": -0.5, "b": 2}\'')


def _add_estimator_args(p: argparse.ArgumentParser, defaults: bool = True):
    d = EstimatorConfig() if defaults else None
    p.add_argument("--delta", type=float, default=d and d.delta)
    p.add_argument("--grid", type=int, default=d and d.grid)
    p.add_argument("--tol-sigma", type=float, default=d and d.tol_sigma)
    p.add_argument("--eps-psd", type=float, default=d and d.eps_psd)


def _add_solver_args(p: argparse.ArgumentParser, defaults: bool = True):
    d = SolverConfig() if defaults else None
    p.add_argument("--tol", type=float, default=d and d.tol)
    p.add_argument("--max-iter", type=int, default=d and d.max_iter)
    p.add_argument("--path-length", type=int, default=d and d.path_length)
    p.add_argument("--path-ratio", type=float, default=d and d.path_ratio)


def _graph_spec(a) -> GraphSpec:
    return GraphSpec(a.structure, a.p, a.edge_prob, a.groups, a.strength, a.graph_seed)


def _estimator(a) -> EstimatorConfig:
    return EstimatorConfig(a.delta, a.grid, a.tol_sigma, a.eps_psd)


def _solver(a) -> SolverConfig:
    return SolverConfig(tol=a.tol, max_iter=a.max_iter, path_length=a.path_length,
                        path_ratio=a.path_ratio)


def cmd_simulate(a):
    spec = _graph_spec(a)
    truth = make_ground_truth(spec)
    scheme = make_scheme(a.scheme_kind, spec.p, a.scheme_params)
    data = truncate(sample_latent(truth, a.n, a.seed), scheme)
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = [f"X{j + 1}" for j in range(spec.p)]
    write_matrix_csv(out / "data.csv", data.values, header)
    write_scheme_csv(out / "scheme.csv", scheme)
    write_matrix_csv(out / "sigma_star.csv", truth.sigma_star)
    write_matrix_csv(out / "theta_star.csv", truth.theta_star)
    write_edges_csv(out / "edges.csv", truth.edges.edges)
    print(f"wrote {out}/data.csv ({a.n} x {spec.p}), zero rate {np.mean(data.values == 0):.3f}")


def cmd_estimate_cov(a):
    scheme = read_scheme_csv(a.scheme)
    values = read_matrix_csv(a.data)
    if values.shape[1] != scheme.p:
        raise ValidationError(f"data has {values.shape[1]} columns but the scheme has {scheme.p} variables")
    try:
        data = ZeroInflatedMatrix(values, scheme)
    except ValidationError as exc:
        raise ValidationError(f"{a.data}: {exc} (rows and columns counted from 0)") from None
    cfg = _estimator(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = psd_repair(estimate_covariance(data, cfg), cfg.eps_psd)
    write_matrix_csv(a.out, est.matrix)
    flags_path = Path(a.flags) if a.flags else Path(a.out).with_suffix(".flags.csv")
    with open(flags_path, "w") as fh:
        fh.write("j,k,flag\n")
        for (j, k), f in sorted(est.flags.items()):
            fh.write(f"{j + 1},{k + 1},{f}\n")
    print(f"wrote {a.out} ({scheme.p} x {scheme.p}); {len(est.flags)} flagged pair(s)")


def cmd_glasso(a):
    S = read_matrix_csv(a.cov)
    if S.shape[0] != S.shape[1]:
        raise ValidationError(f"{a.cov}: covariance must be square, got {S.shape}")
    if not np.allclose(S, S.T, rtol=0, atol=1e-10):
        raise ValidationError(f"{a.cov}: covariance matrix is not symmetric")
    solver = _solver(a)
    if a.lam is not None:
        fit = graphical_lasso(S, a.lam, solver.tol, solver.max_iter)
        lam, how = a.lam, "fixed"
    else:
        if a.n is None:
            raise ValidationError("--select ebic needs the sample size --n")
        path = lambda_path(S, solver.path_length, solver.path_ratio)
        lam, fit = ebic_select(S, a.n, path, a.gamma_ebic, solver)
        how = "ebic"
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    edges = edge_set(fit)
    write_matrix_csv(out / "theta.csv", fit.theta)
    write_matrix_csv(out / "w.csv", fit.w)
    write_edges_csv(out / "edges.csv", edges.edges, fit.theta)
    write_json(out / "summary.json", {"lambda": lam, "selection": how, "kkt_residual": fit.kkt_residual,
                                      "iterations": fit.iterations, "n_edges": len(edges),
                                      "tol": solver.tol, "max_iter": solver.max_iter,
                                      "gamma_ebic": a.gamma_ebic if how == "ebic" else None})
    print(f"lambda={lam:.6g} edges={len(edges)} kkt_residual={fit.kkt_residual:.2e}")


def cmd_run_experiment(a):
    base = json.loads(Path(a.config).read_text()) if a.config else {}
    if not isinstance(base, dict):
        raise ValidationError("config must be a JSON object")
    base["seed"] = a.seed
    overrides = {
        "graph": {"structure": a.structure, "p": a.p, "edge_prob": a.edge_prob, "groups": a.groups,
                  "strength": a.strength, "seed": a.graph_seed},
        "scheme": {"kind": a.scheme_kind, "params": a.scheme_params},
        "selection": {"method": a.selection, "gamma_ebic": a.gamma_ebic,
                      "subsamples": a.subsamples, "beta": a.beta},
        "solver": {"tol": a.tol, "max_iter": a.max_iter, "path_length": a.path_length,
                   "path_ratio": a.path_ratio},
        "estimator": {"delta": a.delta, "grid": a.grid, "tol_sigma": a.tol_sigma, "eps_psd": a.eps_psd},
    }
    for key, sub in overrides.items():
        sub = {k: v for k, v in sub.items() if v is not None}
        if sub:
            base[key] = {**base.get(key, {}), **sub}
    for key in ("n", "repetitions", "output_dir", "workers"):
        v = getattr(a, key)
        if v is not None:
            base[key] = v
    if a.methods:
        base["methods"] = a.methods.split(",")
    if not base.get("output_dir"):
        raise ValidationError("an output directory is required (--output-dir or config output_dir)")
    cfg = ExperimentConfig.from_dict(base)
    res = run_experiment(cfg)
    for m, summary in res.metadata["summary"].items():
        print(f"{m}: mean true-edge detection {summary['mean_true_edge_rate']:.3f} "
              f"over {summary['successful_repetitions']} repetitions")


def cmd_diagnose(a):
    truth = make_ground_truth(_graph_spec(a))
    tc = theory_constants(truth)
    report = {"p": truth.p, "n_edges": len(truth.edges), "d": tc.d, "kappa_sigma": tc.kappa_sigma,
              "kappa_gamma": tc.kappa_gamma, "incoherence_alpha": incoherence_alpha(truth)}
    text = json.dumps(report, indent=2, sort_keys=True)
    if a.out:
        Path(a.out).write_text(text + "\n")
    print(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="truncgraph", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a ground truth and a truncated sample")
    _add_graph_args(p)
    _add_scheme_args(p)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate-cov", help="pairwise likelihood covariance of a data file")
    p.add_argument("--data", required=True)
    p.add_argument("--scheme", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--flags", help="per-pair flag file (default: <out>.flags.csv)")
    _add_estimator_args(p)
    p.set_defaults(func=cmd_estimate_cov)

    p = sub.add_parser("glasso", help="graphical lasso on a covariance file")
    p.add_argument("--cov", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--select", choices=["ebic"])
    p.add_argument("--n", type=int, help="sample size behind the covariance (EBIC)")
    p.add_argument("--gamma-ebic", type=float, default=0.5)
    p.add_argument("--out-dir", required=True)
    _add_solver_args(p)
    p.set_defaults(func=cmd_glasso)

    p = sub.add_parser("run-experiment", help="Monte-Carlo detection-rate experiment")
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output-dir")
    p.add_argument("--n", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--methods", help="comma separated subset of ours,baseline")
    p.add_argument("--workers", type=int)
    p.add_argument("--selection", choices=["stars", "ebic"])
    p.add_argument("--gamma-ebic", type=float)
    p.add_argument("--subsamples", type=int)
    p.add_argument("--beta", type=float)
    _add_graph_args(p, defaults=False)
    _add_scheme_args(p, defaults=False)
    _add_estimator_args(p, defaults=False)
    _add_solver_args(p, defaults=False)
    p.set_defaults(func=cmd_run_experiment)

    p = sub.add_parser("diagnose", help="incoherence and conditioning of a ground truth")
    _add_graph_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
