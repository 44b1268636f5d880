"""Monte-Carlo structure-recovery experiments.

One ground-truth graph is drawn per experiment; each repetition samples a
fresh latent matrix, truncates it, and runs every requested method
(``ours``: pairwise likelihood estimate + graphical lasso; ``baseline``:
graphical lasso on the empirical correlation of the zero-inflated data).
"""
from __future__ import annotations

import dataclasses
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, truncdist
from .diagnostics import (DetectionReport, SKIP_ONE, TRUE_EDGE, baseline_covariance,
                          detection_rates, pair_labels)
from .errors import NumericalError, ValidationError
from .glasso import (EdgeSet, SolverConfig, ebic_select, edge_set, lambda_path, stars_select)
from .io import FLOAT_FMT, write_json
from .pairlik import EstimatorConfig, all_pairs, estimate_covariance, psd_repair
from .simgen import MIN_EIGENVALUE, GraphSpec, make_ground_truth, make_scheme, sample_latent, truncate

log = logging.getLogger(__name__)

METHODS = ("ours", "baseline")
ZERO_TOL = 1e-6


@dataclass(frozen=True)
class SchemeSpec:
    kind: str = "identical"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SelectionConfig:
    method: str = "stars"
    gamma_ebic: float = 0.5
    subsamples: int = 20
    beta: float = 0.05

    def __post_init__(self):
        if self.method not in ("stars", "ebic"):
            raise ValidationError(f"unknown selection method {self.method!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec = GraphSpec()
    scheme: SchemeSpec = SchemeSpec()
    n: int = 500
    repetitions: int = 20
    methods: tuple = METHODS
    selection: SelectionConfig = SelectionConfig()
    solver: SolverConfig = SolverConfig()
    estimator: EstimatorConfig = EstimatorConfig()
    seed: int = 0
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValidationError("repetitions must be at least 1")
        if self.n < 2:
            raise ValidationError("n must be at least 2")
        methods = tuple(self.methods)
        if not methods or any(m not in METHODS for m in methods):
            raise ValidationError(f"methods must be a non-empty subset of {METHODS}")
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in methods))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        nested = {"graph": GraphSpec, "scheme": SchemeSpec, "selection": SelectionConfig,
                  "solver": SolverConfig, "estimator": EstimatorConfig}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        for key, typ in nested.items():
            if key in d:
                sub = d[key]
                if not isinstance(sub, dict):
                    raise ValidationError(f"config field {key!r} must be an object")
                fields = {f.name for f in dataclasses.fields(typ)}
                bad = set(sub) - fields
                if bad:
                    raise ValidationError(f"unknown fields in {key!r}: {sorted(bad)}")
                try:
                    d[key] = typ(**sub)
                except TypeError as exc:
                    raise ValidationError(f"bad {key!r} section: {exc}") from None
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        return cls(**d)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["methods"] = list(self.methods)
        return out


def default_settings() -> dict:
    """Every tunable constant that shapes an experiment's output."""
    return {
        "kernel_delta_min": truncdist.DELTA_MIN,
        "rect_quadrature": {"order": truncdist.RECT_ORDER, "panel_ridges": truncdist.RECT_PANEL_RIDGES,
                            "max_panels": truncdist.RECT_MAX_PANELS},
        "estimator": dataclasses.asdict(EstimatorConfig()),
        "solver": dataclasses.asdict(SolverConfig()),
        "selection": dataclasses.asdict(SelectionConfig()),
        "stars_subsample_size": "floor(10 * sqrt(n))",
        "graph_strength": GraphSpec().strength,
        "graph_min_eigenvalue": MIN_EIGENVALUE,
        "edge_zero_tol": ZERO_TOL,
        "ebic_tie_rule": "largest penalty",
    }


def covariance_estimator(method: str, values: np.ndarray, scheme, config: ExperimentConfig):
    """Closure mapping row indices to the input covariance of ``method``."""
    from .pairlik import ZeroInflatedMatrix

    data = ZeroInflatedMatrix(values, scheme)

    def ours(idx):
        est = estimate_covariance(data.rows(idx), config.estimator)
        return psd_repair(est, config.estimator.eps_psd).matrix

    def baseline(idx):
        return baseline_covariance(data.rows(idx)).matrix

    return ours if method == "ours" else baseline


def fit_method(method: str, values, scheme, config: ExperimentConfig, seed):
    estimator = covariance_estimator(method, values, scheme, config)
    n = values.shape[0]
    S = estimator(np.arange(n))
    path = lambda_path(S, config.solver.path_length, config.solver.path_ratio)
    sel = config.selection
    if sel.method == "ebic":
        lam, fit = ebic_select(S, n, path, sel.gamma_ebic, config.solver)
    else:
        lam, fit = stars_select(estimator, n, path, sel.subsamples, sel.beta, seed,
                                config.solver, ZERO_TOL, S_full=S)
    return lam, fit


def run_repetition(config: ExperimentConfig, r: int, truth=None, scheme=None) -> dict:
    """One repetition; failures are recorded per method, never raised."""
    if truth is None:
        truth = make_ground_truth(config.graph)
    if scheme is None:
        scheme = make_scheme(config.scheme.kind, config.graph.p, config.scheme.params)
    root = np.random.SeedSequence([config.seed, r])
    latent_seed, *method_seeds = root.spawn(1 + len(METHODS))
    data = truncate(sample_latent(truth, config.n, latent_seed), scheme)
    out = {"repetition": r, "zero_rate": float(np.mean(data.values == 0)), "methods": {}}
    for method in config.methods:
        seed = method_seeds[METHODS.index(method)]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lam, fit = fit_method(method, data.values, scheme, config, seed)
            edges = edge_set(fit, ZERO_TOL)
            out["methods"][method] = {"lambda": lam, "edges": sorted(edges.edges),
                                      "kkt_residual": fit.kkt_residual, "error": None}
        except (ValidationError, NumericalError) as exc:
            out["methods"][method] = {"error": f"{type(exc).__name__}: {exc}"}
    return out


def _run_one(args):
    return run_repetition(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reports: dict  # method -> DetectionReport
    repetitions: list
    metadata: dict

    def mean_true_rate(self, method: str, pairs=None) -> float:
        return self.reports[method].mean_rate(TRUE_EDGE, pairs)


def detection_table(reports: dict, labels: dict, p: int) -> str:
    """CSV text, one row per pair in column-major upper-triangle order."""
    methods = [m for m in METHODS if m in reports]
    lines = [",".join(["j", "k", "label"] + [f"rate_{m}" for m in methods])]
    for j, k in all_pairs(p):
        rates = [FLOAT_FMT.format(reports[m].rates[(j, k)]) for m in methods]
        lines.append(",".join([str(j + 1), str(k + 1), labels[(j, k)]] + rates))
    return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    truth = make_ground_truth(config.graph)
    scheme = make_scheme(config.scheme.kind, config.graph.p, config.scheme.params)
    jobs = [(config, r, truth, scheme) for r in range(config.repetitions)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            reps = list(pool.map(_run_one, jobs))
    else:
        reps = [_run_one(j) for j in jobs]
    reps.sort(key=lambda rec: rec["repetition"])

    chain = config.graph.structure == "chain"
    reports, failures = {}, {}
    for method in config.methods:
        ok = [rec for rec in reps if rec["methods"][method]["error"] is None]
        failed = [rec["repetition"] for rec in reps if rec["methods"][method]["error"] is not None]
        failures[method] = {str(rec["repetition"]): rec["methods"][method]["error"]
                            for rec in reps if rec["repetition"] in failed}
        for r in failed:
            warnings.warn(f"repetition {r} failed for {method}: {failures[method][str(r)]}")
        if not ok:
            raise NumericalError(f"every repetition failed for method {method!r}")
        edge_sets = [EdgeSet(frozenset(map(tuple, rec["methods"][method]["edges"]))) for rec in ok]
        reports[method] = detection_rates(edge_sets, truth, chain, method)

    labels = pair_labels(truth, chain)
    metadata = {
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config": config.to_dict(),
        "defaults": default_settings(),
        "truth": {"n_edges": len(truth.edges), "max_degree": truth.max_degree},
        "censoring_rates": [float(v) for v in scheme.censoring_rates()],
        "summary": {m: {"mean_true_edge_rate": reports[m].mean_rate(TRUE_EDGE),
                        "mean_false_edge_rate": reports[m].mean_rate("other-false"),
                        "mean_skip_one_rate": reports[m].mean_rate(SKIP_ONE) if chain else None,
                        "successful_repetitions": reports[m].repetitions}
                    for m in config.methods},
        "failures": failures,
        "repetitions": [{"repetition": rec["repetition"], "zero_rate": rec["zero_rate"],
                         "methods": {m: {k: v for k, v in rec["methods"][m].items() if k != "edges"}
                                     | {"n_edges": len(rec["methods"][m].get("edges", []))}
                                     for m in config.methods}}
                        for rec in reps],
    }
    # worker count does not influence results; keep it out of the provenance record
    metadata["config"].pop("workers")
    metadata["config"].pop("output_dir")
    result = ExperimentResult(config, reports, reps, metadata)
    if config.output_dir:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "detection.csv").write_text(detection_table(reports, labels, truth.p))
        write_json(out / "metadata.json", metadata)
    return result
