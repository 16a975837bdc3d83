"""Experiment runner: seeded sweeps over graph models, per-realization CSV
dumps, aggregated error tables and real-data ingestion.

Seeds
-----
Realization ``i`` of sweep value ``j`` draws its truth graph, reference graph
and signals from ``seed_for(base_seed, j, i, purpose)`` with ``purpose`` 0, 1
and 2 respectively (see :func:`motifgl.generators.seed_for`). The key does not
depend on ``R``, so raising ``R`` keeps the first realizations unchanged.
"""
from __future__ import annotations

import csv
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .baselines import BASELINES, glasso_estimator, pinv_estimator
from .generators import (
    REFERENCE,
    SIGNALS,
    TRUTH,
    GraphModel,
    SignalBatch,
    empirical_covariance,
    generate,
    sample_gmrf,
    seed_for,
)
from .graph import Graph, GraphError, ParseError, laplacian, read_edge_list
from .solver import SolverConfig, solve
from .spectral import SpectralTarget, get_test_function, spectrum_of

log = logging.getLogger(__name__)

METRICS = ("gso", "spectrum")
FLOAT_FMT = "%.17g"


class ZeroMatrix(ValueError):
    pass


class ZeroVector(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


# --------------------------------------------------------------------------
# metrics

def _normalized_gap(a, b, exc) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise exc("error metric needs nonzero arguments")
    d = a / na - b / nb
    return float(np.sum(d * d))


def err_gso(est, truth) -> float:
    """Squared Frobenius distance between the unit-norm versions of both matrices."""
    est, truth = np.asarray(est, dtype=float), np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise DimensionMismatch(f"shapes differ: {est.shape} vs {truth.shape}")
    return _normalized_gap(est, truth, ZeroMatrix)


def err_spectrum(est_lambda, truth_lambda) -> float:
    """Same as :func:`err_gso` for eigenvalue vectors (given in matching order)."""
    a = np.asarray(est_lambda, dtype=float).ravel()
    b = np.asarray(truth_lambda, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"lengths differ: {a.size} vs {b.size}")
    return _normalized_gap(a, b, ZeroVector)


# --------------------------------------------------------------------------
# experiment description

@dataclass(frozen=True)
class MethodSpec:
    """One estimator in a comparison.

    ``kind`` is a baseline name (``pinv|glasso|tr_fixed|unc``) or ``mgl``.
    For ``mgl``, ``test_functions`` lists the functions whose reference values
    become targets, each with tolerance ``delta``.
    """

    label: str
    kind: str
    config: dict = field(default_factory=dict)
    test_functions: tuple = ()
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "test_functions", tuple(self.test_functions))
        if self.kind not in BASELINES + ("mgl",):
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.kind == "mgl" and not self.test_functions:
            raise ValueError(f"method {self.label!r}: mgl needs test_functions")
        for f in self.test_functions:
            get_test_function(f)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    graph_model: GraphModel
    reference_model: GraphModel
    sweep_param: str  # "samples" or a graph-model parameter
    sweep_values: tuple
    methods: tuple
    sweep_target: str = "both"  # which models a parameter sweep applies to
    samples: int = 500  # used when the sweep is over a model parameter
    realizations: int = 20
    base_seed: int = 0
    outputs: str = "outputs"
    metric: str = "gso"
    zero_eigs: int | None = None  # None: component count of the truth graph
    histograms: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if not self.sweep_values:
            raise ValueError("sweep needs at least one value")
        if self.sweep_target not in ("both", "truth", "reference"):
            raise ValueError("sweep target must be both, truth or reference")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.sweep_param == "samples" and any(v < 1 for v in self.sweep_values):
            raise ValueError("sample counts must be positive")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels) or not labels:
            raise ValueError("method labels must be unique and non-empty")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        sweep = d.pop("sweep")
        gm = d.pop("graph_model")
        rm = d.pop("reference_model")
        methods = [MethodSpec(**m) for m in d.pop("methods")]
        return cls(
            graph_model=GraphModel(gm["kind"], dict(gm.get("params", {}))),
            reference_model=GraphModel(rm["kind"], dict(rm.get("params", {}))),
            sweep_param=sweep["param"],
            sweep_values=tuple(sweep["values"]),
            sweep_target=sweep.get("target", "both"),
            methods=tuple(methods),
            **d,
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "graph_model": {"kind": self.graph_model.kind, "params": dict(self.graph_model.params)},
            "reference_model": {
                "kind": self.reference_model.kind,
                "params": dict(self.reference_model.params),
            },
            "sweep": {
                "param": self.sweep_param,
                "values": list(self.sweep_values),
                "target": self.sweep_target,
            },
            "methods": [
                {**asdict(m), "test_functions": list(m.test_functions)} for m in self.methods
            ],
            "samples": self.samples,
            "realizations": self.realizations,
            "base_seed": self.base_seed,
            "outputs": self.outputs,
            "metric": self.metric,
            "zero_eigs": self.zero_eigs,
            "histograms": self.histograms,
        }


def load_spec(path) -> ExperimentSpec:
    """Read an experiment config (YAML or JSON)."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    return ExperimentSpec.from_dict(data)


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``testcase2``."""
    p = Path(__file__).parent / "configs" / f"{name}.yaml"
    if not p.exists():
        raise FileNotFoundError(p)
    return p


# --------------------------------------------------------------------------
# one realization

@dataclass
class MetricRow:
    method: str
    sweep_value: float
    mean_error: float
    std_error: float
    realizations_used: int


@dataclass
class RunRecord:
    method: str
    sweep_index: int
    sweep_value: float
    realization: int
    seed: int
    status: str  # ok | failed
    error: float = math.nan
    iters: int = 0
    converged: bool = True
    message: str = ""
    estimate: np.ndarray | None = None
    truth: np.ndarray | None = None
    lam: np.ndarray | None = None
    targets: tuple = ()


def _models_at(spec: ExperimentSpec, value):
    if spec.sweep_param == "samples":
        return spec.graph_model, spec.reference_model, int(value)
    v = int(value) if spec.sweep_param in ("n", "neighbors", "communities") else value
    out = []
    for role, m in (("truth", spec.graph_model), ("reference", spec.reference_model)):
        swept = spec.sweep_target in ("both", role) and spec.sweep_param in m.params
        out.append(m.with_params(**{spec.sweep_param: v}) if swept else m)
    return out[0], out[1], spec.samples


def solver_config(method: MethodSpec, targets=(), zero_eigs: int = 1) -> SolverConfig:
    cfg = dict(method.config)
    cfg.setdefault("zero_eigs", zero_eigs)
    if method.kind == "unc":
        return SolverConfig(**{**cfg, "mode": "unconstrained", "gamma": 0.0})
    if method.kind == "tr_fixed":
        return SolverConfig(**{**cfg, "mode": "fixed_trace", "gamma": 0.0})
    return SolverConfig(**{**cfg, "mode": "mgl"}, targets=tuple(targets))


def _estimate(method: MethodSpec, C, ref: Graph, n: int, zero_eigs: int):
    """Returns ``(S, lam, iters, converged, targets)``."""
    if method.kind == "pinv":
        return pinv_estimator(C), None, 0, True, ()
    if method.kind == "glasso":
        kw = dict(method.config)
        res = glasso_estimator(C, kw.get("alpha", 0.01), kw.get("max_iters", 200), kw.get("tol", 1e-6))
        return res.precision, None, res.n_iter, res.converged, ()
    targets = ()
    if method.kind == "mgl":
        targets = tuple(SpectralTarget.from_graph(f, ref, method.delta) for f in method.test_functions)
    cfg = solver_config(method, targets, zero_eigs)
    st = solve(C, n, cfg)
    S = st.S
    if method.kind == "tr_fixed":
        tr = np.trace(S)
        value = cfg.fixed_trace_value if cfg.fixed_trace_value is not None else n
        S = S * (value / tr) if tr > 0 else S
    return S, st.lam, st.iter, st.converged, targets


def run_realization(spec: ExperimentSpec, j: int, i: int, keep: bool = False) -> list:
    """All methods on realization ``i`` of sweep value ``j``.

    Failures are caught per method and returned as ``status='failed'``
    records carrying the message.
    """
    value = spec.sweep_values[j]
    gm, rm, M = _models_at(spec, value)
    sig_seed = seed_for(spec.base_seed, j, i, SIGNALS)
    records = []
    try:
        g = generate(gm.with_seed(seed_for(spec.base_seed, j, i, TRUTH)))
        ref = generate(rm.with_seed(seed_for(spec.base_seed, j, i, REFERENCE)))
        L = laplacian(g)
        q = g.n_components() if spec.zero_eigs is None else spec.zero_eigs
        if g.n_components() != q:
            raise GraphError(f"truth graph has {g.n_components()} components, expected {q}")
        C = empirical_covariance(sample_gmrf(L, M, sig_seed, q=q))
    except Exception as exc:  # noqa: BLE001 -- recorded, not dropped
        msg = f"setup: {type(exc).__name__}: {exc}"
        return [RunRecord(m.label, j, value, i, sig_seed, "failed", message=msg) for m in spec.methods]

    truth_lam = spectrum_of(g)
    for m in spec.methods:
        rec = RunRecord(m.label, j, value, i, sig_seed, "ok")
        try:
            S, lam, iters, conv, targets = _estimate(m, C, ref, g.n, q)
            if spec.metric == "gso":
                rec.error = err_gso(S, L)
            else:
                est_lam = np.linalg.eigvalsh((S + S.T) / 2)
                rec.error = err_spectrum(est_lam, truth_lam)
            rec.iters, rec.converged = int(iters), bool(conv)
            if keep:
                rec.estimate, rec.truth, rec.lam, rec.targets = S, L, lam, targets
        except Exception as exc:  # noqa: BLE001
            rec.status = "failed"
            rec.message = f"{type(exc).__name__}: {exc}"
            log.warning("method=%s sweep=%s seed=%d failed: %s", m.label, value, sig_seed, rec.message)
        records.append(rec)
    return records


def _run_cell(args):
    spec, j, i, keep = args
    return run_realization(spec, j, i, keep)


# --------------------------------------------------------------------------
# sweep

def aggregate(records, methods, sweep_values) -> list:
    rows = []
    for j, v in enumerate(sweep_values):
        for label in methods:
            errs = [r.error for r in records if r.sweep_index == j and r.method == label and r.status == "ok"]
            k = len(errs)
            mean = float(np.mean(errs)) if k else math.nan
            se = float(np.std(errs, ddof=1) / math.sqrt(k)) if k > 1 else (0.0 if k else math.nan)
            rows.append(MetricRow(label, v, mean, se, k))
    return rows


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % x
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def write_outputs(spec: ExperimentSpec, records, rows, out_dir: Path):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "summary.csv",
        ["method", "sweep_value", "mean_error", "std_error", "realizations_used"],
        [(r.method, float(r.sweep_value), r.mean_error, r.std_error, r.realizations_used) for r in rows],
    )
    _write_csv(
        out_dir / "raw.csv",
        ["method", "sweep_value", "realization", "seed", "status", "error", "iters", "converged", "message"],
        [
            (r.method, float(r.sweep_value), r.realization, r.seed, r.status, float(r.error),
             r.iters, r.converged, r.message)
            for r in records
        ],
    )
    with open(out_dir / "config.snapshot", "w") as fh:
        yaml.safe_dump(spec.to_dict(), fh, sort_keys=False)
    if spec.histograms:
        # raw eigenvalues, one per row; binning is left to plotting tools
        hdir = out_dir / "histograms"
        hdir.mkdir(exist_ok=True)
        for r in records:
            if r.status != "ok" or r.estimate is None:
                continue
            lam = np.linalg.eigvalsh((r.estimate + r.estimate.T) / 2)
            name = f"{_slug(r.method)}_j{r.sweep_index}_r{r.realization}.csv"
            _write_csv(hdir / name, ["eigenvalue"], [(float(x),) for x in lam])


def _slug(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label)


def run_experiment(spec: ExperimentSpec, out_dir=None, threads: int = 1, keep: bool = False):
    """Run every (sweep value, realization) cell and write the CSV reports.

    Cells are fanned out to ``threads`` worker processes and collected in
    (sweep index, realization) order, so output does not depend on scheduling.
    Returns ``(rows, records)``; set ``out_dir=False`` to skip writing files.
    """
    cells = [(spec, j, i, keep or spec.histograms)
             for j in range(len(spec.sweep_values)) for i in range(spec.realizations)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_cell, cells))
    else:
        chunks = [_run_cell(c) for c in cells]
    records = [r for chunk in chunks for r in chunk]
    for r in records:
        if r.status == "failed":
            log.warning("failed: method=%s sweep=%s realization=%d seed=%d: %s",
                        r.method, r.sweep_value, r.realization, r.seed, r.message)
    rows = aggregate(records, [m.label for m in spec.methods], spec.sweep_values)
    if out_dir is not False:
        target = Path(out_dir) if out_dir is not None else Path(spec.outputs) / spec.name
        write_outputs(spec, records, rows, target)
    return rows, records


def mean_error(rows, method, sweep_value=None) -> float:
    sel = [r.mean_error for r in rows if r.method == method and (sweep_value is None or r.sweep_value == sweep_value)]
    return float(np.mean(sel))


# --------------------------------------------------------------------------
# hyperparameter search

def gridsearch(spec: ExperimentSpec, label: str, grid: dict, threads: int = 1) -> list:
    """Mean error of method ``label`` for every combination in ``grid``.

    ``grid`` maps config keys (e.g. ``beta``, ``gamma``) to value lists.
    Returns ``(params, mean_error)`` pairs sorted by error.
    """
    base = next((m for m in spec.methods if m.label == label), None)
    if base is None:
        raise ValueError(f"no method labelled {label!r}")
    keys = list(grid)
    results = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        params = dict(zip(keys, combo))
        m = replace(base, config={**base.config, **params})
        sub = replace(spec, methods=(m,))
        rows, _ = run_experiment(sub, out_dir=False, threads=threads)
        results.append((params, mean_error(rows, label)))
    results.sort(key=lambda pe: (math.isnan(pe[1]), pe[1]))
    return results


# --------------------------------------------------------------------------
# real data

def read_signals(path) -> SignalBatch:
    """Signal matrix CSV: one row per node, one column per sample, no header."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                rows.append([float(tok) for tok in row])
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(path, lineno, f"expected {len(rows[0])} columns")
            if not all(math.isfinite(v) for v in rows[-1]):
                raise ParseError(path, lineno, "non-finite value")
    if not rows:
        raise ParseError(path, 0, "no signal rows")
    return SignalBatch(np.array(rows))


def ingest_real(edges_path, signals_path):
    """Load a reference graph and a node-by-sample signal matrix."""
    g = read_edge_list(edges_path)
    batch = read_signals(signals_path)
    if batch.n != g.n:
        raise DimensionMismatch(f"graph has {g.n} nodes but signals have {batch.n} rows")
    return g, batch


def read_matrix(path) -> np.ndarray:
    return read_signals(path).X


def write_matrix(path, A):
    _write_csv_plain(path, np.atleast_2d(A))


def _write_csv_plain(path, A):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in A:
            w.writerow([FLOAT_FMT % x for x in row])
