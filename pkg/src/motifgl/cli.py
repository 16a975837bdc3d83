"""Command-line entry point: ``motifgl <subcommand> [options]``.

Subcommands
-----------
census      rooted-ball motif census of an edge-list graph
theorem1    census distance and spectral gaps of two graphs
solve       estimate a Laplacian from a covariance or signal matrix
experiment  run a sweep from a config file (or a bundled test case)
gridsearch  mean error of one method over a hyperparameter grid
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import harness
from .generators import empirical_covariance
from .graph import Graph, read_edge_list, write_edge_list
from .motifs import motif_census, write_census_csv
from .solver import SolverConfig, solve
from .spectral import TEST_FUNCTIONS, SpectralTarget, get_test_function, theorem1_check

log = logging.getLogger("motifgl")

GLOBAL_DEFAULTS = {"seed": None, "config": None, "out": None, "threads": 1}


def _global_flags() -> argparse.ArgumentParser:
    # defaults are suppressed so flags given before or after the subcommand both work
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base seed override")
    p.add_argument("--config", default=argparse.SUPPRESS, help="YAML/JSON config file")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="motifgl", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("census", parents=[common], help="motif census of a graph")
    p.add_argument("graph", help="edge list file")
    p.add_argument("--radius", "-r", type=int, default=1)
    p.add_argument("--cap", type=int, default=64, help="largest ball size")

    p = sub.add_parser("theorem1", parents=[common], help="census distance vs spectral gaps")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.add_argument("--radius", "-r", type=int, default=1)
    p.add_argument("--cap", type=int, default=64)

    p = sub.add_parser("solve", parents=[common], help="estimate a Laplacian")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--covariance", help="n x n covariance CSV")
    src.add_argument("--signals", help="n x M signal CSV (rows are nodes)")
    ref = p.add_mutually_exclusive_group()
    ref.add_argument("--reference", help="reference graph edge list")
    ref.add_argument("--target-value", type=float, help="explicit c_g target")
    p.add_argument("--test-function", "-g", action="append", choices=sorted(TEST_FUNCTIONS),
                   help="test function(s) for the targets (default tr)")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--edge-tol", type=float, default=1e-8, help="weights below this are dropped")

    p = sub.add_parser("experiment", parents=[common], help="run an experiment sweep")
    p.add_argument("--name", help="bundled config name, e.g. testcase2")
    p.add_argument("--realizations", "-R", type=int)

    p = sub.add_parser("gridsearch", parents=[common], help="hyperparameter grid for one method")
    p.add_argument("--name", help="bundled config name")
    p.add_argument("--method", required=True, help="method label in the config")
    p.add_argument("--grid", action="append", required=True, metavar="KEY=V1,V2,...")
    p.add_argument("--realizations", "-R", type=int)
    return parser


def _parse_grid(items) -> dict:
    grid = {}
    for item in items:
        key, _, vals = item.partition("=")
        if not key or not vals:
            raise SystemExit(f"bad --grid entry {item!r}; expected KEY=V1,V2")
        grid[key.strip()] = [yaml.safe_load(v) for v in vals.split(",")]
    return grid


def _load_experiment(args) -> harness.ExperimentSpec:
    if args.config:
        spec = harness.load_spec(args.config)
    elif args.name:
        spec = harness.load_spec(harness.bundled_config(args.name))
    else:
        raise SystemExit("experiment needs --config or --name")
    if args.seed is not None:
        spec = replace(spec, base_seed=args.seed)
    if args.realizations:
        spec = replace(spec, realizations=args.realizations)
    return spec


def _out_dir(args, default) -> Path:
    out = Path(args.out) if args.out else Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_census(args):
    g = read_edge_list(args.graph)
    census = motif_census(g, args.radius, args.cap)
    if args.out:
        path = _out_dir(args, ".") / "census.csv"
        write_census_csv(census, path)
        print(path)
    else:
        write_census_csv(census, sys.stdout)


def cmd_theorem1(args):
    res = theorem1_check(read_edge_list(args.graph1), read_edge_list(args.graph2), args.radius, cap=args.cap)
    rows = [("census_distance", res["eps"])] + sorted(res["deltas"].items())
    lines = ["quantity,value"] + [f"{k},{harness.FLOAT_FMT % v}" for k, v in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        path = _out_dir(args, ".") / "theorem1.csv"
        path.write_text(text)
        print(path)
    else:
        sys.stdout.write(text)


def _solver_config(args, n, ref: Graph | None) -> SolverConfig:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = yaml.safe_load(fh) or {}
    raw = dict(raw)
    fns = args.test_function or raw.pop("test_functions", None) or ["tr"]
    delta = raw.pop("delta", args.delta)
    if ref is not None:
        targets = tuple(SpectralTarget.from_graph(f, ref, delta) for f in fns)
    elif args.target_value is not None:
        targets = tuple(SpectralTarget(get_test_function(f), args.target_value, delta) for f in fns)
    else:
        targets = ()
    mode = raw.pop("mode", "mgl" if targets else "unconstrained")
    return SolverConfig(**raw, mode=mode, targets=targets if mode == "mgl" else ())


def cmd_solve(args):
    if args.covariance:
        C = harness.read_matrix(args.covariance)
    else:
        C = empirical_covariance(harness.read_signals(args.signals))
    n = C.shape[0]
    if C.shape != (n, n):
        raise harness.DimensionMismatch(f"covariance must be square, got {C.shape}")
    ref = read_edge_list(args.reference) if args.reference else None
    cfg = _solver_config(args, n, ref)
    state = solve(C, n, cfg)
    out = _out_dir(args, "solve_out")
    S = state.S
    A = -S.copy()
    np.fill_diagonal(A, 0.0)
    A[A < args.edge_tol] = 0.0
    write_edge_list(Graph(A), out / "estimate.edges")
    harness.write_matrix(out / "estimate.csv", S)
    harness._write_csv(
        out / "objective.csv", ["iteration", "objective"],
        [(i, float(v)) for i, v in enumerate(state.objective_trace)],
    )
    print(f"iterations={state.iter} converged={state.converged} rel_change={state.rel_change:.3g}")
    print(out)


def cmd_experiment(args):
    spec = _load_experiment(args)
    out = Path(args.out) / spec.name if args.out else Path(spec.outputs) / spec.name
    rows, records = harness.run_experiment(spec, out_dir=out, threads=args.threads)
    for r in rows:
        print(f"{r.method:>10s} {r.sweep_value!s:>8s} {r.mean_error:.6g} +- {r.std_error:.2g} ({r.realizations_used})")
    failed = sum(r.status == "failed" for r in records)
    if failed:
        print(f"{failed} method runs failed; see raw.csv", file=sys.stderr)
    print(out)


def cmd_gridsearch(args):
    spec = _load_experiment(args)
    results = harness.gridsearch(spec, args.method, _parse_grid(args.grid), threads=args.threads)
    keys = sorted({k for params, _ in results for k in params})
    out = _out_dir(args, Path(spec.outputs) / spec.name)
    harness._write_csv(
        out / "gridsearch.csv", keys + ["mean_error"],
        [[params[k] for k in keys] + [float(err)] for params, err in results],
    )
    for params, err in results:
        print(params, f"{err:.6g}")
    print(out / "gridsearch.csv")


COMMANDS = {
    "census": cmd_census,
    "theorem1": cmd_theorem1,
    "solve": cmd_solve,
    "experiment": cmd_experiment,
    "gridsearch": cmd_gridsearch,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
