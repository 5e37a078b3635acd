"""Command-line interface: ``qwalk <subcommand> [options]``.

Every JSON report carries ``"schema": 1``, the package version, the full
parameter set, the seed and the SHA-256 of the input file, so re-running the
embedded configuration reproduces the report exactly.

Exit codes: 0 success, 2 bad parameters or input, 3 a verification suite
failed, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .andor_eval import KnownEvaluatorModel, exact_size_oracle, predicted_query_cost, unknown_evaluate
from .backtracking import MarkPredicate, generate_path, search
from .errors import DomainError, ParameterError, PropertyViolation, QwalkError
from .graph_model import (
    ExplorableHandle,
    GraphFile,
    LayeredDag,
    QueryLedger,
    complete_binary_tree,
    dfs_order,
    path_graph,
    random_formula,
    random_layered_dag,
    random_tree,
)
from .oracles import dfs_prefix_size, exact_edge_count, marked_exists, minimax_value
from .size_estimator import delta_correct, estimate_dag_size
from .spectral import (
    VerificationReport,
    verify_dag_bound,
    verify_harmonic_columns,
    verify_K_bounds,
    verify_K_identity,
    verify_N_corners,
    verify_one_eigenspace,
    verify_szegedy_correspondence,
    verify_top_overlap,
    verify_tree_formula,
)
from .walk_operators import build_reflections

SCHEMA = 1
EXIT_OK, EXIT_PARAM, EXIT_PROPERTY, EXIT_IO = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# helpers


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get("QWALK_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParameterError(f"QWALK_SEED must be an integer, got {env!r}") from None
    return int(np.random.SeedSequence().entropy)


def _trial_seeds(seed: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(trials)


def _load_input(path: str | None) -> tuple[GraphFile, str]:
    if path is None:
        raise ParameterError("--input is required")
    data = Path(path).read_bytes()
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path} is not valid JSON: {exc}") from exc
    return GraphFile.from_dict(doc), hashlib.sha256(data).hexdigest()


def _header(command: str, params: dict, seed, input_hash: str | None) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "version": __version__,
        "input_sha256": input_hash,
        "params": params,
        "seed": seed,
    }


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _finite(x):
    # JSON has no infinity
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def _rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _map(fn, jobs, parallel: int):
    if parallel and parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    seed = _resolve_seed(args.seed)
    rng = np.random.default_rng(seed)
    V = args.vertices
    depth = args.depth if args.depth is not None else max(1, 2 * math.ceil(math.log2(max(V, 2))))
    if args.kind == "tree":
        gf = GraphFile(random_tree(V, depth, args.branching, rng))
    elif args.kind == "dag":
        gf = GraphFile(random_layered_dag(V, depth, args.branching, args.extra_edges, rng))
    elif args.kind == "formula":
        if V % 2 == 0:
            raise ParameterError("formula trees have an odd vertex count")
        gf = random_formula((V + 1) // 2, depth, rng)
    elif args.kind == "path":
        gf = GraphFile(path_graph(V))
    else:
        gf = GraphFile(complete_binary_tree(depth))
    if args.marks:
        leaves = [v for v in gf.dag.vertices if not gf.dag.children(v)]
        k = min(args.marks, len(leaves))
        picked = rng.choice(len(leaves), size=k, replace=False)
        gf = GraphFile(gf.dag, frozenset(leaves[i] for i in picked), gf.gates, gf.leaf_values)
    _emit(gf.dumps() + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate-size


def _size_trial(job):
    gf, true_T, t0, n, delta, eps, ss, idx = job
    handle = gf.handle(QueryLedger())
    est = estimate_dag_size(handle, t0, n, delta, eps, np.random.default_rng(ss))
    row = est.to_dict()
    row["theta_hat"] = _finite(row["theta_hat"])
    row["trial"] = idx
    row["delta_correct"] = delta_correct(est, true_T)
    return row


def cmd_estimate_size(args) -> int:
    gf, digest = _load_input(args.input)
    seed = _resolve_seed(args.seed)
    true_T = exact_edge_count(gf.dag)
    n = args.n if args.n is not None else max(1, gf.dag.depth)
    t0 = args.t0 if args.t0 is not None else float(2 * max(true_T, 1))
    params = {"t0": t0, "n": n, "delta": args.delta, "epsilon": args.eps, "trials": args.trials}
    jobs = [
        (gf, true_T, t0, n, args.delta, args.eps, ss, k)
        for k, ss in enumerate(_trial_seeds(seed, args.trials))
    ]
    rows = _map(_size_trial, jobs, args.parallel)
    ok = [r["delta_correct"] for r in rows]
    if args.format == "csv":
        flat = [
            {k: r.get(k) for k in ("trial", "outcome", "t_hat", "theta_hat", "controlled_u_count", "delta_correct")}
            for r in rows
        ]
        _emit(_rows_to_csv(flat), args.out)
        return EXIT_OK
    doc = _header("estimate-size", params, seed, digest)
    doc["true_edges"] = true_T
    doc["delta_correct_rate"] = sum(ok) / len(ok)
    doc["trials"] = rows
    _emit(_dump_json(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# backtrack


def cmd_backtrack(args) -> int:
    gf, digest = _load_input(args.input)
    if not gf.dag.is_tree:
        raise DomainError("backtracking runs on trees")
    seed = _resolve_seed(args.seed)
    T1 = args.t1 if args.t1 is not None else float(gf.dag.vertex_count)
    n = args.n if args.n is not None else max(1, gf.dag.depth)
    pred = MarkPredicate.from_marked(gf.dag, gf.marked)
    handle = gf.handle(QueryLedger())
    rng = np.random.default_rng(seed)
    res = search(handle, pred, T1, n, args.eps, rng, cutover=args.cutover)
    params = {"t1": T1, "n": n, "epsilon": args.eps, "cutover": args.cutover}
    if args.m is not None:
        params.update(m=args.m, delta=args.delta)
    doc = _header("backtrack", params, seed, digest)
    truth = marked_exists(gf.dag, gf.marked)
    doc.update(
        found=res.found,
        stage_reached=res.stage_reached,
        whole_tree_run=res.whole_tree_run,
        agree_with_oracle=res.found == truth,
        controlled_u_count=res.controlled_u_count,
        queries={k: v for k, v in res.ledger.items() if k != "controlled_u"},
        stages=[s.to_dict() for s in res.stages],
    )
    if args.m is not None:
        # one path for the requested size, with its own ledger
        ph = gf.handle(QueryLedger())
        path = generate_path(ph, 1, args.m, args.delta, args.eps, rng, n=n)
        size = dfs_prefix_size(gf.dag, path)
        doc["path"] = {
            "m_target": args.m,
            "m_realized": size,
            "within_delta": abs(size - args.m) <= args.delta * args.m,
            "steps": [list(st) for st in path.steps],
            "end": path.end,
            "controlled_u_count": ph.ledger.controlled_u,
        }
    _emit(_dump_json(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def _eval_trial(job):
    gf, c, eps, mode, exact_sizes, ss, idx = job
    handle = gf.handle(QueryLedger())
    T = gf.dag.vertex_count
    n = max(1, gf.dag.depth)
    if gf.dag.edge_count == 0:
        val = handle.leaf_value(1)
        return {"trial": idx, "value": val, "measured_queries": float(handle.ledger.total_queries)}
    res = unknown_evaluate(
        handle,
        c,
        eps,
        T,
        np.random.default_rng(ss),
        KnownEvaluatorModel(mode),
        n=n,
        size_oracle=exact_size_oracle if exact_sizes else None,
    )
    return {"trial": idx, "value": res.value, "measured_queries": res.measured_queries}


def cmd_evaluate(args) -> int:
    gf, digest = _load_input(args.input)
    if not gf.dag.is_tree:
        raise DomainError("formulas are trees")
    seed = _resolve_seed(args.seed)
    truth = minimax_value(gf)
    jobs = [
        (gf, args.c, args.eps, args.evaluator, args.exact_sizes, ss, k)
        for k, ss in enumerate(_trial_seeds(seed, args.trials))
    ]
    rows = _map(_eval_trial, jobs, args.parallel)
    for r in rows:
        r["agree_with_oracle"] = r["value"] == truth
    T = gf.dag.vertex_count
    n = max(1, gf.dag.depth)
    params = {
        "c": args.c,
        "epsilon": args.eps,
        "evaluator": args.evaluator,
        "exact_sizes": args.exact_sizes,
        "trials": args.trials,
    }
    doc = _header("evaluate", params, seed, digest)
    first = rows[0]
    doc.update(
        value=first["value"],
        agree_with_oracle=first["agree_with_oracle"],
        measured_queries=first["measured_queries"],
        predicted_queries=predicted_query_cost(args.c, max(T, 2), n, args.eps),
        c=args.c,
        epsilon=args.eps,
        agreement_rate=sum(r["agree_with_oracle"] for r in rows) / len(rows),
        trials=rows,
    )
    _emit(_dump_json(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

SUITES = {
    "szegedy": "operators",
    "one-eigenspace": "operators",
    "k-bounds": "alpha",
    "k-identity": "alpha",
    "n-corners": "alpha",
    "tree-formula": "alpha",
    "dag-bound": "alpha",
    "harmonic": "alpha",
    "top-overlap": "alpha",
}
_SUITE_FN = {
    "k-bounds": verify_K_bounds,
    "k-identity": verify_K_identity,
    "n-corners": verify_N_corners,
    "tree-formula": verify_tree_formula,
    "dag-bound": verify_dag_bound,
    "harmonic": verify_harmonic_columns,
    "top-overlap": verify_top_overlap,
}


def _family_instance(family: str, rng, max_vertices: int) -> LayeredDag:
    V = int(rng.integers(2, max_vertices + 1))
    if family == "path":
        return path_graph(V)
    depth = int(rng.integers(max(1, math.ceil(math.log2(V + 1)) - 1), min(V - 1, 10) + 1))
    if family == "tree":
        return random_tree(V, depth, 3, rng)
    return random_layered_dag(V, depth, 3, int(rng.integers(1, 5)), rng)


def run_suite(suite: str, family: str, count: int, seed: int, max_vertices: int = 40) -> VerificationReport:
    """Run one verification suite on ``count`` random instances of a family."""
    if suite not in SUITES:
        raise ParameterError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    if family not in ("tree", "dag", "path"):
        raise ParameterError(f"unknown family {family!r}")
    if suite == "tree-formula" and family == "dag":
        raise ParameterError("the tree formula applies to trees and paths")
    rng = np.random.default_rng(seed)
    total = None
    for _ in range(count):
        dag = _family_instance(family, rng, max_vertices)
        alpha = math.sqrt(2 * max(dag.depth, 1))
        if SUITES[suite] == "operators":
            ops = build_reflections(dag, alpha)
            rep = verify_szegedy_correspondence(ops) if suite == "szegedy" else verify_one_eigenspace(ops)
        else:
            rep = _SUITE_FN[suite](dag, alpha)
        total = rep if total is None else total.merge(rep)
    return total


def cmd_verify(args) -> int:
    seed = _resolve_seed(args.seed)
    rep = run_suite(args.suite, args.family, args.count, seed, args.max_vertices)
    doc = _header(
        "verify",
        {"suite": args.suite, "family": args.family, "count": args.count, "max_vertices": args.max_vertices},
        seed,
        None,
    )
    doc.update(rep.to_dict())
    _emit(_dump_json(doc), args.out)
    return EXIT_OK if rep.passed else EXIT_PROPERTY


# ---------------------------------------------------------------------------
# bench

DEFAULT_GRIDS = {
    "t0": [32, 64, 128, 256, 512, 1024],
    "delta": [0.4 * 2 ** (-2 * k / 3) for k in range(6)],
    "n": [2, 8, 32, 128, 512],
    "tprime": [16, 32, 64, 128, 256, 512],
}


def _bench_size_cost(t0: float, n: int, delta: float, eps: float, tree: LayeredDag, seed) -> int:
    handle = ExplorableHandle(tree)
    estimate_dag_size(handle, t0, n, delta, eps, seed)
    return handle.ledger.controlled_u


def _bench_search_cost(tree: LayeredDag, position: int, eps: float, seed) -> int:
    target = dfs_order(tree)[position - 1]
    pred = MarkPredicate.from_marked(tree, [target])
    handle = ExplorableHandle(tree, marked=[target])
    res = search(handle, pred, tree.vertex_count, max(1, tree.depth), eps, seed)
    return res.controlled_u_count


def bench_rows(axis: str, grid, seed: int, trials: int = 1, eps: float = 0.1) -> list[dict]:
    """Measured controlled-U cost along one scaling axis.

    ``t0``, ``delta`` and ``n`` vary one parameter of the size estimator
    (others fixed at ``T0 = 256``, ``n = 8``, ``delta = 0.3``).  ``tprime``
    places one marked vertex at the given depth-first position of a
    1024-vertex tree and measures the search.
    """
    if axis not in DEFAULT_GRIDS:
        raise ParameterError(f"unknown axis {axis!r}; choose from {sorted(DEFAULT_GRIDS)}")
    grid = list(DEFAULT_GRIDS[axis] if grid is None else grid)
    base = np.random.SeedSequence(seed)
    rows = []
    if axis == "tprime":
        tree_ss, run_ss = base.spawn(2)
        tree = random_tree(1024, 14, 2, np.random.default_rng(tree_ss))
        for p, ss in zip(grid, run_ss.spawn(len(grid))):
            costs = [_bench_search_cost(tree, int(p), eps, np.random.default_rng(s)) for s in ss.spawn(trials)]
            rows.append({"axis": axis, "parameter": p, "measured_cost": float(np.mean(costs))})
        return rows
    tree = random_tree(20, 2, 5, np.random.default_rng(base.spawn(1)[0]))
    for x, ss in zip(grid, base.spawn(len(grid))):
        t0, n, delta = 256.0, 8, 0.3
        if axis == "t0":
            t0 = float(x)
        elif axis == "n":
            n = int(x)
        else:
            delta = float(x)
        costs = [_bench_size_cost(t0, n, delta, eps, tree, np.random.default_rng(s)) for s in ss.spawn(trials)]
        rows.append({"axis": axis, "parameter": x, "measured_cost": float(np.mean(costs))})
    return rows


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def cmd_bench(args) -> int:
    seed = _resolve_seed(args.seed)
    grid = None if args.grid is None else [float(x) for x in args.grid.split(",")]
    rows = bench_rows(args.axis, grid, seed, args.trials, args.eps)
    if args.format == "json":
        doc = _header("bench", {"axis": args.axis, "grid": grid, "trials": args.trials, "epsilon": args.eps}, seed, None)
        xs = [r["parameter"] for r in rows]
        if args.axis == "delta":
            xs = [1.0 / x for x in xs]
        doc["rows"] = rows
        doc["slope"] = loglog_slope(xs, [r["measured_cost"] for r in rows])
        _emit(_dump_json(doc), args.out)
    else:
        _emit(_rows_to_csv(rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwalk", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qwalk {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, fmt=("json",), default_fmt="json"):
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--seed", type=int, help="RNG seed (default: $QWALK_SEED)")
        sp.add_argument("--format", choices=fmt, default=default_fmt)

    g = sub.add_parser("gen", help="generate a graph, tree or formula file")
    g.add_argument("--kind", choices=["tree", "dag", "formula", "path", "complete"], default="tree")
    g.add_argument("--vertices", type=int, default=15)
    g.add_argument("--depth", type=int, help="depth bound (depth of the complete tree for --kind complete)")
    g.add_argument("--branching", type=int, default=2)
    g.add_argument("--extra-edges", type=int, default=3)
    g.add_argument("--marks", type=int, default=0, help="mark this many random leaves")
    common(g)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("estimate-size", help="run the edge-count estimator")
    e.add_argument("--input")
    e.add_argument("--t0", type=float, help="upper bound (default: twice the true edge count)")
    e.add_argument("--n", type=int, help="depth bound (default: graph depth)")
    e.add_argument("--delta", type=float, default=0.3)
    e.add_argument("--eps", type=float, default=0.1)
    e.add_argument("--trials", type=int, default=1)
    e.add_argument("--parallel", type=int, default=1)
    common(e, fmt=("json", "csv"))
    e.set_defaults(func=cmd_estimate_size)

    b = sub.add_parser("backtrack", help="search a tree for marked vertices")
    b.add_argument("--input")
    b.add_argument("--t1", type=float, help="vertex bound (default: vertex count)")
    b.add_argument("--n", type=int)
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--cutover", action="store_true", help="fall back to whole-tree detection early")
    b.add_argument("--m", type=int, help="also report one generated path for this target size")
    b.add_argument("--delta", type=float, default=0.25, help="precision of the --m path")
    common(b)
    b.set_defaults(func=cmd_backtrack)

    v = sub.add_parser("evaluate", help="evaluate an AND-OR formula file")
    v.add_argument("--input")
    v.add_argument("--c", type=int, default=2)
    v.add_argument("--eps", type=float, default=0.1)
    v.add_argument("--evaluator", choices=["exact", "noisy"], default="noisy")
    v.add_argument("--exact-sizes", action="store_true", help="use exact subtree sizes")
    v.add_argument("--trials", type=int, default=1)
    v.add_argument("--parallel", type=int, default=1)
    common(v)
    v.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("verify", help="run a spectral verification suite")
    r.add_argument("suite", choices=sorted(SUITES))
    r.add_argument("--family", choices=["tree", "dag", "path"], default="tree")
    r.add_argument("--count", type=int, default=100)
    r.add_argument("--max-vertices", type=int, default=40)
    common(r)
    r.set_defaults(func=cmd_verify)

    c = sub.add_parser("bench", help="cost along a scaling axis")
    c.add_argument("axis", choices=sorted(DEFAULT_GRIDS))
    c.add_argument("--grid", help="comma-separated parameter values")
    c.add_argument("--trials", type=int, default=1)
    c.add_argument("--eps", type=float, default=0.1)
    common(c, fmt=("csv", "json"), default_fmt="csv")
    c.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("trials", "count", "parallel"):
        if getattr(args, name, 1) is not None and getattr(args, name, 1) < 1:
            print(f"qwalk: --{name} must be at least 1", file=sys.stderr)
            return EXIT_PARAM
    try:
        return args.func(args)
    except PropertyViolation as exc:
        print(f"qwalk: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except (ParameterError, DomainError, QwalkError) as exc:
        print(f"qwalk: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"qwalk: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
