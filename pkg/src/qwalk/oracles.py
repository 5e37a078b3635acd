"""Brute-force ground truths that never touch walk operators or estimators."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DomainError
from .graph_model import LayeredDag, PathSpec

__all__ = [
    "OracleReport",
    "exact_edge_count",
    "subtree_sizes",
    "dfs_positions",
    "dfs_prefix_size",
    "dfs_prefix_path",
    "minimax_value",
    "lca_depth_table",
    "exact_min_phase",
    "laplacian_resistance",
    "marked_exists",
]


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    value: object
    method: str


def exact_edge_count(dag: LayeredDag) -> int:
    """Edges reachable from the root, counted by breadth-first search."""
    seen = {1}
    frontier = [1]
    count = 0
    while frontier:
        nxt = []
        for u in frontier:
            for v in dag.children(u):
                count += 1
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return count


def subtree_sizes(tree: LayeredDag) -> dict[int, int]:
    """``|T(v)|`` in vertices for every vertex, by explicit recursion."""
    if not tree.is_tree:
        raise DomainError("subtree sizes need a tree")
    out: dict[int, int] = {}

    def size(v: int) -> int:
        stack = [(v, False)]
        while stack:
            u, done = stack.pop()
            if done:
                out[u] = 1 + sum(out[c] for c in tree.children(u))
            else:
                stack.append((u, True))
                stack.extend((c, False) for c in tree.children(u))
        return out[v]

    size(1)
    return out


def dfs_positions(tree: LayeredDag) -> dict[int, int]:
    """1-based depth-first preorder position of every vertex (recursive walk)."""
    pos: dict[int, int] = {}

    def visit(v):
        pos[v] = len(pos) + 1
        for c in tree.children(v):
            visit(c)

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * tree.vertex_count + 100))
    try:
        visit(1)
    finally:
        sys.setrecursionlimit(old)
    return pos


def dfs_prefix_size(tree: LayeredDag, path: PathSpec) -> int:
    """Vertex count of the restricted tree encoded by ``path``.

    Path vertices plus the full subtrees of the children that precede the
    next path vertex.
    """
    path.validate(tree, path.root)
    sizes = subtree_sizes(tree)
    total = 1
    for u, j in path.steps:
        total += 1 + sum(sizes[c] for c in tree.children(u)[:j])
    return total


def dfs_prefix_path(tree: LayeredDag, m: int) -> PathSpec:
    """Path to the ``m``-th vertex of the depth-first order."""
    pos = dfs_positions(tree)
    target = next(v for v, p in pos.items() if p == m)
    return PathSpec.to_vertex(tree, target)


def minimax_value(formula, gates: Mapping[int, str] | None = None, leaf_values: Mapping[int, int] | None = None, root: int = 1) -> int:
    """Value of an AND-OR formula tree.

    ``formula`` is a :class:`GraphFile` or a tree together with ``gates`` and
    ``leaf_values``.
    """
    if gates is None:
        tree, gates, leaf_values = formula.dag, formula.gates, formula.leaf_values
    else:
        tree = formula
    val: dict[int, int] = {}
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(tree.children(v))
    for v in reversed(order):
        kids = tree.children(v)
        if not kids:
            val[v] = int(leaf_values[v])
        elif gates[v] == "AND":
            val[v] = int(all(val[c] for c in kids))
        elif gates[v] == "OR":
            val[v] = int(any(val[c] for c in kids))
        else:
            raise DomainError(f"unknown gate {gates[v]!r} at {v}")
    return val[root]


def lca_depth_table(tree: LayeredDag) -> np.ndarray:
    """``l(i, j)``: depth of the lowest common ancestor, via ancestor-set intersection."""
    if not tree.is_tree:
        raise DomainError("lowest common ancestors need a tree")
    anc = {1: (1,)}
    for v in sorted(tree.vertices, key=tree.layer):
        if v != 1:
            anc[v] = anc[tree.parents(v)[0]] + (v,)
    V = tree.vertex_count
    out = np.zeros((V, V), dtype=int)
    for i in range(1, V + 1):
        si = set(anc[i])
        for j in range(1, V + 1):
            common = si.intersection(anc[j])
            out[i - 1, j - 1] = len(common) - 1
    return out


def exact_min_phase(ops) -> float:
    """Smallest nonzero ``|theta|`` among eigenvalues of the dense walk step."""
    lam = np.linalg.eigvals(ops.R_B @ ops.R_A)
    ph = np.abs(np.angle(lam))
    ph = ph[ph > 1e-8]
    return float(ph.min()) if ph.size else 0.0


def laplacian_resistance(graph: LayeredDag) -> np.ndarray:
    """Resistance from the root to every vertex via the Laplacian pseudo-inverse."""
    V = graph.vertex_count
    Lap = np.zeros((V, V))
    for u, v in graph.edges:
        Lap[u - 1, u - 1] += 1
        Lap[v - 1, v - 1] += 1
        Lap[u - 1, v - 1] -= 1
        Lap[v - 1, u - 1] -= 1
    P = np.linalg.pinv(Lap)
    d = np.diag(P)
    return d + d[0] - 2 * P[0, :]


def marked_exists(tree: LayeredDag, marked) -> bool:
    """Classical scan for a marked vertex reachable from the root."""
    marked = set(marked)
    return any(v in marked for v in tree.vertices)
