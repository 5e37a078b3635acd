"""AND-OR formula evaluation when the formula is discovered by local exploration.

The recursion extracts a heavy subtree, evaluates it with an idealized
known-structure evaluator, and obtains the values at its frontier from
recursive calls on smaller subtrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError
from .graph_model import ExplorableHandle, LayeredDag, _renumber_bfs
from .oracles import minimax_value
from .size_estimator import estimate_tree_vertices

__all__ = [
    "HeavySubtree",
    "KnownEvaluatorModel",
    "EvaluationResult",
    "heavy_subtree",
    "is_heavy_subtree",
    "unknown_evaluate",
    "predicted_query_cost",
    "exact_size_oracle",
]

# size_oracle(handle, bound) -> vertex count, or None for "more than bound"
SizeOracle = Callable[[ExplorableHandle, float], "int | None"]


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def exact_size_oracle(handle: ExplorableHandle, bound: float) -> int | None:
    """Exact subtree size (simulator side), ``None`` above ``bound``."""
    size = handle.simulator_view()[0].vertex_count
    return None if size > bound else size


@dataclass
class HeavySubtree:
    """Root-containing subtree ``T'`` found by :func:`heavy_subtree`.

    ``vertices`` are underlying ids in discovery order; ``frontier`` lists the
    members without children in ``T'`` (roots of unexplored subtrees, or
    leaves of the formula).
    """

    root: int
    vertices: tuple[int, ...]
    parent: dict[int, int | None]
    frontier: tuple[int, ...]
    truncated: bool = False
    cap: float = math.inf

    @property
    def size(self) -> int:
        return len(self.vertices)

    def children_map(self) -> dict[int, list[int]]:
        kids: dict[int, list[int]] = {v: [] for v in self.vertices}
        for v in self.vertices:
            p = self.parent[v]
            if p is not None:
                kids[p].append(v)
        return kids

    def to_dag(self) -> tuple[LayeredDag, tuple[int, ...]]:
        return _renumber_bfs(self.children_map(), self.root)


def _estimate_size(handle, bound, n, eps, rng, size_oracle):
    if size_oracle is not None:
        return size_oracle(handle, bound)
    est = estimate_tree_vertices(handle, bound, n, 0.25, eps, rng)
    return None if est.exceeds else est.t_hat


def heavy_subtree(
    handle: ExplorableHandle,
    m: float,
    epsilon: float,
    T: float,
    n: int,
    seed=None,
    *,
    size_oracle: SizeOracle | None = None,
) -> HeavySubtree:
    """Grow an ``m``-heavy element subtree from the handle's root.

    Each visited vertex gets a size estimate (``delta = 1/4``, failure
    ``m eps / (6 n T)``, bound ``m``).  A vertex is expanded, with all of its
    children added, when the estimate is at least ``2m/3`` or exceeds the
    bound.  Children are added all at once, and never if that would take
    ``T'`` past ``6 T n / m`` vertices; growth stops there.

    Parameters
    ----------
    size_oracle : callable, optional
        Replaces the quantum estimator, e.g. :func:`exact_size_oracle`.
    """
    if m < 2:
        raise ParameterError("m must be at least 2")
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    if T < 1 or n < 1:
        raise ParameterError("T and n must be at least 1")
    rng = _rng(seed)
    eps_node = min(0.5, m * epsilon / (6.0 * n * T))
    cap = 6.0 * T * n / m
    root = handle.root
    order = [root]
    parent: dict[int, int | None] = {root: None}
    leaves = []
    truncated = False
    stack = [root]
    while stack:
        v = stack.pop()
        est = _estimate_size(handle.subtree(v), m, n, eps_node, rng, size_oracle)
        if est is not None and est < 2.0 * m / 3.0:
            leaves.append(v)
            continue
        kids = handle.children(v)
        if not kids:
            leaves.append(v)
            continue
        if len(order) + len(kids) > cap:
            truncated = True
            leaves.append(v)
            leaves.extend(stack)
            break
        for c in kids:
            parent[c] = v
            order.append(c)
        stack.extend(reversed(kids))
    leaf_set = set(leaves)
    frontier = tuple(v for v in order if v in leaf_set)
    return HeavySubtree(root, tuple(order), parent, frontier, truncated, cap)


def is_heavy_subtree(candidate, tree: LayeredDag, m: float, root: int = 1) -> bool:
    """Check both clauses of the ``m``-heavy definition with exact sizes.

    1. Every ``x`` with ``|T(x)| >= m`` is in ``T'`` together with its children.
    2. Every member other than the root has ``|T(x)| >= m/2`` or a parent
       with ``|T(parent)| >= m/2``.

    ``candidate`` is a :class:`HeavySubtree` or a set of vertex ids; it must
    be connected and contain ``root``.
    """
    members = set(candidate.vertices if isinstance(candidate, HeavySubtree) else candidate)
    if root not in members:
        return False
    sizes = tree.subtree_sizes()
    below = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for c in tree.children(u):
            below.add(c)
            stack.append(c)
    if not members <= below:
        return False
    for v in members:
        if v != root and tree.parents(v)[0] not in members:
            return False
    for x in below:
        if sizes[x] >= m:
            if x not in members or any(c not in members for c in tree.children(x)):
                return False
    for v in members:
        if v == root or sizes[v] >= m / 2.0:
            continue
        if sizes[tree.parents(v)[0]] < m / 2.0:
            return False
    return True


@dataclass(frozen=True)
class KnownEvaluatorModel:
    """Idealized evaluator for formulas of known structure.

    ``mode="exact"`` always returns the formula value.  ``mode="noisy"``
    flips it with probability ``error_rate`` (default: the failure budget of
    the call).  Each call is charged ``ceil(kappa sqrt(s n) ln(1/eps))``
    leaf queries for a formula of ``s`` vertices.
    """

    mode: str = "exact"
    kappa: float = 1.0
    error_rate: float | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "noisy"):
            raise ParameterError(f"unknown evaluator mode {self.mode!r}")
        if self.kappa <= 0:
            raise ParameterError("kappa must be positive")

    def query_count(self, s: int, n: int, epsilon: float) -> int:
        return max(1, math.ceil(self.kappa * math.sqrt(s * max(n, 1)) * math.log(1.0 / epsilon)))

    def evaluate(self, dag, gates, leaf_values, epsilon, n, rng) -> tuple[int, int]:
        val = minimax_value(dag, gates, leaf_values)
        if self.mode == "noisy":
            p = epsilon if self.error_rate is None else self.error_rate
            if rng.random() < p:
                val = 1 - val
        return val, self.query_count(dag.vertex_count, n, epsilon)


@dataclass
class EvaluationResult:
    value: int
    measured_queries: float
    ledger: dict = field(default_factory=dict)
    levels: int = 1


def _explore(handle: ExplorableHandle) -> tuple[dict[int, list[int]], dict[int, str], dict[int, int]]:
    kids: dict[int, list[int]] = {}
    gates: dict[int, str] = {}
    leaves: dict[int, int] = {}
    stack = [handle.root]
    while stack:
        v = stack.pop()
        cs = handle.children(v)
        kids[v] = cs
        if cs:
            gates[v] = handle.node_type(v)
            stack.extend(cs)
        else:
            leaves[v] = handle.leaf_value(v)
    return kids, gates, leaves


def _relabel(kids, gates, leaves, root):
    dag, origin = _renumber_bfs(kids, root)
    g = {k: gates[o] for k, o in enumerate(origin, 1) if o in gates}
    lv = {k: leaves[o] for k, o in enumerate(origin, 1) if o in leaves}
    return dag, g, lv


def unknown_evaluate(
    handle: ExplorableHandle,
    c: int,
    epsilon: float,
    T: float,
    seed=None,
    evaluator: KnownEvaluatorModel | None = None,
    *,
    n: int | None = None,
    size_oracle: SizeOracle | None = None,
) -> EvaluationResult:
    """Evaluate the formula below the handle's root with ``c`` levels.

    Level ``i`` works with ``T_i = T^{i/c}``.  Level 1 explores its subtree
    completely.  Level ``i > 1`` extracts a ``T_{i-1}``-heavy subtree with
    failure ``eps/5`` and replaces each frontier vertex that is not a formula
    leaf by a level ``i-1`` call with failure ``eps/s^3``.  The evaluator runs
    with failure ``eps/5``.  The charged cost of a call is its own classical
    and controlled-U work plus the evaluator's leaf-query count times the
    most expensive frontier call, doubled below the top level to account for
    uncomputation.

    Returns
    -------
    EvaluationResult
        ``value`` and ``measured_queries`` (the charged cost).
    """
    if c < 1:
        raise ParameterError("c must be at least 1")
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    if T < 1:
        raise ParameterError("T must be at least 1")
    rng = _rng(seed)
    evaluator = evaluator or KnownEvaluatorModel()
    if n is None:
        n = max(1, handle.simulator_view()[0].depth)
    ledger = handle.ledger

    def spent() -> int:
        return ledger.total_queries + ledger.controlled_u

    def level(h: ExplorableHandle, i: int, eps: float) -> tuple[int, float]:
        start = spent()
        if i == 1:
            kids, gates, leaves = _explore(h)
            dag, g, lv = _relabel(kids, gates, leaves, h.root)
            val, q = evaluator.evaluate(dag, g, lv, eps / 5.0, n, rng)
            cost = (spent() - start) + q
        else:
            m = max(2.0, T ** ((i - 1) / c))
            hs = heavy_subtree(h, m, eps / 5.0, T ** (i / c), n, rng, size_oracle=size_oracle)
            s = hs.size
            kids = hs.children_map()
            gates = {v: h.node_type(v) for v in hs.vertices if kids[v]}
            leaves = {}
            sub_cost = 1.0
            in_subcalls = 0
            for u in hs.frontier:
                if h.child_count(u) == 0:
                    leaves[u] = h.leaf_value(u)
                    gates.pop(u, None)
                else:
                    mark = spent()
                    leaves[u], cu = level(h.subtree(u), i - 1, eps / s**3)
                    in_subcalls += spent() - mark
                    sub_cost = max(sub_cost, cu)
            dag, g, lv = _relabel(kids, gates, leaves, h.root)
            val, q = evaluator.evaluate(dag, g, lv, eps / 5.0, n, rng)
            own = spent() - start - in_subcalls
            cost = own + q * sub_cost
        if i < c:
            cost *= 2
        return val, cost

    value, cost = level(handle, c, epsilon)
    return EvaluationResult(int(value), float(cost), ledger.snapshot(), c)


def predicted_query_cost(c: int, T: float, n: int, epsilon: float) -> float:
    """``n^c sqrt(T_c T^{1/c}) (ln T_c + ln 1/eps)^c`` with ``T_c = T``."""
    if c < 1 or T < 1 or n < 1 or not 0 < epsilon < 1:
        raise ParameterError("invalid parameters for the cost formula")
    Tc = float(T)
    return n**c * math.sqrt(Tc * T ** (1.0 / c)) * (math.log(Tc) + math.log(1.0 / epsilon)) ** c
