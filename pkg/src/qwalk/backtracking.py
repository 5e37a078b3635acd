"""Backtracking search accelerated by tree size estimation.

The search grows restricted trees ``T_m`` (the first ``m`` vertices in
depth-first order) with doubling ``m``, encoding each by a root path found
with :func:`generate_path`, and runs marked-vertex detection on each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import DomainError, ParameterError
from .graph_model import ExplorableHandle, LayeredDag, PathSpec
from .phase_estimation import qpe_kernel
from .size_estimator import estimate_tree_vertices
from .spectral import szegedy_spectrum

__all__ = [
    "PathSpec",
    "MarkPredicate",
    "StageRecord",
    "SearchResult",
    "restricted_view",
    "detect_marked",
    "detection_parameters",
    "generate_path",
    "search",
    "covers_whole_tree",
]


class MarkPredicate:
    """Per-vertex predicate with values ``True``, ``False`` or ``None`` (indeterminate)."""

    def __init__(self, values: Mapping[int, bool | None]):
        self._values = dict(values)

    def __call__(self, v: int) -> bool | None:
        return self._values.get(v)

    @classmethod
    def from_marked(cls, tree: LayeredDag, marked: Iterable[int]) -> "MarkPredicate":
        """Leaves get ``True``/``False``; internal vertices are indeterminate."""
        marked = set(marked)
        vals = {}
        for v in tree.vertices:
            if tree.children(v):
                vals[v] = True if v in marked else None
            else:
                vals[v] = v in marked
        return cls(vals)

    def marked_set(self) -> frozenset[int]:
        return frozenset(v for v, b in self._values.items() if b is True)

    def is_well_formed(self, tree: LayeredDag) -> bool:
        """Whether decided values sit exactly on the leaves."""
        return all(
            (self._values.get(v) is not None) == (not tree.children(v)) for v in tree.vertices
        )


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def restricted_view(tree_handle: ExplorableHandle, path: PathSpec) -> ExplorableHandle:
    """Handle exposing only the restricted tree encoded by ``path``.

    At each path vertex ``u_i`` the children after ``u_{i+1}`` are hidden and
    the end vertex shows no children.  Queries go to the underlying tree and
    are charged to the same ledger.
    """
    if path.root != tree_handle.root:
        raise DomainError(f"path starts at {path.root}, the handle's root is {tree_handle.root}")
    visible = {}
    for k, (u, j) in enumerate(path.steps):
        kids = tree_handle._kids(u)
        nxt = path.steps[k + 1][0] if k + 1 < len(path.steps) else path.end
        if not 0 <= j < len(kids) or kids[j] != nxt:
            raise DomainError(f"path step {u} -> {nxt} is not child {j} of {u}")
        visible[u] = kids[: j + 1]
    visible[path.end] = ()
    return tree_handle.restrict(visible)


def detection_parameters(T1: float, n: int, epsilon: float) -> tuple[int, int]:
    """Precision bits ``ceil(log2 sqrt(T1 n)) + 3`` and ``2 ceil(ln 1/eps) + 1`` runs."""
    b = max(1, math.ceil(math.log2(math.sqrt(T1 * n)))) + 3
    r = 2 * math.ceil(math.log(1.0 / epsilon)) + 1
    return b, r


def detect_marked(
    tree_handle: ExplorableHandle,
    P: MarkPredicate | Iterable[int] | None,
    T1: float,
    n: int,
    epsilon: float,
    seed=None,
) -> bool:
    """Decide whether the visible tree holds a marked vertex.

    The marked walk (``alpha^2 = 4n``, identity diffusion on marked
    vertices) is phase-estimated from the anchor state; "marked" is declared
    when more than half of the runs land in the zero bin.  A marked vertex
    gives the anchor state a large overlap with the 1-eigenspace, while
    without marks every phase is at least about one bin away from zero.
    """
    if T1 < 1 or n < 1:
        raise ParameterError("T1 and n must be at least 1")
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    rng = _rng(seed)
    dag, origin = tree_handle.simulator_view()
    if P is None:
        marked = tree_handle.view_marked()
    else:
        pred = P if isinstance(P, MarkPredicate) else MarkPredicate({v: True for v in P})
        marked = frozenset(k + 1 for k, v in enumerate(origin) if pred(v) is True)
    b, r = detection_parameters(T1, n, epsilon)
    M = 1 << b
    spec = szegedy_spectrum(dag, 2.0 * math.sqrt(n), marked)
    p0 = float(np.clip(np.dot(spec.weights, qpe_kernel(M, spec.phases)), 0.0, 1.0))
    zero_hits = int(rng.binomial(r, p0))
    tree_handle.ledger.charge_controlled_u(M * r)
    return 2 * zero_hits > r


def _last_path(handle: ExplorableHandle, start: int, steps: list) -> int:
    v = start
    while True:
        k = handle.child_count(v)
        if k == 0:
            return v
        steps.append((v, k - 1))
        v = handle.child(v, k - 1)


def generate_path(
    tree_handle: ExplorableHandle,
    v: int,
    m: int,
    delta: float,
    epsilon: float,
    seed=None,
    *,
    n: int | None = None,
    route: str = "szegedy",
) -> PathSpec:
    """Path from ``v`` encoding a restricted tree of about ``m`` vertices.

    At each vertex with remaining budget ``m`` (itself included), the
    children are scanned in visiting order.  For every child but the last,
    the size of its subtree is estimated (precision ``delta``, failure
    ``epsilon / n``, bound ``(m-1)/(1-delta)``).  An estimate above the
    remaining budget descends into that child; an equal estimate takes the
    child's whole subtree by following last children to a leaf; a smaller
    one is subtracted and the scan continues.  The last child is entered
    without an estimate.  On binary trees this is exactly the two-child rule.

    Parameters
    ----------
    n : int, optional
        Depth bound; defaults to the depth of the tree below ``v``.
    """
    if m < 1:
        raise ParameterError("m must be at least 1")
    if not 0 < delta < 1 or not 0 < epsilon < 1:
        raise ParameterError("delta and epsilon must lie in (0, 1)")
    rng = _rng(seed)
    handle = tree_handle.subtree(v)
    if n is None:
        n = max(1, handle.simulator_view()[0].depth)
    steps: list[tuple[int, int]] = []
    cur, rem = v, int(m)
    while True:
        kids = handle.children(cur)
        if not kids or rem <= 1:
            return PathSpec(tuple(steps), cur)
        budget = rem - 1
        for j, c in enumerate(kids):
            if j == len(kids) - 1:
                steps.append((cur, j))
                cur, rem = c, budget
                break
            est = estimate_tree_vertices(
                handle.subtree(c), budget / (1.0 - delta), n, delta, epsilon / n, rng, route=route
            )
            if est.exceeds or est.t_hat > budget:
                steps.append((cur, j))
                cur, rem = c, budget
                break
            if est.t_hat == budget:
                steps.append((cur, j))
                end = _last_path(handle, c, steps)
                return PathSpec(tuple(steps), end)
            budget -= est.t_hat


def covers_whole_tree(tree_handle: ExplorableHandle, path: PathSpec) -> bool:
    """Whether ``path`` ends at the depth-first-last vertex (counted queries)."""
    for u, j in path.steps:
        if tree_handle.child_count(u) != j + 1:
            return False
    return tree_handle.child_count(path.end) == 0


@dataclass(frozen=True)
class StageRecord:
    i: int
    m_target: int
    m_realized: int
    detect_outcome: bool
    controlled_u_count: int

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "m_target": self.m_target,
            "m_realized": self.m_realized,
            "detect_outcome": self.detect_outcome,
            "controlled_u_count": self.controlled_u_count,
        }


@dataclass
class SearchResult:
    found: bool
    stage_reached: int
    ledger: dict
    stages: list[StageRecord] = field(default_factory=list)
    paths: list[PathSpec] = field(default_factory=list)
    whole_tree_run: bool = False

    @property
    def controlled_u_count(self) -> int:
        return int(self.ledger.get("controlled_u", 0))


def whole_tree_detection_cost(T1: float, n: int, epsilon: float) -> int:
    b, r = detection_parameters(T1, n, epsilon)
    return (1 << b) * r


def search(
    tree_handle: ExplorableHandle,
    P: MarkPredicate | Iterable[int] | None,
    T1: float,
    n: int,
    epsilon: float,
    seed=None,
    *,
    cutover: bool = False,
    route: str = "szegedy",
    on_stage: Callable[[StageRecord], None] | None = None,
) -> SearchResult:
    """Doubling search over restricted trees of about ``2^i`` vertices.

    Stage ``i`` builds a path with ``m = 2^i``, ``delta = 1/2`` and failure
    ``epsilon / (2 ceil(log2 T1))`` and runs detection on the restricted
    tree with vertex bound ``1.5 * 2^i`` and the same failure.  The loop
    stops when a marked vertex is detected or the restricted tree is the
    whole tree.  With ``cutover=True`` the loop is abandoned in favour of a
    single whole-tree detection once its accumulated cost exceeds that of
    the whole-tree detection.
    """
    if T1 < 1 or n < 1:
        raise ParameterError("T1 and n must be at least 1")
    rng = _rng(seed)
    ledger = tree_handle.ledger
    logT1 = max(1, math.ceil(math.log2(T1)))
    eps_stage = epsilon / (2 * logT1)
    max_stage = logT1 + 2
    budget = whole_tree_detection_cost(T1, n, epsilon)
    start_cost = ledger.controlled_u
    stages: list[StageRecord] = []
    paths: list[PathSpec] = []
    i = 1
    while True:
        before = ledger.controlled_u
        m = 2**i
        path = generate_path(tree_handle, tree_handle.root, m, 0.5, eps_stage, rng, n=n, route=route)
        view = restricted_view(tree_handle, path)
        found = detect_marked(view, P, 1.5 * m, n, eps_stage, rng)
        rec = StageRecord(i, m, view.simulator_view()[0].vertex_count, found, ledger.controlled_u - before)
        stages.append(rec)
        paths.append(path)
        if on_stage is not None:
            on_stage(rec)
        if found:
            return SearchResult(True, i, ledger.snapshot(), stages, paths)
        if covers_whole_tree(tree_handle, path):
            return SearchResult(False, i, ledger.snapshot(), stages, paths)
        spent = ledger.controlled_u - start_cost
        if (cutover and spent > budget) or i >= max_stage:
            found = detect_marked(tree_handle, P, T1, n, epsilon, rng)
            return SearchResult(found, i, ledger.snapshot(), stages, paths, whole_tree_run=True)
        i += 1
