"""Rooted trees and layered DAGs with a query-counting exploration interface.

Vertices are dense integers ``1..V`` and the root is always vertex 1.  An
edge ``(u, v)`` means ``u`` sits one layer above ``v``.  Children keep the
order in which edges were supplied; that order is the visiting order of the
classical depth-first strategy.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "LayeredDag",
    "EvenOddPartition",
    "QueryLedger",
    "ExplorableHandle",
    "GraphFile",
    "BinarizedTree",
    "even_odd_partition",
    "binarize",
    "random_tree",
    "random_layered_dag",
    "random_formula",
    "dfs_order",
    "single_vertex",
    "path_graph",
    "complete_binary_tree",
    "PathSpec",
]

QUERY_KINDS = (
    "children_count",
    "child_fetch",
    "parent_count",
    "parent_fetch",
    "node_type",
    "leaf_value",
    "marked",
)


class LayeredDag:
    """Immutable rooted layered DAG.

    Parameters
    ----------
    vertex_count : int
        Number of vertices ``V``; ids are ``1..V`` and the root is 1.
    edges : sequence of (int, int)
        Directed edges ``(parent, child)``.  For each parent the children
        appear in the order given here.

    Raises
    ------
    DomainError
        If an id is out of range, an edge is duplicated, a vertex is not
        reachable from the root, or an edge skips or reverses a layer.
    """

    __slots__ = (
        "_V",
        "_edges",
        "_children",
        "_parents",
        "_layer",
        "_depth",
        "_fingerprint",
        "_is_tree",
    )

    def __init__(self, vertex_count: int, edges: Iterable[Sequence[int]]):
        V = int(vertex_count)
        if V < 1:
            raise DomainError(f"vertex_count must be positive, got {vertex_count}")
        edge_list = tuple((int(u), int(v)) for u, v in edges)
        children: list[list[int]] = [[] for _ in range(V + 1)]
        parents: list[list[int]] = [[] for _ in range(V + 1)]
        seen = set()
        for u, v in edge_list:
            if not (1 <= u <= V and 1 <= v <= V):
                raise DomainError(f"edge ({u}, {v}) references a vertex outside 1..{V}")
            if u == v:
                raise DomainError(f"self-loop at vertex {u}")
            if (u, v) in seen:
                raise DomainError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            children[u].append(v)
            parents[v].append(u)
        if parents[1]:
            raise DomainError("the root (vertex 1) must not have incoming edges")

        layer = [-1] * (V + 1)
        layer[1] = 0
        queue = deque([1])
        while queue:
            u = queue.popleft()
            for v in children[u]:
                if layer[v] < 0:
                    layer[v] = layer[u] + 1
                    queue.append(v)
        missing = [v for v in range(1, V + 1) if layer[v] < 0]
        if missing:
            raise DomainError(f"vertices not reachable from the root: {missing[:10]}")
        for u, v in edge_list:
            if layer[v] != layer[u] + 1:
                raise DomainError(
                    f"edge ({u}, {v}) joins layers {layer[u]} and {layer[v]}; "
                    "edges must go down exactly one layer"
                )

        self._V = V
        self._edges = edge_list
        self._children = tuple(tuple(c) for c in children)
        self._parents = tuple(tuple(p) for p in parents)
        self._layer = tuple(layer)
        self._depth = max(layer[1:])
        self._is_tree = len(edge_list) == V - 1
        self._fingerprint: str | None = None

    # -- basic quantities -------------------------------------------------
    @property
    def vertex_count(self) -> int:
        return self._V

    @property
    def root(self) -> int:
        return 1

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def is_tree(self) -> bool:
        return self._is_tree

    @property
    def vertices(self) -> range:
        return range(1, self._V + 1)

    def layer(self, v: int) -> int:
        self._check(v)
        return self._layer[v]

    @property
    def layers(self) -> np.ndarray:
        """Layer of every vertex, indexed ``0..V-1`` for ids ``1..V``."""
        return np.asarray(self._layer[1:], dtype=int)

    def children(self, v: int) -> tuple[int, ...]:
        self._check(v)
        return self._children[v]

    def parents(self, v: int) -> tuple[int, ...]:
        self._check(v)
        return self._parents[v]

    def degree(self, v: int) -> int:
        """Total degree (in plus out) of ``v``; the anchor edge is not counted."""
        self._check(v)
        return len(self._children[v]) + len(self._parents[v])

    @property
    def degrees(self) -> np.ndarray:
        return np.array(
            [len(self._children[v]) + len(self._parents[v]) for v in range(1, self._V + 1)],
            dtype=int,
        )

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self._V > 1 else 0

    @property
    def fingerprint(self) -> str:
        """SHA-256 of the canonical ``(V, edges)`` encoding."""
        if self._fingerprint is None:
            payload = json.dumps([self._V, self._edges], separators=(",", ":"))
            self._fingerprint = hashlib.sha256(payload.encode()).hexdigest()
        return self._fingerprint

    def _check(self, v: int) -> None:
        if not (isinstance(v, (int, np.integer)) and 1 <= v <= self._V):
            raise DomainError(f"unknown vertex id {v!r}")

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, LayeredDag)
            and self._V == other._V
            and self._edges == other._edges
        )

    def __hash__(self) -> int:
        return hash(self.fingerprint)

    def __repr__(self) -> str:
        kind = "tree" if self._is_tree else "dag"
        return f"LayeredDag({kind}, V={self._V}, T={self.edge_count}, depth={self._depth})"

    def subtree_sizes(self) -> np.ndarray:
        """Vertex count of ``T(v)`` for every vertex of a tree (index ``v``)."""
        if not self._is_tree:
            raise DomainError("subtree sizes are defined for trees only")
        size = np.ones(self._V + 1, dtype=int)
        size[0] = 0
        for v in sorted(self.vertices, key=lambda x: -self._layer[x]):
            for c in self._children[v]:
                size[v] += size[c]
        return size


def single_vertex() -> LayeredDag:
    return LayeredDag(1, [])


def path_graph(vertex_count: int) -> LayeredDag:
    """Path ``v1 - v2 - ... - vV`` rooted at ``v1``."""
    return LayeredDag(vertex_count, [(i, i + 1) for i in range(1, vertex_count)])


def complete_binary_tree(depth: int) -> LayeredDag:
    """Complete binary tree with ``2**(depth+1) - 1`` vertices in heap order."""
    V = 2 ** (depth + 1) - 1
    edges = []
    for u in range(1, V + 1):
        for c in (2 * u, 2 * u + 1):
            if c <= V:
                edges.append((u, c))
    return LayeredDag(V, edges)


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class EvenOddPartition:
    """Vertices at even (``set_A``) and odd (``set_B``) distance from the root.

    Both tuples are sorted by id, so the root is ``set_A[0]``.
    """

    set_A: tuple[int, ...]
    set_B: tuple[int, ...]

    @property
    def A(self) -> int:
        return len(self.set_A)

    @property
    def B(self) -> int:
        return len(self.set_B)

    def position(self) -> dict[int, tuple[str, int]]:
        """Map vertex id to ``("A", i)`` or ``("B", j)``."""
        out = {v: ("A", i) for i, v in enumerate(self.set_A)}
        out.update({v: ("B", j) for j, v in enumerate(self.set_B)})
        return out


def even_odd_partition(dag: LayeredDag) -> EvenOddPartition:
    lay = dag.layers
    ids = np.arange(1, dag.vertex_count + 1)
    return EvenOddPartition(
        tuple(int(v) for v in ids[lay % 2 == 0]),
        tuple(int(v) for v in ids[lay % 2 == 1]),
    )


# ---------------------------------------------------------------------------
@dataclass
class QueryLedger:
    """Per-kind query counters plus the controlled-U application count."""

    counts: dict[str, int] = field(default_factory=lambda: dict.fromkeys(QUERY_KINDS, 0))
    controlled_u: int = 0

    def charge(self, kind: str, amount: int = 1) -> None:
        if kind not in self.counts:
            raise KeyError(f"unknown query kind {kind!r}")
        if amount < 0:
            raise ValueError("ledger charges must be nonnegative")
        self.counts[kind] += int(amount)

    def charge_controlled_u(self, amount: int) -> None:
        if amount < 0:
            raise ValueError("ledger charges must be nonnegative")
        self.controlled_u += int(amount)

    @property
    def total_queries(self) -> int:
        return sum(self.counts.values())

    def snapshot(self) -> dict:
        return {**self.counts, "controlled_u": self.controlled_u}

    def copy(self) -> "QueryLedger":
        return QueryLedger(dict(self.counts), self.controlled_u)


class ExplorableHandle:
    """Black-box access to a graph in which every structural read is counted.

    A handle may expose only part of the underlying graph: ``root`` picks the
    vertex treated as root and ``visible`` overrides the child list of
    selected vertices (used for the restricted trees of backtracking).
    Annotations (marks, gates, leaf values) travel with the handle.
    """

    def __init__(
        self,
        dag: LayeredDag,
        ledger: QueryLedger | None = None,
        *,
        marked: Iterable[int] = (),
        gates: Mapping[int, str] | None = None,
        leaf_values: Mapping[int, int] | None = None,
        root: int = 1,
        visible: Mapping[int, tuple[int, ...]] | None = None,
    ):
        self._dag = dag
        self.ledger = ledger if ledger is not None else QueryLedger()
        self._marked = frozenset(int(v) for v in marked)
        self._gates = dict(gates or {})
        self._leaf_values = dict(leaf_values or {})
        dag._check(root)
        self._root = int(root)
        self._visible = dict(visible or {})
        self._view_cache: tuple[LayeredDag, tuple[int, ...]] | None = None

    @property
    def root(self) -> int:
        return self._root

    def _kids(self, v: int) -> tuple[int, ...]:
        got = self._visible.get(v)
        return self._dag.children(v) if got is None else got

    # -- counted queries --------------------------------------------------
    def child_count(self, v: int) -> int:
        self._dag._check(v)
        self.ledger.charge("children_count")
        return len(self._kids(v))

    def child(self, v: int, i: int) -> int:
        kids = self._kids(v)
        if not 0 <= i < len(kids):
            raise DomainError(f"vertex {v} has no child with index {i}")
        self.ledger.charge("child_fetch")
        return kids[i]

    def children(self, v: int) -> list[int]:
        """Children of ``v`` in visiting order; one count query plus one fetch each."""
        self._dag._check(v)
        kids = self._kids(v)
        self.ledger.charge("children_count")
        self.ledger.charge("child_fetch", len(kids))
        return list(kids)

    def parents(self, v: int) -> list[int]:
        self._dag._check(v)
        ps = self._dag.parents(v)
        self.ledger.charge("parent_count")
        self.ledger.charge("parent_fetch", len(ps))
        return list(ps)

    def is_leaf(self, v: int) -> bool:
        return self.child_count(v) == 0

    def node_type(self, v: int) -> str:
        """``"AND"``/``"OR"`` for gates, ``"LEAF"`` for leaves."""
        self._dag._check(v)
        self.ledger.charge("node_type")
        if not self._kids(v):
            return "LEAF"
        try:
            return self._gates[v]
        except KeyError:
            raise DomainError(f"internal vertex {v} carries no gate label") from None

    def leaf_value(self, v: int) -> int:
        self._dag._check(v)
        self.ledger.charge("leaf_value")
        try:
            return int(self._leaf_values[v])
        except KeyError:
            raise DomainError(f"vertex {v} carries no leaf value") from None

    def is_marked(self, v: int) -> bool:
        self._dag._check(v)
        self.ledger.charge("marked")
        return v in self._marked

    # -- derived handles ----------------------------------------------------
    def _derive(self, *, root=None, visible=None, ledger=None) -> "ExplorableHandle":
        merged = dict(self._visible)
        if visible:
            merged.update(visible)
        return ExplorableHandle(
            self._dag,
            self.ledger if ledger is None else ledger,
            marked=self._marked,
            gates=self._gates,
            leaf_values=self._leaf_values,
            root=self._root if root is None else root,
            visible=merged,
        )

    def subtree(self, v: int) -> "ExplorableHandle":
        """Handle rooted at ``v`` that shares this handle's ledger."""
        self._dag._check(v)
        return self._derive(root=v)

    def restrict(self, visible: Mapping[int, Sequence[int]]) -> "ExplorableHandle":
        """Handle whose listed vertices expose only the given children."""
        return self._derive(visible={int(k): tuple(c) for k, c in visible.items()})

    def with_ledger(self, ledger: QueryLedger) -> "ExplorableHandle":
        return self._derive(ledger=ledger)

    # -- simulator side ------------------------------------------------------
    def simulator_view(self) -> tuple[LayeredDag, tuple[int, ...]]:
        """Materialize the visible graph for operator construction.

        This is what a quantum circuit would touch implicitly through its
        local diffusions; it is not charged to the ledger (the controlled-U
        count is the cost unit there).  Vertices are renumbered in BFS order
        from the handle's root.

        Returns
        -------
        dag : LayeredDag
            The visible part, rooted at vertex 1.
        origin : tuple of int
            ``origin[k - 1]`` is the underlying id of new vertex ``k``.
        """
        if self._view_cache is None:
            new_id = {self._root: 1}
            order = [self._root]
            edges = []
            head = 0
            while head < len(order):
                u = order[head]
                head += 1
                for c in self._kids(u):
                    if c not in new_id:
                        new_id[c] = len(order) + 1
                        order.append(c)
                    edges.append((new_id[u], new_id[c]))
            self._view_cache = (LayeredDag(len(order), edges), tuple(order))
        return self._view_cache

    def view_marked(self) -> frozenset[int]:
        """Marked vertices of the materialized view, in view numbering (uncharged)."""
        _, origin = self.simulator_view()
        return frozenset(k + 1 for k, v in enumerate(origin) if v in self._marked)

    @property
    def underlying(self) -> LayeredDag:
        return self._dag


# ---------------------------------------------------------------------------
@dataclass
class GraphFile:
    """A graph plus optional marks, gate labels and leaf values (JSON format)."""

    dag: LayeredDag
    marked: frozenset[int] = frozenset()
    gates: dict[int, str] = field(default_factory=dict)
    leaf_values: dict[int, int] = field(default_factory=dict)

    def handle(self, ledger: QueryLedger | None = None) -> ExplorableHandle:
        return ExplorableHandle(
            self.dag, ledger, marked=self.marked, gates=self.gates, leaf_values=self.leaf_values
        )

    def to_dict(self) -> dict:
        return {
            "vertices": self.dag.vertex_count,
            "root": 1,
            "edges": [list(e) for e in self.dag.edges],
            "marked": sorted(self.marked),
            "gates": {str(k): v for k, v in sorted(self.gates.items())},
            "leaf_values": {str(k): int(v) for k, v in sorted(self.leaf_values.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "GraphFile":
        try:
            V = int(data["vertices"])
            root = int(data.get("root", 1))
            raw_edges = [(int(u), int(v)) for u, v in data["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed graph document: {exc}") from exc
        if root != 1:
            raise DomainError(f"root must be vertex 1, got {root}")
        # children are canonicalized to ascending id
        dag = LayeredDag(V, sorted(raw_edges))
        marked = frozenset(int(v) for v in data.get("marked", []))
        gates = {int(k): str(g).upper() for k, g in data.get("gates", {}).items()}
        leaf_values = {int(k): int(b) for k, b in data.get("leaf_values", {}).items()}
        for v in list(marked) + list(gates) + list(leaf_values):
            dag._check(v)
        bad = {g for g in gates.values() if g not in ("AND", "OR")}
        if bad:
            raise DomainError(f"unknown gate labels {sorted(bad)}")
        if any(b not in (0, 1) for b in leaf_values.values()):
            raise DomainError("leaf values must be 0 or 1")
        return cls(dag, marked, gates, leaf_values)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GraphFile":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
def _renumber_bfs(children: Mapping[int, Sequence[int]], root: int):
    """BFS renumbering of a tree given as a child map; returns (dag, origin)."""
    new_id = {root: 1}
    order = [root]
    edges = []
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        for c in children.get(u, ()):
            new_id[c] = len(order) + 1
            order.append(c)
            edges.append((new_id[u], new_id[c]))
    return LayeredDag(len(order), edges), tuple(order)


@dataclass(frozen=True)
class BinarizedTree:
    """Result of :func:`binarize`.

    ``origin[k-1]`` is the original id of new vertex ``k`` for original
    vertices and 0 for inserted helpers; ``helper_of[k]`` names the original
    vertex whose children a helper groups (so it inherits that gate).
    """

    dag: LayeredDag
    origin: tuple[int, ...]
    helper_of: dict[int, int]

    def carry_formula(self, gates: Mapping[int, str], leaf_values: Mapping[int, int]) -> GraphFile:
        new_gates = {}
        new_leaves = {}
        for k, o in enumerate(self.origin, start=1):
            src = o if o else self.helper_of[k]
            if self.dag.children(k):
                new_gates[k] = gates[src]
            elif src in leaf_values:
                new_leaves[k] = leaf_values[src]
        return GraphFile(self.dag, frozenset(), new_gates, new_leaves)


def binarize(tree: LayeredDag) -> BinarizedTree:
    """Replace every vertex with ``k > 2`` children by a balanced binary gadget.

    The ``k`` children are split in halves recursively; a half with more than
    one child hangs below a fresh helper vertex.  A vertex of out-degree ``k``
    therefore spreads its children over ``ceil(log2 k)`` layers.
    """
    if not tree.is_tree:
        raise DomainError("binarize requires a tree")
    if all(len(tree.children(v)) <= 2 for v in tree.vertices):
        return BinarizedTree(tree, tuple(tree.vertices), {})
    next_id = tree.vertex_count + 1
    kids: dict[int, list[int]] = {}
    helper_of: dict[int, int] = {}

    def attach(parent: int, group: Sequence[int], owner: int) -> None:
        nonlocal next_id
        if len(group) <= 2:
            kids[parent] = list(group)
            return
        half = (len(group) + 1) // 2
        slots = []
        for part in (group[:half], group[half:]):
            if len(part) == 1:
                slots.append(part[0])
            else:
                h = next_id
                next_id += 1
                helper_of[h] = owner
                attach(h, part, owner)
                slots.append(h)
        kids[parent] = slots

    for v in tree.vertices:
        attach(v, tree.children(v), v)
    dag, order = _renumber_bfs(kids, 1)
    origin = tuple(o if o <= tree.vertex_count else 0 for o in order)
    helpers = {k: helper_of[o] for k, o in enumerate(order, start=1) if o > tree.vertex_count}
    return BinarizedTree(dag, origin, helpers)


def _max_vertices(depth_bound: int, branching) -> float:
    if branching == "full-binary":
        return 2 ** (depth_bound + 1) - 1
    b = int(branching)
    if b == 1:
        return depth_bound + 1
    return (b ** (depth_bound + 1) - 1) / (b - 1)


def random_tree(
    vertex_budget: int,
    depth_bound: int,
    branching: int | str = 2,
    seed: int | np.random.Generator | None = None,
) -> LayeredDag:
    """Random rooted tree with exactly ``vertex_budget`` vertices.

    Parameters
    ----------
    vertex_budget : int
        Number of vertices.
    depth_bound : int
        Maximum layer.
    branching : int or ``"full-binary"``
        Maximum number of children per vertex, or ``"full-binary"`` for trees
        in which every internal vertex has exactly two children (the budget
        must then be odd).
    seed : int or Generator

    Notes
    -----
    Vertices are attached one at a time (two at a time for full-binary
    trees) below a uniformly chosen vertex that still has room, then the
    tree is renumbered in BFS order.
    """
    rng = np.random.default_rng(seed)
    V = int(vertex_budget)
    if V < 1 or depth_bound < 0:
        raise DomainError("vertex_budget must be positive and depth_bound nonnegative")
    full = branching == "full-binary"
    if not full and int(branching) < 1 and V > 1:
        raise DomainError("branching must be at least 1")
    if full and V % 2 == 0:
        raise DomainError("full-binary trees have an odd number of vertices")
    if V > _max_vertices(depth_bound, branching):
        raise DomainError(
            f"no tree with {V} vertices has depth <= {depth_bound} and branching {branching}"
        )
    cap = 2 if full else int(branching) if V > 1 else 0
    kids: dict[int, list[int]] = {1: []}
    layer = {1: 0}
    open_ = [1] if depth_bound > 0 else []
    count = 1
    step = 2 if full else 1
    while count < V:
        k = int(rng.integers(len(open_)))
        u = open_[k]
        for _ in range(step):
            count += 1
            kids[u].append(count)
            kids[count] = []
            layer[count] = layer[u] + 1
            if layer[count] < depth_bound:
                open_.append(count)
        if len(kids[u]) >= cap:
            open_[k] = open_[-1]
            open_.pop()
    dag, _ = _renumber_bfs(kids, 1)
    return dag


def random_layered_dag(
    vertex_budget: int,
    depth_bound: int,
    branching: int = 2,
    extra_edges: int = 3,
    seed: int | np.random.Generator | None = None,
) -> LayeredDag:
    """Random tree plus up to ``extra_edges`` additional consecutive-layer edges."""
    rng = np.random.default_rng(seed)
    tree = random_tree(vertex_budget, depth_bound, branching, rng)
    lay = tree.layers
    existing = set(tree.edges)
    by_layer: dict[int, list[int]] = {}
    for v in tree.vertices:
        by_layer.setdefault(int(lay[v - 1]), []).append(v)
    candidates = [
        (u, w)
        for k in range(tree.depth)
        for u in by_layer.get(k, [])
        for w in by_layer.get(k + 1, [])
        if (u, w) not in existing
    ]
    if candidates and extra_edges > 0:
        pick = rng.choice(len(candidates), size=min(extra_edges, len(candidates)), replace=False)
        added = [candidates[i] for i in sorted(pick)]
    else:
        added = []
    return LayeredDag(tree.vertex_count, sorted(list(tree.edges) + added))


def random_formula(
    leaf_count: int,
    depth_bound: int | None = None,
    seed: int | np.random.Generator | None = None,
    p_one: float = 0.5,
) -> GraphFile:
    """Random binary AND-OR formula with ``leaf_count`` leaves."""
    rng = np.random.default_rng(seed)
    V = 2 * int(leaf_count) - 1
    if depth_bound is None:
        depth_bound = V
    tree = random_tree(V, depth_bound, "full-binary", rng)
    gates = {}
    leaves = {}
    for v in tree.vertices:
        if tree.children(v):
            gates[v] = "AND" if rng.random() < 0.5 else "OR"
        else:
            leaves[v] = int(rng.random() < p_one)
    return GraphFile(tree, frozenset(), gates, leaves)


def dfs_order(tree: LayeredDag | ExplorableHandle) -> list[int]:
    """Depth-first preorder following the children order.

    A handle is explored through counted queries starting at its root.
    """
    if isinstance(tree, ExplorableHandle):
        kids = tree.children
        root = tree.root
    else:
        if not tree.is_tree:
            raise DomainError("dfs_order requires a tree")
        kids = tree.children
        root = tree.root
    out = []
    stack = [root]
    while stack:
        v = stack.pop()
        out.append(v)
        stack.extend(reversed(kids(v)))
    return out


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PathSpec:
    """Root-anchored path ``u_0 -> u_1 -> ... -> u_l`` in a tree.

    ``steps[i] = (u_i, j_i)`` records that ``u_{i+1}`` is child number
    ``j_i`` (0-based, visiting order) of ``u_i``; ``end`` is ``u_l``.  The
    path encodes the restricted tree made of the path vertices and the full
    subtrees of every child visited before the next path vertex; the
    children of ``u_l`` are left out.
    """

    steps: tuple[tuple[int, int], ...] = ()
    end: int = 1

    @classmethod
    def from_indices(cls, tree: LayeredDag, indices: Sequence[int], root: int = 1) -> "PathSpec":
        steps = []
        v = root
        for j in indices:
            kids = tree.children(v)
            if not 0 <= j < len(kids):
                raise DomainError(f"vertex {v} has no child with index {j}")
            steps.append((v, int(j)))
            v = kids[j]
        return cls(tuple(steps), v)

    @classmethod
    def to_vertex(cls, tree: LayeredDag, target: int) -> "PathSpec":
        """Path from the root of ``tree`` down to ``target``."""
        if not tree.is_tree:
            raise DomainError("paths are defined on trees")
        chain = [target]
        while chain[-1] != 1:
            chain.append(tree.parents(chain[-1])[0])
        chain.reverse()
        steps = tuple(
            (u, tree.children(u).index(w)) for u, w in zip(chain[:-1], chain[1:])
        )
        return cls(steps, target)

    @property
    def root(self) -> int:
        return self.steps[0][0] if self.steps else self.end

    @property
    def length(self) -> int:
        return len(self.steps)

    def vertices(self, tree: LayeredDag) -> tuple[int, ...]:
        self.validate(tree)
        return tuple(u for u, _ in self.steps) + (self.end,)

    def validate(self, tree: LayeredDag, root: int = 1) -> None:
        if self.root != root:
            raise DomainError(f"path starts at {self.root}, expected the root {root}")
        for k, (u, j) in enumerate(self.steps):
            kids = tree.children(u)
            if not 0 <= j < len(kids):
                raise DomainError(f"vertex {u} has no child with index {j}")
            nxt = self.steps[k + 1][0] if k + 1 < len(self.steps) else self.end
            if kids[j] != nxt:
                raise DomainError(f"path step {u} -> {nxt} is not child {j} of {u}")

    def visible_children(self, tree: LayeredDag) -> dict[int, tuple[int, ...]]:
        """Child lists that realize the restricted tree on path vertices."""
        self.validate(tree, self.root)
        vis = {u: tree.children(u)[: j + 1] for u, j in self.steps}
        vis[self.end] = ()
        return vis

    def to_dict(self) -> dict:
        return {"steps": [list(s) for s in self.steps], "end": self.end}
