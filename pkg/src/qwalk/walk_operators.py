"""Edge-space walk operators as dense real matrices.

The Hilbert space has one basis vector per edge of the graph plus the
anchor edge ``e0 = (v_{V+1}, v_1)`` hanging above the root.  Edges keep the
index they have in ``dag.edges``; the anchor is the last basis vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DomainError, ParameterError
from .graph_model import EvenOddPartition, LayeredDag, PathSpec, even_odd_partition

__all__ = [
    "EdgeSpaceBasis",
    "WalkOperators",
    "GramData",
    "build_s_vector",
    "build_reflections",
    "build_gram",
    "path_restricted_reflections",
    "dump_operators",
]


@dataclass(frozen=True)
class EdgeSpaceBasis:
    """Index map between edges of the extended graph and basis vectors."""

    edges: tuple[tuple[int, int], ...]
    incident: tuple[tuple[int, ...], ...]  # incident[v]: edge indices touching v

    @classmethod
    def from_dag(cls, dag: LayeredDag) -> "EdgeSpaceBasis":
        inc: list[list[int]] = [[] for _ in range(dag.vertex_count + 1)]
        for k, (u, v) in enumerate(dag.edges):
            inc[u].append(k)
            inc[v].append(k)
        return cls(dag.edges, tuple(tuple(x) for x in inc))

    @property
    def T(self) -> int:
        return len(self.edges)

    @property
    def anchor(self) -> int:
        return len(self.edges)

    @property
    def dim(self) -> int:
        return len(self.edges) + 1

    def index(self, edge: tuple[int, int]) -> int:
        try:
            return self.edges.index(tuple(edge))
        except ValueError:
            raise DomainError(f"{edge} is not an edge") from None

    def e0(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.anchor] = 1.0
        return out


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha <= 0:
        raise ParameterError(f"alpha must be positive and finite, got {alpha}")
    return alpha


def _require_edges(dag: LayeredDag) -> None:
    if dag.edge_count == 0:
        raise DomainError("walk operators need at least one edge")


def _s_entries(basis: EdgeSpaceBasis, alpha: float, v: int, edge_idx=None):
    """Support indices and values of ``s_v`` (optionally over a sub-neighborhood)."""
    idx = list(basis.incident[v] if edge_idx is None else edge_idx)
    if v == 1:
        return idx + [basis.anchor], [alpha] * len(idx) + [1.0]
    return idx, [1.0] * len(idx)


def build_s_vector(dag: LayeredDag, basis: EdgeSpaceBasis, alpha: float, v: int) -> np.ndarray:
    """``s_root = e0 + alpha * sum(N(root))``, ``s_v = sum(N(v))`` otherwise."""
    alpha = _check_alpha(alpha)
    _require_edges(dag)
    dag._check(v)
    out = np.zeros(basis.dim)
    idx, val = _s_entries(basis, alpha, v)
    out[idx] = val
    return out


@dataclass(frozen=True)
class WalkOperators:
    """Reflections ``R_A``, ``R_B`` for one graph and one ``alpha``.

    Attributes
    ----------
    alpha : float
    R_A, R_B : ndarray, shape (T+1, T+1)
    marked_set : frozenset of int
    s_norms : dict
        ``||s_v||^2`` for every vertex with a nontrivial block.
    """

    alpha: float
    R_A: np.ndarray
    R_B: np.ndarray
    marked_set: frozenset
    s_norms: dict
    basis: EdgeSpaceBasis
    dag: LayeredDag
    partition: EvenOddPartition
    restricted: PathSpec | None = None

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def unitary(self) -> np.ndarray:
        """The walk step ``U = R_B R_A``."""
        return self.R_B @ self.R_A

    def start_state(self) -> np.ndarray:
        return self.basis.e0()

    def check_compatible(self, other: "WalkOperators") -> None:
        if self.alpha != other.alpha:
            raise ParameterError(
                f"operators built with different alpha ({self.alpha} vs {other.alpha})"
            )


def _reflection(dim: int, columns: list[tuple[list[int], list[float]]]) -> tuple[np.ndarray, list]:
    # supports are disjoint within one parity class, so blocks never overlap
    R = np.eye(dim)
    norms = []
    for idx, val in columns:
        val = np.asarray(val)
        nrm2 = float(val @ val)
        norms.append(nrm2)
        R[np.ix_(idx, idx)] -= (2.0 / nrm2) * np.outer(val, val)
    return R, norms


def _assemble(dag, alpha, marked, neighborhoods, restricted=None) -> WalkOperators:
    basis = EdgeSpaceBasis.from_dag(dag)
    part = even_odd_partition(dag)
    marked = frozenset(int(v) for v in marked)
    for v in marked:
        dag._check(v)
    s_norms = {}
    mats = []
    for group in (part.set_A, part.set_B):
        cols = []
        owners = []
        for v in group:
            if v in marked:
                continue
            idx, val = _s_entries(basis, alpha, v, neighborhoods.get(v))
            if not idx:
                continue
            cols.append((idx, val))
            owners.append(v)
        R, norms = _reflection(basis.dim, cols)
        s_norms.update(zip(owners, norms))
        mats.append(R)
    return WalkOperators(alpha, mats[0], mats[1], marked, s_norms, basis, dag, part, restricted)


def build_reflections(dag: LayeredDag, alpha: float, marked_set: Iterable[int] = ()) -> WalkOperators:
    """Build ``R_A`` and ``R_B``; marked vertices contribute identity blocks.

    ``R_A`` is the direct sum of ``D_v`` over even-layer vertices and ``R_B``
    the direct sum over odd-layer vertices.  The anchor direction belongs to
    the root's block, so ``R_B`` leaves it fixed.
    """
    alpha = _check_alpha(alpha)
    _require_edges(dag)
    return _assemble(dag, alpha, marked_set, {})


def path_restricted_reflections(
    tree: LayeredDag, path: PathSpec, alpha: float, marked_set: Iterable[int] = ()
) -> WalkOperators:
    """Reflections of the restricted tree encoded by ``path``.

    Each path vertex ``u_i`` (``i < l``) diffuses only over its parent edge and
    the edges to children up to and including ``u_{i+1}``; the end vertex
    ``u_l`` diffuses over its parent edge alone.  Every other vertex keeps its
    usual block, so the component of the anchor is exactly the restricted
    tree and the hidden parts form separate invariant blocks.
    """
    alpha = _check_alpha(alpha)
    _require_edges(tree)
    if not tree.is_tree:
        raise DomainError("path restriction is defined on trees")
    path.validate(tree)
    visible = path.visible_children(tree)
    index = {e: k for k, e in enumerate(tree.edges)}
    hoods = {}
    for u, kids in visible.items():
        hood = [index[(p, u)] for p in tree.parents(u)]
        hood += [index[(u, c)] for c in kids]
        hoods[u] = hood
    return _assemble(tree, alpha, marked_set, hoods, restricted=path)


@dataclass(frozen=True)
class GramData:
    """Incidence matrices, their column norms, and ``L = A_hat^T B_hat``.

    Columns follow the even/odd partition order (root first).
    """

    alpha: float
    mat_a: np.ndarray
    mat_b: np.ndarray
    a_vec: np.ndarray
    b_vec: np.ndarray
    partition: EvenOddPartition
    d1: int
    A_hat: np.ndarray = field(repr=False)
    B_hat: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)

    def unmarked(self, marked: Iterable[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(L, keep_A, keep_B)`` with marked rows and columns removed."""
        marked = set(marked)
        keep_a = np.array([v not in marked for v in self.partition.set_A], dtype=bool)
        keep_b = np.array([v not in marked for v in self.partition.set_B], dtype=bool)
        return self.L[np.ix_(keep_a, keep_b)], keep_a, keep_b


def build_gram(dag: LayeredDag, alpha: float) -> GramData:
    """Gram data of the normalized ``s`` vectors.

    ``mat_a`` holds ``s_v / alpha`` for the root (so its anchor entry is
    ``1/alpha``) and ``s_v`` for the other even vertices; ``mat_b`` holds the
    odd-vertex ``s_v``.  ``a[root] = sqrt(d_1 + alpha**-2)`` and
    ``a[v] = sqrt(d_v)``, ``b[v] = sqrt(d_v)``.
    """
    alpha = _check_alpha(alpha)
    _require_edges(dag)
    part = even_odd_partition(dag)
    basis = EdgeSpaceBasis.from_dag(dag)
    deg = dag.degrees
    mat_a = np.zeros((basis.dim, part.A))
    mat_b = np.zeros((basis.dim, part.B))
    for j, v in enumerate(part.set_A):
        mat_a[list(basis.incident[v]), j] = 1.0
    mat_a[basis.anchor, 0] = 1.0 / alpha
    for j, v in enumerate(part.set_B):
        mat_b[list(basis.incident[v]), j] = 1.0
    d1 = int(deg[0])
    a_vec = np.sqrt(deg[np.array(part.set_A) - 1].astype(float))
    a_vec[0] = np.sqrt(d1 + alpha**-2)
    b_vec = np.sqrt(deg[np.array(part.set_B, dtype=int) - 1].astype(float))
    A_hat = mat_a / a_vec
    B_hat = mat_b / b_vec if part.B else mat_b
    L = A_hat.T @ B_hat
    return GramData(alpha, mat_a, mat_b, a_vec, b_vec, part, d1, A_hat, B_hat, L)


def dump_operators(ops: WalkOperators, prefix: str | Path) -> tuple[Path, Path, Path]:
    """Write ``R_A``/``R_B`` as ``.npy`` files plus a JSON sidecar."""
    prefix = Path(prefix)
    pa = prefix.with_name(prefix.name + "_RA.npy")
    pb = prefix.with_name(prefix.name + "_RB.npy")
    pj = prefix.with_name(prefix.name + ".json")
    np.save(pa, ops.R_A)
    np.save(pb, ops.R_B)
    meta = {
        "alpha": ops.alpha,
        "dimension": ops.dim,
        "marked": sorted(ops.marked_set),
        "edges": [list(e) for e in ops.basis.edges],
        "anchor_index": ops.basis.anchor,
        "graph_sha256": ops.dag.fingerprint,
    }
    pj.write_text(json.dumps(meta, indent=2) + "\n")
    return pa, pb, pj
