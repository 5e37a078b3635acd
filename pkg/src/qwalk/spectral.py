"""Spectrum of the walk step, the matrices K, N, N-tilde, and resistances.

Two independent routes give the start-state spectrum of ``U = R_B R_A``:

* ``"szegedy"``: singular value decomposition of ``L`` (built over the
  unmarked vertices).  A singular value ``sigma`` in (0, 1) yields the
  eigenphase pair ``+-2 arccos(sigma)``; ``sigma = 0`` yields phase ``pi``.
* ``"dense"``: complex Schur decomposition of the dense matrix ``U``.

The first is fast and is what the algorithms use; the second is the check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError, PropertyViolation
from .graph_model import LayeredDag
from .phase_estimation import Spectrum
from .walk_operators import GramData, WalkOperators, build_gram, build_reflections

__all__ = [
    "SpectralSummary",
    "AbsorbingWalk",
    "ResistanceData",
    "VerificationReport",
    "eigendecompose_walk",
    "start_spectrum",
    "szegedy_spectrum",
    "dense_spectrum",
    "verify_one_eigenspace",
    "verify_szegedy_correspondence",
    "fundamental_matrix",
    "verify_K_identity",
    "verify_K_bounds",
    "verify_N_corners",
    "verify_tree_formula",
    "verify_dag_bound",
    "verify_harmonic_columns",
    "verify_top_overlap",
    "effective_resistance",
    "harmonic_potential",
    "resistance_data",
    "top_pair_overlap",
    "k_matrix",
    "theta_min_from_gram",
]

ZERO_PHASE_TOL = 1e-8
PAIR_TOL = 1e-8
SIGMA_ZERO_TOL = 1e-7


@dataclass
class VerificationReport:
    """Outcome of a numerical property check (``max_violation`` is 0 when exact)."""

    lemma: str
    instances: int
    max_violation: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "instances": self.instances,
            "max_violation": float(self.max_violation),
            "pass": bool(self.passed),
        }

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(
            self.lemma,
            self.instances + other.instances,
            max(self.max_violation, other.max_violation),
            self.passed and other.passed,
        )

    def raise_if_failed(self) -> "VerificationReport":
        if not self.passed:
            raise PropertyViolation(
                f"{self.lemma}: max violation {self.max_violation:.3g} ({self.details})"
            )
        return self


def _report(lemma: str, violation: float, tol: float, **details) -> VerificationReport:
    violation = float(violation)
    return VerificationReport(lemma, 1, violation, bool(violation <= tol), details)


# ---------------------------------------------------------------------------
def k_matrix(gram: GramData) -> np.ndarray:
    """``K = (I - L L^T)^{-1}``."""
    A = gram.L.shape[0]
    M = np.eye(A) - gram.L @ gram.L.T
    try:
        return scipy.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"I - L L^T is singular: {exc}") from exc


def _svd(L: np.ndarray):
    try:
        return scipy.linalg.svd(L, full_matrices=True, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        try:
            return scipy.linalg.svd(L, full_matrices=True, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"SVD of L failed: {exc}") from exc


def _padded_sigma(L: np.ndarray):
    """Left singular vectors (all of them) and matching singular values."""
    U, s, _ = _svd(L)
    sig = np.zeros(L.shape[0])
    sig[: s.size] = s
    return U, np.clip(sig, 0.0, 1.0)


def theta_min_from_gram(gram: GramData) -> float:
    """``theta_min = 2 arccos(sigma_max(L))``."""
    s = scipy.linalg.svdvals(gram.L) if gram.L.size else np.zeros(1)
    return 2.0 * math.acos(min(1.0, float(s.max())))


@lru_cache(maxsize=1024)
def _gram_cached(dag: LayeredDag, alpha: float) -> GramData:
    return build_gram(dag, alpha)


@lru_cache(maxsize=1024)
def _szegedy_cached(dag: LayeredDag, alpha: float, marked: frozenset) -> Spectrum:
    if dag.edge_count == 0:
        # only the anchor edge: D_root = -1 there unless the root is marked
        return Spectrum([0.0 if 1 in marked else math.pi], [1.0])
    if 1 in marked:
        return Spectrum([0.0], [1.0])
    gram = _gram_cached(dag, alpha)
    L, _, _ = gram.unmarked(marked)
    if L.shape[1] == 0:
        U = np.eye(L.shape[0])
        sig = np.zeros(L.shape[0])
    else:
        U, sig = _padded_sigma(L)
    c2 = (U[0, :] ** 2) / (1.0 + alpha * alpha * gram.d1)
    phases = []
    weights = []
    for s, w in zip(sig, c2):
        if w < 1e-300:
            continue
        if s <= SIGMA_ZERO_TOL:
            phases.append(math.pi)
            weights.append(w)
        elif s >= 1.0:
            phases.append(0.0)
            weights.append(w)
        else:
            th = 2.0 * math.acos(s)
            sin2 = math.sin(th / 2.0) ** 2
            phases += [th, -th]
            weights += [w / (2.0 * sin2)] * 2
    idle = 1.0 - sum(weights)
    if idle > 1e-9:
        phases.append(0.0)
        weights.append(idle)
    return Spectrum(phases, weights)


def szegedy_spectrum(dag: LayeredDag, alpha: float, marked: Iterable[int] = ()) -> Spectrum:
    """Start-state (``|e0>``) spectrum of ``R_B R_A`` from the SVD of ``L``.

    Results are cached by graph fingerprint, ``alpha`` and marked set.
    """
    return _szegedy_cached(dag, float(alpha), frozenset(int(v) for v in marked))


def dense_spectrum(ops: WalkOperators) -> Spectrum:
    """Start-state spectrum by Schur decomposition of the dense walk step."""
    return Spectrum.from_unitary(ops.unitary, ops.start_state(), check=False)


def start_spectrum(
    dag: LayeredDag, alpha: float, marked: Iterable[int] = (), route: str = "szegedy"
) -> Spectrum:
    """Spectrum of ``|e0>`` under the (marked) walk step via either route."""
    if route == "szegedy":
        return szegedy_spectrum(dag, alpha, marked)
    if route == "dense":
        if dag.edge_count == 0:
            return szegedy_spectrum(dag, alpha, marked)
        return dense_spectrum(build_reflections(dag, alpha, marked))
    raise DomainError(f"unknown spectrum route {route!r}")


# ---------------------------------------------------------------------------
@dataclass
class SpectralSummary:
    """Eigenstructure of ``R_B R_A`` together with ``L``-side quantities."""

    eigenphases: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    theta_min: float
    lambda_L: float
    K: np.ndarray = field(repr=False)
    lambda_K: float
    q2_overlap: float
    top_multiplicity: int
    singular_values: np.ndarray = field(repr=False)

    def paired(self, tol: float = PAIR_TOL) -> bool:
        """Whether phases off ``{0, pi}`` come in ``+-`` pairs."""
        ph = self.eigenphases
        inner = ph[(np.abs(ph) > ZERO_PHASE_TOL) & (np.pi - np.abs(ph) > 2e-7)]
        pos = np.sort(inner[inner > 0])
        neg = np.sort(-inner[inner < 0])
        return pos.size == neg.size and bool(np.all(np.abs(pos - neg) <= tol))


def eigendecompose_walk(ops: WalkOperators, gram: GramData | None = None) -> SpectralSummary:
    """Dense eigendecomposition of ``R_B R_A`` plus ``L``, ``K`` and top-pair overlap data."""
    U = ops.unitary
    try:
        T, Z = scipy.linalg.schur(U.astype(complex), output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"Schur decomposition of the walk failed: {exc}") from exc
    lam = np.diag(T)
    if np.abs(np.abs(lam) - 1.0).max() > 1e-8:
        raise NumericError("walk eigenvalues are not unit modulus")
    phases = np.angle(lam)
    nz = np.abs(phases)[np.abs(phases) > ZERO_PHASE_TOL]
    theta_min = float(nz.min()) if nz.size else 0.0
    if gram is None:
        gram = _gram_cached(ops.dag, ops.alpha)
    L, _, _ = gram.unmarked(ops.marked_set)
    sv = scipy.linalg.svdvals(L) if L.size else np.zeros(0)
    lam_L = float(sv.max()) if sv.size else 0.0
    K = k_matrix(gram)
    lam_K = float(scipy.linalg.eigvalsh(K)[-1])
    overlap, mult = _top_overlap(gram)
    return SpectralSummary(phases, Z, theta_min, lam_L, K, lam_K, overlap, mult, sv)


def _top_overlap(gram: GramData, tol: float = 1e-9) -> tuple[float, int]:
    U, sig = _padded_sigma(gram.L)
    top = sig[0]
    sel = np.abs(sig - top) <= tol
    c = U[0, sel] / math.sqrt(1.0 + gram.alpha**2 * gram.d1)
    val = math.sqrt(float(np.sum(c**2)) / (1.0 - top * top))
    return val, int(sel.sum())


def top_pair_overlap(
    gram: GramData, summary: SpectralSummary | None = None, *, n: int | None = None, check: bool = False
) -> float:
    """``<e0|q2>`` for ``q2 = (a~ - lambda_L b~) / sqrt(1 - lambda_L^2)``.

    ``a~ = A_hat u`` and ``b~ = B_hat v`` come from the top singular pair of
    ``L`` with ``u`` taken nonnegative.  If the top singular value is
    repeated, the norm of the projection of ``|e0>`` onto the span of all
    top ``q2`` vectors is returned instead.

    With ``check=True`` and ``alpha >= sqrt(2n)`` a value below 2/3 raises
    :class:`PropertyViolation`.
    """
    val = summary.q2_overlap if summary is not None else _top_overlap(gram)[0]
    if check:
        if n is None:
            raise DomainError("n is required for the overlap check")
        if gram.alpha >= math.sqrt(2 * n) - 1e-12 and val < 2.0 / 3.0 - 1e-12:
            raise PropertyViolation(f"<e0|q2> = {val:.6f} < 2/3 at alpha = {gram.alpha}")
    return val


def verify_top_overlap(dag: LayeredDag, alpha: float) -> VerificationReport:
    """Overlap at least 2/3 whenever ``alpha >= sqrt(2 n)``."""
    gram = _gram_cached(dag, float(alpha))
    val = top_pair_overlap(gram)
    applies = alpha >= math.sqrt(2 * dag.depth) - 1e-12
    viol = max(0.0, 2.0 / 3.0 - val) if applies else 0.0
    return _report("top_overlap", viol, 0.0, overlap=val, applies=applies)


# ---------------------------------------------------------------------------
def verify_one_eigenspace(ops: WalkOperators, gram: GramData | None = None) -> VerificationReport:
    """``|e0>`` has no component in the 1-eigenspace and ``H_A`` meets ``H_B`` trivially."""
    if gram is None:
        gram = _gram_cached(ops.dag, ops.alpha)
    spec = dense_spectrum(ops)
    ones = np.abs(spec.phases) <= ZERO_PHASE_TOL
    proj = math.sqrt(float(spec.weights[ones].sum()))
    stacked = np.hstack([gram.A_hat, gram.B_hat])
    rank = np.linalg.matrix_rank(stacked, tol=1e-9)
    intersection_dim = stacked.shape[1] - int(rank)
    viol = proj if intersection_dim == 0 else max(proj, float(intersection_dim))
    return _report("one_eigenspace", viol, 1e-9, projection=proj, intersection_dim=intersection_dim)


def verify_szegedy_correspondence(
    ops: WalkOperators, gram: GramData | None = None, tol: float = 1e-9
) -> VerificationReport:
    """Every singular value in (0, 1) matches an eigenphase pair via ``cos(theta/2)``."""
    if gram is None:
        gram = _gram_cached(ops.dag, ops.alpha)
    L, _, _ = gram.unmarked(ops.marked_set)
    sv = scipy.linalg.svdvals(L) if L.size else np.zeros(0)
    sv = np.sort(sv[(sv > SIGMA_ZERO_TOL) & (sv < 1.0 - 1e-12)])
    lam = scipy.linalg.eigvals(ops.unitary)
    ph = np.angle(lam)
    inner = (np.abs(ph) > ZERO_PHASE_TOL) & (np.pi - np.abs(ph) > 2e-7)
    pos = np.sort(np.cos(ph[inner & (ph > 0)] / 2.0))
    neg = np.sort(np.cos(-ph[inner & (ph < 0)] / 2.0))
    if pos.size != sv.size or neg.size != sv.size:
        return _report(
            "szegedy_correspondence", math.inf, tol, n_sigma=int(sv.size), n_pos=int(pos.size), n_neg=int(neg.size)
        )
    viol = max(np.abs(pos - sv).max(initial=0.0), np.abs(neg - sv).max(initial=0.0))
    return _report("szegedy_correspondence", viol, tol, pairs=int(sv.size))


# ---------------------------------------------------------------------------
@dataclass
class AbsorbingWalk:
    """Absorbing random walk on the graph extended by the anchor vertices.

    Index ``i - 1`` is vertex ``v_i`` for ``i = 1..V`` and index ``V`` is the
    anchor vertex ``v_{V+1}``; ``v_{V+2}`` is absorbing and not represented.
    """

    alpha: float
    beta: float
    Q: np.ndarray = field(repr=False)
    N: np.ndarray = field(repr=False)
    N_tilde: np.ndarray = field(repr=False)
    p_vec: np.ndarray = field(repr=False)
    d1: int

    @property
    def extended_degrees(self) -> np.ndarray:
        return self.p_vec**2


def _weights_matrix(dag: LayeredDag, alpha: float) -> np.ndarray:
    V = dag.vertex_count
    W = np.zeros((V + 1, V + 1))
    for u, v in dag.edges:
        W[u - 1, v - 1] += 1.0
        W[v - 1, u - 1] += 1.0
    W[0, V] = W[V, 0] = alpha**-2
    return W


def fundamental_matrix(dag: LayeredDag, alpha: float) -> AbsorbingWalk:
    """Build ``Q``, ``N = (I - Q)^{-1}`` and ``N~ = N diag(p)^{-2}``.

    Edges of the graph have weight 1, the anchor edge ``(v_{V+1}, v_1)``
    weight ``alpha**-2`` and the absorbing edge ``(v_{V+2}, v_{V+1})`` weight
    ``d_1``.  The walk moves along an edge with probability proportional to
    its weight.
    """
    if dag.edge_count == 0:
        raise DomainError("the absorbing walk needs at least one edge")
    alpha = float(alpha)
    V = dag.vertex_count
    d1 = dag.degree(1)
    W = _weights_matrix(dag, alpha)
    deg = W.sum(axis=1)
    deg[V] += d1  # edge to the absorbing vertex
    Q = W / deg[:, None]
    beta = 1.0 / (d1 * alpha**2 + 1.0)
    try:
        N = scipy.linalg.inv(np.eye(V + 1) - Q)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"I - Q is singular: {exc}") from exc
    p = np.sqrt(deg)
    return AbsorbingWalk(alpha, beta, Q, N, N / deg[None, :], p, d1)


def verify_N_corners(dag: LayeredDag, alpha: float, tol: float = 1e-9) -> VerificationReport:
    """Closed forms for the anchor/root corners of ``N`` and the constant columns of ``N~``."""
    aw = fundamental_matrix(dag, alpha)
    V = dag.vertex_count
    b = aw.beta
    d1 = aw.d1
    errs = [
        abs(aw.N[V, V] - 1.0 / (1.0 - b)),
        abs(aw.N[0, V] - 1.0 / (1.0 - b)),
        abs(aw.N[0, 0] - 1.0 / (b * (1.0 - b))),
    ]
    scale = [1.0 / (1.0 - b), 1.0 / (1.0 - b), 1.0 / (b * (1.0 - b))]
    rel = max(e / s for e, s in zip(errs, scale))
    col_anchor = np.abs(aw.N_tilde[:, V] - 1.0 / d1).max()
    col_root = np.abs(aw.N_tilde[:V, 0] - (alpha**2 + 1.0 / d1)).max() / (alpha**2 + 1.0 / d1)
    viol = max(rel, col_anchor, col_root)
    return _report("N_corners", viol, tol)


def verify_tree_formula(tree: LayeredDag, alpha: float, tol: float = 1e-9) -> VerificationReport:
    """On trees ``N~[i, j] = alpha^2 + 1/d_1 + l(i, j)``."""
    if not tree.is_tree:
        raise DomainError("the closed form holds on trees")
    aw = fundamental_matrix(tree, alpha)
    V = tree.vertex_count
    ell = _lca_depths(tree)
    expect = alpha**2 + 1.0 / aw.d1 + ell
    viol = np.abs(aw.N_tilde[:V, :V] - expect).max() / max(1.0, float(expect.max()))
    return _report("tree_formula", viol, tol)


def verify_dag_bound(dag: LayeredDag, alpha: float, n: int | None = None, tol: float = 1e-9) -> VerificationReport:
    """``0 <= N~[i, j] - (alpha^2 + 1/d_1) <= n``, with equality on the root row/column."""
    n = dag.depth if n is None else n
    aw = fundamental_matrix(dag, alpha)
    V = dag.vertex_count
    base = alpha**2 + 1.0 / aw.d1
    D = aw.N_tilde[:V, :V] - base
    low = max(0.0, float(-D.min()))
    high = max(0.0, float(D.max() - n))
    edge = max(np.abs(D[0, :]).max(), np.abs(D[:, 0]).max())
    viol = max(low, high, edge) / max(1.0, base)
    return _report("dag_bound", viol, tol)


def verify_harmonic_columns(dag: LayeredDag, alpha: float, tol: float = 1e-9) -> VerificationReport:
    """Symmetry of ``N~`` and the averaging property of ``j -> N~[i, j]``."""
    aw = fundamental_matrix(dag, alpha)
    V = dag.vertex_count
    Nt = aw.N_tilde
    sym = np.abs(Nt - Nt.T).max() / np.abs(Nt).max()
    W = _weights_matrix(dag, alpha)[:V, :V]
    deg = W.sum(axis=1)
    avg = (Nt[:V, :V] @ W) / deg[None, :]
    mask = np.ones((V, V), dtype=bool)
    mask[:, 0] = False
    np.fill_diagonal(mask, False)
    harm = np.abs((avg - Nt[:V, :V])[mask]).max(initial=0.0) / np.abs(Nt).max()
    return _report("harmonic_columns", max(sym, harm), tol)


def verify_K_identity(dag: LayeredDag, alpha: float, tol: float = 1e-8) -> VerificationReport:
    """``K = diag(a) (N~_AA - J / d_1) diag(a)`` (Frobenius norm of the difference)."""
    gram = _gram_cached(dag, float(alpha))
    K = k_matrix(gram)
    aw = fundamental_matrix(dag, alpha)
    idx = np.array(gram.partition.set_A) - 1
    Naa = aw.N_tilde[np.ix_(idx, idx)]
    rhs = gram.a_vec[:, None] * (Naa - 1.0 / aw.d1) * gram.a_vec[None, :]
    diff = K - rhs
    return _report(
        "K_identity", float(np.linalg.norm(diff)), tol, max_abs=float(np.abs(diff).max())
    )


def verify_K_bounds(dag: LayeredDag, alpha: float, n: int | None = None, tol: float = 1e-9) -> VerificationReport:
    """Entrywise sandwich of ``K`` and the resulting bounds on ``lambda_K``."""
    n = dag.depth if n is None else n
    gram = _gram_cached(dag, float(alpha))
    K = k_matrix(gram)
    aa = np.outer(gram.a_vec, gram.a_vec)
    R = K / aa
    a2 = alpha**2
    low = max(0.0, float((a2 - R).max()))
    high = max(0.0, float((R - (a2 + n)).max()))
    edge = max(np.abs(R[0, :] - a2).max(), np.abs(R[:, 0] - a2).max())
    entry = max(low, high, edge) / a2
    lam_K = float(scipy.linalg.eigvalsh(K)[-1])
    T = dag.edge_count
    lam_low = max(0.0, a2 * T - lam_K) / (a2 * T)
    lam_high = max(0.0, lam_K - (a2 + n) * T) / (a2 * T)
    viol = max(entry, lam_low, lam_high)
    return _report("K_bounds", viol, tol, lambda_K=lam_K, lower=a2 * T, upper=(a2 + n) * T)


# ---------------------------------------------------------------------------
@dataclass
class ResistanceData:
    """Effective resistance to the root and, for trees, the LCA depth table."""

    resistance: np.ndarray  # index i - 1 for vertex v_i
    lca_depth: np.ndarray | None = None


def _laplacian(dag: LayeredDag) -> np.ndarray:
    V = dag.vertex_count
    Lap = np.zeros((V, V))
    for u, v in dag.edges:
        Lap[u - 1, v - 1] -= 1.0
        Lap[v - 1, u - 1] -= 1.0
    Lap[np.diag_indices(V)] = -Lap.sum(axis=1)
    return Lap


def harmonic_potential(graph: LayeredDag, s: int, t: int) -> np.ndarray:
    """Potential with ``phi(s) = 1``, ``phi(t) = 0``, harmonic elsewhere (unit conductances).

    Returns an array indexed ``i - 1`` for vertex ``v_i``.
    """
    graph._check(s)
    graph._check(t)
    if s == t:
        raise DomainError("s and t must differ")
    Lap = _laplacian(graph)
    V = graph.vertex_count
    A = Lap.copy()
    rhs = np.zeros(V)
    for v, val in ((s, 1.0), (t, 0.0)):
        A[v - 1, :] = 0.0
        A[v - 1, v - 1] = 1.0
        rhs[v - 1] = val
    try:
        return scipy.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"harmonic system is singular: {exc}") from exc


def effective_resistance(graph: LayeredDag, i: int) -> float:
    """Resistance between ``v_i`` and the root, ``1 / sum_{u ~ root} phi(u)``."""
    graph._check(i)
    if i == 1:
        return 0.0
    phi = harmonic_potential(graph, i, 1)
    nbrs = [c - 1 for c in graph.children(1)]
    current = float(phi[nbrs].sum())
    return 1.0 / current


def _lca_depths(tree: LayeredDag) -> np.ndarray:
    V = tree.vertex_count
    lay = tree.layers
    par = np.zeros(V + 1, dtype=int)
    for u, v in tree.edges:
        par[v] = u
    out = np.zeros((V, V), dtype=int)
    for i in range(1, V + 1):
        for j in range(i, V + 1):
            a, b = i, j
            while lay[a - 1] > lay[b - 1]:
                a = par[a]
            while lay[b - 1] > lay[a - 1]:
                b = par[b]
            while a != b:
                a, b = par[a], par[b]
            out[i - 1, j - 1] = out[j - 1, i - 1] = lay[a - 1]
    return out


def resistance_data(graph: LayeredDag) -> ResistanceData:
    R = np.array([effective_resistance(graph, i) for i in graph.vertices])
    lca = _lca_depths(graph) if graph.is_tree else None
    return ResistanceData(R, lca)

