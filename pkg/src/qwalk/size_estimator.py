"""Quantum size estimation for layered DAGs and trees (simulated).

The estimator runs the minimum-phase procedure on the walk ``R_B R_A``
with ``alpha = sqrt(2n/delta)`` from the anchor state and converts the phase
into an edge count through ``1 / (alpha^2 sin^2(theta/2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .graph_model import ExplorableHandle
from .phase_estimation import MinPhaseConfig, estimate_min_phase
from .spectral import start_spectrum

__all__ = [
    "SizeEstimate",
    "estimate_dag_size",
    "estimate_tree_vertices",
    "delta_correct",
    "theta_to_size",
    "min_phase_config",
    "OVERLAP_C",
]

OVERLAP_C = 4.0 / 9.0


@dataclass(frozen=True)
class SizeEstimate:
    """Result of one size estimation.

    ``t_hat`` is ``None`` when the outcome is "more than ``t0``".
    """

    t_hat: int | None
    exceeds: bool
    t0: float
    delta: float
    epsilon: float
    alpha_used: float
    theta_hat: float
    raw: float
    ledger: dict
    seed: int | None = None

    @property
    def outcome(self) -> str:
        return "exceeds" if self.exceeds else "value"

    def to_dict(self) -> dict:
        out = {
            "outcome": self.outcome,
            "t0": self.t0,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "alpha": self.alpha_used,
            "theta_hat": self.theta_hat,
            "controlled_u_count": self.ledger.get("controlled_u", 0),
            "queries": {k: v for k, v in self.ledger.items() if k != "controlled_u"},
            "seed": self.seed,
        }
        if not self.exceeds:
            out["t_hat"] = self.t_hat
        return out


def theta_to_size(theta_hat: float, alpha: float) -> float:
    """``1 / (alpha^2 sin^2(theta/2))`` for ``theta`` in ``(0, pi]``."""
    if not 0.0 < theta_hat <= math.pi:
        raise DomainError(f"theta_hat must lie in (0, pi], got {theta_hat}")
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    return 1.0 / (alpha * alpha * math.sin(theta_hat / 2.0) ** 2)


def min_phase_config(t0: float, n: int, delta: float, epsilon: float) -> MinPhaseConfig:
    """``C = 4/9``, ``eps_min = eps``, ``delta_min = delta^1.5 / (4 sqrt(3 n t0))``."""
    return MinPhaseConfig(OVERLAP_C, delta**1.5 / (4.0 * math.sqrt(3.0 * n * t0)), epsilon)


def _check_params(t0, n, delta, epsilon):
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    if not t0 >= 1:
        raise ParameterError(f"T0 must be at least 1, got {t0}")


def _seed_tag(seed):
    return int(seed) if isinstance(seed, (int, np.integer)) else None


def estimate_dag_size(
    handle: ExplorableHandle,
    T0: float,
    n: int,
    delta: float,
    epsilon: float,
    seed=None,
    *,
    route: str = "szegedy",
) -> SizeEstimate:
    """Estimate the number of edges reachable from the handle's root.

    Parameters
    ----------
    handle : ExplorableHandle
        Black-box access; controlled-U applications are charged to its ledger.
    T0 : float
        Upper bound; a raw estimate above it is reported as "exceeds".
    n : int
        Upper bound on the depth.
    delta, epsilon : float
        Relative precision and failure probability.
    seed : int or numpy.random.Generator, optional
    route : {"szegedy", "dense"}
        How the walk spectrum is obtained.

    Returns
    -------
    SizeEstimate
        A value is rounded half-up and clamped into ``[1, floor(T0)]``.
    """
    _check_params(T0, n, delta, epsilon)
    dag, _ = handle.simulator_view()
    if dag.edge_count == 0:
        raise DomainError("size estimation needs at least one edge")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    alpha = math.sqrt(2.0 * n / delta)
    spec = start_spectrum(dag, alpha, (), route)
    cfg = min_phase_config(T0, n, delta, epsilon)
    before = handle.ledger.controlled_u
    theta = estimate_min_phase(spec, None, cfg, rng, handle.ledger)
    raw = math.inf if theta <= 0.0 else theta_to_size(theta, alpha)
    if raw > T0:
        t_hat, exceeds = None, True
    else:
        t_hat = int(min(max(math.floor(raw + 0.5), 1), math.floor(T0)))
        exceeds = False
    snap = handle.ledger.snapshot()
    snap["controlled_u"] = handle.ledger.controlled_u - before
    return SizeEstimate(t_hat, exceeds, float(T0), delta, epsilon, alpha, theta, raw, snap, _seed_tag(seed))


def estimate_tree_vertices(
    handle: ExplorableHandle,
    bound: float,
    n: int,
    delta: float,
    epsilon: float,
    seed=None,
    *,
    route: str = "szegedy",
) -> SizeEstimate:
    """Vertex-count version for trees: ``|T(v)| = edges + 1``.

    A leaf is recognized with one child-count query and answered exactly.
    Otherwise the edge estimator runs with bound ``max(bound - 1, 1)`` and
    the returned value and ``t0`` are shifted back by one vertex.
    """
    if handle.child_count(handle.root) == 0:
        return SizeEstimate(1, False, float(bound), delta, epsilon, math.nan, math.nan, 1.0, handle.ledger.snapshot(), _seed_tag(seed))
    est = estimate_dag_size(handle, max(bound - 1.0, 1.0), n, delta, epsilon, seed, route=route)
    t_hat = None if est.t_hat is None else est.t_hat + 1
    return SizeEstimate(
        t_hat, est.exceeds, est.t0 + 1.0, delta, epsilon, est.alpha_used, est.theta_hat, est.raw + 1.0, est.ledger, est.seed
    )


def delta_correct(estimate: SizeEstimate, true_T: float) -> bool:
    """Either ``|T_hat - T| <= delta T``, or "exceeds" with ``(1 + delta) T > T0``."""
    if true_T < 1:
        raise DomainError("true_T must be at least 1")
    if estimate.exceeds:
        return (1.0 + estimate.delta) * true_T > estimate.t0
    return abs(estimate.t_hat - true_T) <= estimate.delta * true_T
