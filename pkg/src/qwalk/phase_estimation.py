"""Phase estimation simulated at the level of its outcome distribution.

An ``M = 2**b`` point phase estimation applied to an eigenvector with
phase ``theta`` returns bin ``k`` with probability
``F_M(theta - 2*pi*k/M)`` where ``F_M(x) = sin^2(M x / 2) / (M^2 sin^2(x / 2))``.
For a general start state the eigencomponent is first drawn with its squared
overlap.  No ancilla register is simulated; only this law is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError, ParameterError
from .graph_model import QueryLedger

__all__ = [
    "Spectrum",
    "QpeConfig",
    "MinPhaseConfig",
    "qpe_kernel",
    "qpe_distribution",
    "estimate_phase_once",
    "estimate_min_phase",
    "wrap_phase",
]

TWO_PI = 2.0 * math.pi
_WINDOW = 64


def wrap_phase(theta):
    """Map angles into ``(-pi, pi]``."""
    out = np.mod(np.asarray(theta, dtype=float) + np.pi, TWO_PI) - np.pi
    out = np.where(out <= -np.pi, out + TWO_PI, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Spectrum:
    """Eigenphases of a unitary paired with the start state's squared overlaps."""

    phases: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        ph = np.atleast_1d(np.asarray(self.phases, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if ph.shape != w.shape:
            raise DomainError("phases and weights must have the same length")
        if np.any(w < -1e-12):
            raise DomainError("weights must be nonnegative")
        object.__setattr__(self, "phases", wrap_phase(ph) if ph.size else ph)
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def from_unitary(cls, U: np.ndarray, start: np.ndarray, *, check: bool = True) -> "Spectrum":
        """Diagonalize ``U`` by a complex Schur decomposition.

        For a normal matrix the Schur factor is diagonal, so the Schur
        vectors form an orthonormal eigenbasis even inside degenerate
        clusters.
        """
        U = np.asarray(U)
        start = np.asarray(start, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] != start.shape[0]:
            raise DomainError("U must be square and match the start state")
        if abs(np.linalg.norm(start) - 1.0) > 1e-9:
            raise DomainError(f"start state has norm {np.linalg.norm(start):.6g}, expected 1")
        if check:
            dev = np.abs(U.conj().T @ U - np.eye(U.shape[0])).max()
            if dev > 1e-10:
                raise DomainError(f"U is not unitary (max deviation {dev:.3g})")
        try:
            T, Z = scipy.linalg.schur(U.astype(complex), output="complex")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericError(f"Schur decomposition failed: {exc}") from exc
        lam = np.diag(T)
        weights = np.abs(Z.conj().T @ start) ** 2
        return cls(np.angle(lam), weights)

    def support(self, min_weight: float = 0.0) -> "Spectrum":
        keep = self.weights > min_weight
        return Spectrum(self.phases[keep], self.weights[keep])

    def mass_near(self, theta: float, tol: float) -> float:
        d = np.abs(wrap_phase(self.phases - theta))
        return float(self.weights[d <= tol].sum())


@dataclass(frozen=True)
class QpeConfig:
    """Parameters of one amplified phase-estimation call.

    Attributes
    ----------
    precision_bits : int
        ``b``; the window is ``M = 2**b`` bins.
    delta_est, epsilon_est : float
        Target resolution and failure bound.
    repetitions : int
        Number of independent runs whose median is returned.
    """

    precision_bits: int
    delta_est: float
    epsilon_est: float
    repetitions: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.precision_bits < 1:
            raise ParameterError("precision_bits must be at least 1")
        if not self.delta_est > 0:
            raise ParameterError("delta_est must be positive")
        if not 0 < self.epsilon_est < 1:
            raise ParameterError("epsilon_est must lie in (0, 1)")
        if self.repetitions < 1 or self.repetitions % 2 == 0:
            raise ParameterError("repetitions must be a positive odd integer")

    @classmethod
    def from_targets(cls, delta_est: float, epsilon_est: float, seed: int | None = None) -> "QpeConfig":
        """``b = ceil(log2(2 pi / delta)) + 2`` and ``2 ceil(ln(1/eps)) + 1`` runs."""
        if not delta_est > 0:
            raise ParameterError("delta_est must be positive")
        if not 0 < epsilon_est < 1:
            raise ParameterError("epsilon_est must lie in (0, 1)")
        b = max(1, math.ceil(math.log2(TWO_PI / delta_est))) + 2
        r = 2 * math.ceil(math.log(1.0 / epsilon_est)) + 1
        return cls(b, float(delta_est), float(epsilon_est), r, seed)

    @property
    def M(self) -> int:
        return 1 << self.precision_bits

    @property
    def cost(self) -> int:
        """Controlled-U applications of one call."""
        return self.M * self.repetitions


@dataclass(frozen=True)
class MinPhaseConfig:
    """Parameters of the minimum-phase procedure.

    ``t = ceil(ln(2/epsilon_min) / C)`` ordinary estimates are taken, each
    with resolution ``delta_min`` and failure ``epsilon_min / (2 t)``.
    """

    C: float
    delta_min: float
    epsilon_min: float

    def __post_init__(self):
        if not 0 < self.C <= 1:
            raise ParameterError("C must lie in (0, 1]")
        if not self.delta_min > 0:
            raise ParameterError("delta_min must be positive")
        if not 0 < self.epsilon_min < 1:
            raise ParameterError("epsilon_min must lie in (0, 1)")

    @property
    def t(self) -> int:
        return max(1, math.ceil(math.log(2.0 / self.epsilon_min) / self.C))

    @property
    def per_run(self) -> QpeConfig:
        return QpeConfig.from_targets(self.delta_min, self.epsilon_min / (2 * self.t))

    @property
    def cost(self) -> int:
        return self.t * self.per_run.cost


def qpe_kernel(M: int, x) -> np.ndarray:
    """``F_M(x) = sin^2(M x/2) / (M^2 sin^2(x/2))`` with ``F_M(0) = 1``."""
    x = np.asarray(x, dtype=float)
    half = x / 2.0
    den = np.sin(half)
    small = np.abs(den) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(M * half) ** 2 / (M * M * den**2)
    return np.where(small, 1.0, val)


def _as_spectrum(U, start) -> Spectrum:
    if isinstance(U, Spectrum):
        return U
    if start is None:
        raise DomainError("a start state is required when U is a matrix")
    return Spectrum.from_unitary(U, start)


def qpe_distribution(U, start, config: QpeConfig) -> np.ndarray:
    """Exact probability of each of the ``M`` output bins.

    Parameters
    ----------
    U : ndarray or Spectrum
        The unitary, or a precomputed start-state spectrum (``start`` is then
        ignored).
    start : ndarray or None
    config : QpeConfig
    """
    spec = _as_spectrum(U, start)
    M = config.M
    k = np.arange(M)
    pmf = np.zeros(M)
    for theta, w in zip(spec.phases, spec.weights):
        if w <= 0:
            continue
        f = theta * M / TWO_PI
        pmf += w * _bin_probabilities(f, k, M)
    return pmf


def _bin_probabilities(f: float, k: np.ndarray, M: int) -> np.ndarray:
    """Kernel mass on integer bins ``k`` for a phase at fractional bin ``f``.

    Written as ``sin^2(pi (f-k)) / (M^2 sin^2(pi (f-k)/M))``, with the
    numerator evaluated through the fractional part of ``f`` to avoid
    cancellation for large ``k``.
    """
    frac = f - math.floor(f)
    if frac < 1e-12 or frac > 1.0 - 1e-12:
        return (np.mod(k - round(f), M) == 0).astype(float)
    num = math.sin(math.pi * frac) ** 2
    den = np.sin(np.pi * (f - k) / M) ** 2
    return num / (M * M * den)


def _sample_bins(f: float, M: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` outcome bins as signed integers near ``f`` (not reduced mod M)."""
    k0 = math.floor(f)
    frac = f - k0
    if frac < 1e-12 or frac > 1.0 - 1e-12:
        return np.full(size, round(f), dtype=np.int64)
    n = min(2 * _WINDOW, M)
    offs = np.arange(-(n // 2) + 1, n - n // 2 + 1)
    p = _bin_probabilities(f, k0 + offs, M)
    if n == M:  # the window already covers every bin
        p = p / p.sum()
    cdf = np.cumsum(p)
    if n == M:
        cdf[-1] = np.inf
    u = rng.random(size)
    out = np.empty(size, dtype=np.int64)
    inside = u < cdf[-1]
    out[inside] = k0 + offs[np.minimum(np.searchsorted(cdf, u[inside], side="right"), n - 1)]
    n_tail = int((~inside).sum())
    if n_tail:
        # exact tail: every bin outside the window, as a signed offset
        tail = np.arange(offs[-1] + 1, offs[0] + M)
        tail = np.where(tail > M // 2, tail - M, tail)
        pt = _bin_probabilities(f, k0 + tail, M)
        pt = pt / pt.sum()
        out[~inside] = k0 + rng.choice(tail, size=n_tail, p=pt)
    return out


def _estimates(spec: Spectrum, config: QpeConfig, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent amplified estimates (each picks one eigencomponent)."""
    w = spec.weights
    tot = w.sum()
    if not tot > 0:
        raise DomainError("start state has no weight on the spectrum")
    comp = rng.choice(len(w), size=count, p=w / tot)
    M = config.M
    r = config.repetitions
    out = np.empty(count)
    for i, j in enumerate(comp):
        f = spec.phases[j] * M / TWO_PI
        bins = _sample_bins(f, M, r, rng)
        med = int(np.median(bins))  # r is odd, so the median is a sample
        out[i] = wrap_phase(TWO_PI * med / M)
    return out


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def estimate_phase_once(
    U,
    start,
    config: QpeConfig,
    rng=None,
    ledger: QueryLedger | None = None,
) -> float:
    """Amplified phase estimate in ``(-pi, pi]``.

    One eigencomponent is selected with probability equal to its squared
    overlap; then ``config.repetitions`` independent ``M``-bin estimates are
    drawn and their median is returned.  Costs ``M * repetitions``
    controlled-U applications.
    """
    spec = _as_spectrum(U, start)
    rng = _rng(rng if rng is not None else config.seed)
    est = _estimates(spec, config, 1, rng)[0]
    if ledger is not None:
        ledger.charge_controlled_u(config.cost)
    return float(est)


def estimate_min_phase(
    U,
    start,
    min_config: MinPhaseConfig,
    rng=None,
    ledger: QueryLedger | None = None,
) -> float:
    """Smallest absolute value among ``t`` ordinary phase estimates.

    If the start state has squared overlap at least ``C`` with the
    eigenvectors of phase ``+-theta_min`` and none with the 1-eigenspace,
    the result is within ``delta_min`` of ``theta_min`` with probability at
    least ``1 - epsilon_min``.  The precondition cannot be checked here.
    """
    spec = _as_spectrum(U, start)
    rng = _rng(rng)
    per = min_config.per_run
    est = _estimates(spec, per, min_config.t, rng)
    if ledger is not None:
        ledger.charge_controlled_u(min_config.t * per.cost)
    return float(np.min(np.abs(est)))
