import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from qwalk.errors import DomainError, ParameterError
from qwalk.graph_model import QueryLedger, path_graph
from qwalk.phase_estimation import (
    MinPhaseConfig,
    QpeConfig,
    Spectrum,
    estimate_min_phase,
    estimate_phase_once,
    qpe_distribution,
    qpe_kernel,
    wrap_phase,
)
from qwalk.walk_operators import build_reflections

TWO_PI = 2.0 * math.pi


def _diag_unitary(phases):
    return np.diag(np.exp(1j * np.asarray(phases)))


class TestWrap:
    def test_range(self):
        assert wrap_phase(math.pi) == pytest.approx(math.pi)
        assert wrap_phase(-math.pi) == pytest.approx(math.pi)
        assert wrap_phase(3 * math.pi / 2) == pytest.approx(-math.pi / 2)

    @given(st.floats(-50, 50, allow_nan=False))
    def test_property(self, x):
        w = wrap_phase(x)
        assert -math.pi < w <= math.pi
        assert math.cos(w) == pytest.approx(math.cos(x), abs=1e-9)


class TestConfig:
    def test_from_targets(self):
        cfg = QpeConfig.from_targets(0.01, 0.01)
        assert cfg.precision_bits == math.ceil(math.log2(TWO_PI / 0.01)) + 2
        assert cfg.repetitions == 2 * math.ceil(math.log(100)) + 1
        assert cfg.cost == cfg.M * cfg.repetitions

    def test_invalid(self):
        with pytest.raises(ParameterError):
            QpeConfig(0, 0.1, 0.1)
        with pytest.raises(ParameterError):
            QpeConfig(4, 0.0, 0.1)
        with pytest.raises(ParameterError):
            QpeConfig(4, 0.1, 1.0)
        with pytest.raises(ParameterError):
            QpeConfig(4, 0.1, 0.1, repetitions=4)
        with pytest.raises(ParameterError):
            MinPhaseConfig(0.0, 0.1, 0.1)
        with pytest.raises(ParameterError):
            MinPhaseConfig(1.5, 0.1, 0.1)

    def test_min_phase_counts(self):
        cfg = MinPhaseConfig(4.0 / 9.0, 0.01, 0.05)
        assert cfg.t == math.ceil(math.log(2 / 0.05) * 9 / 4)
        assert cfg.per_run.epsilon_est == pytest.approx(0.05 / (2 * cfg.t))
        assert cfg.cost == cfg.t * cfg.per_run.cost

    def test_cost_scales_inverse_delta(self):
        deltas = 2.0 ** -np.arange(4, 12)
        costs = [MinPhaseConfig(0.5, d, 0.1).cost for d in deltas]
        slope = np.polyfit(np.log(deltas), np.log(costs), 1)[0]
        assert abs(slope + 1.0) <= 0.05


class TestSpectrum:
    def test_from_unitary(self):
        U = _diag_unitary([0.3, -1.2])
        start = np.array([0.6, 0.8])
        spec = Spectrum.from_unitary(U, start)
        order = np.argsort(spec.phases)
        assert np.allclose(spec.phases[order], [-1.2, 0.3])
        assert np.allclose(spec.weights[order], [0.64, 0.36])

    def test_rejects_bad_start(self):
        with pytest.raises(DomainError):
            Spectrum.from_unitary(np.eye(2), np.array([1.0, 1.0]))

    def test_rejects_non_unitary(self):
        with pytest.raises(DomainError):
            Spectrum.from_unitary(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([1.0, 0.0]))

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            Spectrum([0.1, 0.2], [1.0])

    def test_degenerate_cluster(self):
        U = unitary_group.rvs(4, random_state=1)
        V = U @ _diag_unitary([0.5, 0.5, 0.5, -2.0]) @ U.conj().T
        start = np.ones(4) / 2.0
        spec = Spectrum.from_unitary(V, start)
        assert spec.total == pytest.approx(1.0)
        assert spec.mass_near(0.5, 1e-8) == pytest.approx(1.0 - abs(U[:, 3].conj() @ start) ** 2)


class TestDistribution:
    def test_dyadic_eigenstate(self):
        cfg = QpeConfig(4, 0.5, 0.1)
        pmf = qpe_distribution(_diag_unitary([TWO_PI * 3 / 16]), np.array([1.0]), cfg)
        assert pmf[3] == pytest.approx(1.0) and pmf.sum() == pytest.approx(1.0)

    def test_two_dyadic(self):
        cfg = QpeConfig(5, 0.5, 0.1)
        U = _diag_unitary([TWO_PI * 5 / 32, TWO_PI * 20 / 32])
        pmf = qpe_distribution(U, np.array([1.0, 1.0]) / math.sqrt(2.0), cfg)
        assert pmf[5] == pytest.approx(0.5) and pmf[20] == pytest.approx(0.5)

    def test_normalized(self):
        rng = np.random.default_rng(0)
        for b in (1, 3, 6, 10):
            U = unitary_group.rvs(5, random_state=rng)
            v = rng.normal(size=5) + 1j * rng.normal(size=5)
            pmf = qpe_distribution(U, v / np.linalg.norm(v), QpeConfig(b, 0.1, 0.1))
            assert abs(pmf.sum() - 1.0) <= 1e-9

    def test_kernel(self):
        assert qpe_kernel(8, 0.0) == 1.0
        x = np.linspace(-math.pi, math.pi, 101)
        assert np.all(qpe_kernel(16, x) <= 1.0 + 1e-12)
        assert qpe_kernel(16, TWO_PI / 16) == pytest.approx(0.0, abs=1e-15)

    def test_concentration(self):
        rng = np.random.default_rng(1)
        M = 64
        for theta in rng.uniform(-math.pi, math.pi, 50):
            pmf = qpe_distribution(Spectrum([theta], [1.0]), None, QpeConfig(6, 0.1, 0.1))
            bins = TWO_PI * np.arange(M) / M
            near = np.abs(wrap_phase(bins - theta)) <= TWO_PI / M + 1e-12
            assert pmf[near].sum() >= 4.0 / math.pi**2

    def test_samples_match_pmf(self):
        rng = np.random.default_rng(2)
        U = unitary_group.rvs(6, random_state=rng)
        v = rng.normal(size=6) + 1j * rng.normal(size=6)
        start = v / np.linalg.norm(v)
        cfg = QpeConfig(4, 0.1, 0.1, repetitions=1)
        spec = Spectrum.from_unitary(U, start)
        pmf = qpe_distribution(spec, None, cfg)
        N = 100_000
        draws = np.array([estimate_phase_once(spec, None, cfg, rng) for _ in range(N)])
        k = np.mod(np.round(draws * cfg.M / TWO_PI).astype(int), cfg.M)
        counts = np.bincount(k, minlength=cfg.M)
        band = 3.0 * np.sqrt(N * pmf * (1.0 - pmf)) + 1.0
        assert np.all(np.abs(counts - N * pmf) <= band)


class TestEstimates:
    def test_exact_dyadic(self):
        cfg = QpeConfig(6, 0.1, 0.1, repetitions=5)
        theta = TWO_PI * 11 / 64
        for seed in range(20):
            assert estimate_phase_once(_diag_unitary([theta]), np.array([1.0]), cfg, seed) == pytest.approx(theta)

    def test_charges_ledger(self):
        led = QueryLedger()
        cfg = QpeConfig.from_targets(0.1, 0.1)
        estimate_phase_once(Spectrum([0.2], [1.0]), None, cfg, 0, led)
        assert led.controlled_u == cfg.cost

    def test_requires_start(self):
        with pytest.raises(DomainError):
            estimate_phase_once(np.eye(2), None, QpeConfig(3, 0.1, 0.1))

    def test_single_edge_walk(self):
        ops = build_reflections(path_graph(2), 2.0)
        theta_min = 2.0 * math.asin(math.sqrt(0.2))
        cfg = QpeConfig.from_targets(0.01, 0.01)
        spec = Spectrum.from_unitary(ops.unitary, ops.start_state())
        rng = np.random.default_rng(3)
        hits = sum(abs(abs(estimate_phase_once(spec, None, cfg, rng)) - theta_min) <= 0.01 for _ in range(1000))
        assert hits >= 990

    def test_failure_rate(self):
        rng = np.random.default_rng(4)
        eps = 0.05
        cfg = QpeConfig.from_targets(0.02, eps)
        misses = 0
        N = 10_000
        for theta in rng.uniform(-math.pi, math.pi, N):
            est = estimate_phase_once(Spectrum([theta], [1.0]), None, cfg, rng)
            misses += abs(wrap_phase(est - theta)) > 0.02
        assert misses / N <= eps


class TestMinPhase:
    def test_plane_exact(self):
        theta = TWO_PI * 5 / 256
        spec = Spectrum([theta, -theta], [0.5, 0.5])
        cfg = MinPhaseConfig(1.0, TWO_PI / 1000, 0.1)
        for seed in range(20):
            assert estimate_min_phase(spec, None, cfg, seed) == pytest.approx(theta, abs=TWO_PI / 1000)

    def test_adversarial_start(self):
        # most weight on a larger phase; the minimum still lands near theta_min
        spec = Spectrum([0.05, -0.05, 1.1, -2.0], [0.25, 0.25, 0.35, 0.15])
        cfg = MinPhaseConfig(0.5, 0.005, 0.05)
        rng = np.random.default_rng(5)
        ok = sum(abs(estimate_min_phase(spec, None, cfg, rng) - 0.05) <= 0.005 for _ in range(1000))
        assert ok >= 950

    def test_single_edge_algorithm_parameters(self):
        ops = build_reflections(path_graph(2), 2.0)
        theta_min = 2.0 * math.asin(math.sqrt(0.2))
        delta = 0.5
        cfg = MinPhaseConfig(4.0 / 9.0, delta**1.5 / (4.0 * math.sqrt(3.0)), 0.05)
        spec = Spectrum.from_unitary(ops.unitary, ops.start_state())
        rng = np.random.default_rng(6)
        led = QueryLedger()
        ok = sum(abs(estimate_min_phase(spec, None, cfg, rng, led) - theta_min) <= cfg.delta_min for _ in range(1000))
        assert ok >= 950
        assert led.controlled_u == 1000 * cfg.cost

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.05, 3.0), st.integers(0, 2**31 - 1))
    def test_nonnegative(self, theta, seed):
        est = estimate_min_phase(Spectrum([theta, -theta], [0.5, 0.5]), None, MinPhaseConfig(1.0, 0.1, 0.2), seed)
        assert 0.0 <= est <= math.pi
