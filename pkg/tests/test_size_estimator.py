import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwalk.errors import DomainError, ParameterError
from qwalk.graph_model import ExplorableHandle, path_graph, random_layered_dag, random_tree, single_vertex
from qwalk.oracles import exact_edge_count
from qwalk.size_estimator import (
    OVERLAP_C,
    SizeEstimate,
    delta_correct,
    estimate_dag_size,
    estimate_tree_vertices,
    min_phase_config,
    theta_to_size,
)
from qwalk.spectral import szegedy_spectrum


def _exact_theta(dag, alpha):
    spec = szegedy_spectrum(dag, alpha)
    return float(np.abs(spec.phases[spec.weights > 1e-12]).min())


def _fake(t_hat, t0, delta, exceeds=False):
    return SizeEstimate(t_hat, exceeds, t0, delta, 0.1, 1.0, 0.1, 0.0, {})


class TestThetaToSize:
    def test_pi(self):
        assert theta_to_size(math.pi, 1.0) == pytest.approx(1.0)

    def test_single_edge(self):
        theta = _exact_theta(path_graph(2), 2.0)
        assert theta_to_size(theta, 2.0) == pytest.approx(1.25)

    def test_range(self):
        with pytest.raises(DomainError):
            theta_to_size(0.0, 1.0)
        with pytest.raises(DomainError):
            theta_to_size(4.0, 1.0)
        with pytest.raises(ParameterError):
            theta_to_size(1.0, 0.0)

    @given(st.floats(0.01, 3.0), st.floats(0.001, 0.1))
    def test_decreasing(self, theta, step):
        assert theta_to_size(theta, 1.5) > theta_to_size(min(theta + step, math.pi), 1.5)

    def test_perturbation(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            d = random_layered_dag(int(rng.integers(3, 50)), 6, 3, 3, rng)
            n, T = d.depth, d.edge_count
            delta = float(rng.uniform(0.05, 0.9))
            alpha = math.sqrt(2 * n / delta)
            theta = _exact_theta(d, alpha)
            width = delta**1.5 / (4 * math.sqrt(3 * n * T))
            for th in np.linspace(theta - width, theta + width, 21):
                est = theta_to_size(th, alpha)
                assert (1 - delta) * T <= est <= (1 + delta) * T

    def test_sandwich(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            d = random_layered_dag(int(rng.integers(2, 60)), 8, 3, 3, rng)
            n, T = d.depth, d.edge_count
            delta = float(rng.uniform(0.05, 0.95))
            alpha = math.sqrt(2 * n / delta)
            val = theta_to_size(_exact_theta(d, alpha), alpha)
            assert T * (1 - 1e-9) <= val <= (1 + delta / 2) * T * (1 + 1e-9)


class TestDeltaCorrect:
    def test_exact_value(self):
        assert delta_correct(_fake(10, 100, 0.1), 10)

    def test_exceeds_too_small(self):
        assert not delta_correct(_fake(None, 100, 0.3, exceeds=True), 50)

    def test_exceeds_ok(self):
        assert delta_correct(_fake(None, 100, 0.3, exceeds=True), 80)

    def test_table(self):
        table = [(9, 10, 0.1, True), (8, 10, 0.1, False), (12, 10, 0.2, True), (13, 10, 0.2, False)]
        for t_hat, T, d, expect in table:
            assert delta_correct(_fake(t_hat, 100, d), T) is expect

    def test_bad_true(self):
        with pytest.raises(DomainError):
            delta_correct(_fake(1, 10, 0.1), 0)


class TestEstimateDagSize:
    def test_parameters(self):
        cfg = min_phase_config(100, 4, 0.25, 0.1)
        assert cfg.C == OVERLAP_C == 4.0 / 9.0
        assert cfg.delta_min == pytest.approx(0.125 / (4 * math.sqrt(1200)))
        assert cfg.epsilon_min == 0.1

    def test_single_edge(self):
        for seed in range(10):
            est = estimate_dag_size(ExplorableHandle(path_graph(2)), 4, 1, 0.5, 0.1, seed)
            assert est.alpha_used == pytest.approx(2.0)
            assert not est.exceeds and est.t_hat == 1
            assert delta_correct(est, 1)

    def test_random_tree_rate(self):
        tree = random_tree(41, 5, 3, 7)
        assert tree.edge_count == 40 and tree.depth <= 5
        ok = 0
        for seed in range(300):
            est = estimate_dag_size(ExplorableHandle(tree), 80, 5, 0.3, 0.1, seed)
            ok += delta_correct(est, 40)
        assert ok >= 270

    def test_exceeds_branch(self):
        tree = random_tree(41, 6, 3, 8)
        for seed in range(20):
            est = estimate_dag_size(ExplorableHandle(tree), 20, 6, 0.3, 0.1, seed)
            assert est.exceeds and est.t_hat is None and est.outcome == "exceeds"
            assert delta_correct(est, 40)

    def test_value_in_range(self):
        rng = np.random.default_rng(2)
        for k in range(40):
            d = random_layered_dag(int(rng.integers(2, 40)), 6, 3, 3, rng)
            t0 = float(rng.uniform(1, 3 * d.edge_count))
            est = estimate_dag_size(ExplorableHandle(d), t0, 6, 0.4, 0.2, k)
            if not est.exceeds:
                assert 1 <= est.t_hat <= math.floor(t0)
            else:
                assert est.raw > t0

    def test_dense_route_agrees(self):
        d = random_layered_dag(25, 5, 3, 3, 3)
        T = exact_edge_count(d)
        for seed in range(20):
            est = estimate_dag_size(ExplorableHandle(d), 2 * T, 5, 0.3, 0.1, seed, route="dense")
            assert delta_correct(est, T)

    def test_ledger_and_dict(self):
        est = estimate_dag_size(ExplorableHandle(path_graph(4)), 10, 3, 0.3, 0.1, 5)
        cfg = min_phase_config(10, 3, 0.3, 0.1)
        assert est.ledger["controlled_u"] == cfg.cost
        doc = est.to_dict()
        assert doc["controlled_u_count"] == cfg.cost and doc["seed"] == 5
        assert {"outcome", "t0", "delta", "epsilon", "alpha", "theta_hat", "queries"} <= set(doc)

    def test_reproducible(self):
        d = random_tree(30, 5, 3, 4)
        a = estimate_dag_size(ExplorableHandle(d), 60, 5, 0.3, 0.1, 9)
        b = estimate_dag_size(ExplorableHandle(d), 60, 5, 0.3, 0.1, 9)
        assert a.theta_hat == b.theta_hat

    def test_errors(self):
        h = ExplorableHandle(path_graph(3))
        with pytest.raises(DomainError):
            estimate_dag_size(ExplorableHandle(single_vertex()), 4, 1, 0.5, 0.1)
        for args in ((4, 1, 0.0, 0.1), (4, 1, 1.0, 0.1), (4, 1, 0.5, 1.5), (4, 0, 0.5, 0.1), (0.5, 1, 0.5, 0.1)):
            with pytest.raises(ParameterError):
                estimate_dag_size(h, *args)

    def test_cost_slope_in_t0(self):
        t0s = 2.0 ** np.arange(5, 11)
        costs = [min_phase_config(t0, 8, 0.3, 0.1).cost for t0 in t0s]
        slope = np.polyfit(np.log(t0s), np.log(costs), 1)[0]
        assert abs(slope - 0.5) <= 0.1


class TestTreeVertices:
    def test_leaf(self):
        est = estimate_tree_vertices(ExplorableHandle(single_vertex()), 5, 1, 0.5, 0.1)
        assert est.t_hat == 1 and not est.exceeds

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 2**31 - 1))
    def test_vertex_shift(self, V, seed):
        t = random_tree(V, 8, 3, seed)
        est = estimate_tree_vertices(ExplorableHandle(t), 2 * V, 8, 0.3, 0.05, seed)
        if not est.exceeds:
            assert est.t_hat >= 2
        assert est.t0 == pytest.approx(2 * V)
