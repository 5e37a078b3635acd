import math

import numpy as np
import pytest

from qwalk.errors import DomainError, PropertyViolation
from qwalk.graph_model import LayeredDag, path_graph, random_layered_dag, random_tree, single_vertex
from qwalk.oracles import lca_depth_table
from qwalk.spectral import (
    VerificationReport,
    dense_spectrum,
    effective_resistance,
    eigendecompose_walk,
    fundamental_matrix,
    harmonic_potential,
    k_matrix,
    resistance_data,
    start_spectrum,
    szegedy_spectrum,
    theta_min_from_gram,
    top_pair_overlap,
    verify_dag_bound,
    verify_harmonic_columns,
    verify_K_bounds,
    verify_K_identity,
    verify_N_corners,
    verify_one_eigenspace,
    verify_szegedy_correspondence,
    verify_top_overlap,
    verify_tree_formula,
)
from qwalk.walk_operators import build_gram, build_reflections


def _batch(seed, count=12, max_vertices=35, kind="mixed"):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        V = int(rng.integers(2, max_vertices))
        if kind == "tree" or (kind == "mixed" and k % 2 == 0):
            out.append(random_tree(V, 8, 3, rng))
        else:
            out.append(random_layered_dag(V, 8, 3, 4, rng))
    return out


def _moments(spec, kmax):
    k = np.arange(kmax)[:, None]
    return (spec.weights[None, :] * np.exp(1j * k * spec.phases[None, :])).sum(axis=1)


class TestSingleEdge:
    def setup_method(self):
        self.dag = path_graph(2)
        self.ops = build_reflections(self.dag, 2.0)
        self.summary = eigendecompose_walk(self.ops)

    def test_lambda_values(self):
        assert self.summary.lambda_L == pytest.approx(2.0 / math.sqrt(5.0), abs=1e-12)
        assert math.sin(self.summary.theta_min / 2.0) ** 2 == pytest.approx(0.2, abs=1e-12)
        assert self.summary.lambda_K == pytest.approx(5.0, abs=1e-12)

    def test_K_bounds_tight(self):
        assert 4.0 <= self.summary.lambda_K <= 5.0 + 1e-12
        rep = verify_K_bounds(self.dag, 2.0)
        assert rep.passed
        K = k_matrix(build_gram(self.dag, 2.0))
        assert K[0, 0] == pytest.approx(5.0, abs=1e-12)

    def test_K_identity(self):
        assert verify_K_identity(self.dag, 2.0).passed

    def test_top_overlap_is_one(self):
        assert top_pair_overlap(build_gram(self.dag, 2.0)) == pytest.approx(1.0, abs=1e-12)

    def test_one_eigenspace(self):
        rep = verify_one_eigenspace(self.ops)
        assert rep.passed and rep.details["projection"] <= 1e-12


class TestSummary:
    def test_pairing_and_lambda_K(self):
        for d in _batch(0):
            s = eigendecompose_walk(build_reflections(d, math.sqrt(2 * d.depth)))
            assert s.paired()
            assert s.lambda_K == pytest.approx(1.0 / (1.0 - s.lambda_L**2), rel=1e-9)
            assert s.lambda_K * math.sin(s.theta_min / 2.0) ** 2 == pytest.approx(1.0, abs=1e-9)
            assert s.theta_min > 0

    def test_theta_min_from_gram(self):
        for d in _batch(1, 6):
            ops = build_reflections(d, 1.5)
            g = build_gram(d, 1.5)
            assert theta_min_from_gram(g) == pytest.approx(eigendecompose_walk(ops, g).theta_min, abs=1e-8)


class TestSpectrumRoutes:
    def test_routes_agree(self):
        for d in _batch(2):
            for marked in ((), [d.vertex_count]):
                ops = build_reflections(d, 1.8, marked)
                fast = szegedy_spectrum(d, 1.8, marked)
                slow = dense_spectrum(ops)
                assert fast.total == pytest.approx(1.0, abs=1e-9)
                assert np.allclose(_moments(fast, 12), _moments(slow, 12), atol=1e-9)

    def test_moments_match_matrix_powers(self):
        d = random_tree(20, 5, 3, 3)
        ops = build_reflections(d, 2.0)
        spec = szegedy_spectrum(d, 2.0)
        e0 = ops.start_state()
        U = ops.unitary
        v = e0.copy()
        for k in range(8):
            assert _moments(spec, k + 1)[k] == pytest.approx(e0 @ v, abs=1e-9)
            v = U @ v

    def test_no_weight_at_zero_without_marks(self):
        for d in _batch(3, 8):
            spec = szegedy_spectrum(d, 2.0)
            assert spec.mass_near(0.0, 1e-8) <= 1e-9

    def test_marked_root(self):
        spec = szegedy_spectrum(path_graph(3), 1.0, [1])
        assert spec.phases.tolist() == [0.0] and spec.weights.tolist() == [1.0]

    def test_edgeless(self):
        assert szegedy_spectrum(single_vertex(), 1.0).phases.tolist() == [math.pi]
        assert start_spectrum(single_vertex(), 1.0, route="dense").phases.tolist() == [math.pi]

    def test_unknown_route(self):
        with pytest.raises(DomainError):
            start_spectrum(path_graph(2), 1.0, route="qr")


class TestCorrespondence:
    def test_batch(self):
        for d in _batch(4, 20, 60):
            ops = build_reflections(d, math.sqrt(2 * d.depth))
            assert verify_szegedy_correspondence(ops).passed
            assert verify_one_eigenspace(ops).passed

    def test_path_two_edges(self):
        ops = build_reflections(path_graph(3), 1.0)
        rep = verify_one_eigenspace(ops)
        assert rep.details["projection"] <= 1e-12
        assert rep.details["intersection_dim"] == 0


class TestAbsorbingWalk:
    def test_corners_alpha_two(self):
        for d in (path_graph(2), path_graph(5), LayeredDag(6, [(1, 2), (2, 3), (2, 4), (3, 5), (4, 6)])):
            aw = fundamental_matrix(d, 2.0)
            V = d.vertex_count
            assert aw.d1 == 1
            assert aw.beta == pytest.approx(0.2)
            assert aw.N[V, V] == pytest.approx(1.25, abs=1e-9)
            assert aw.N[0, 0] == pytest.approx(6.25, abs=1e-9)

    def test_constant_columns(self):
        for d in _batch(5):
            alpha = 1.7
            aw = fundamental_matrix(d, alpha)
            V = d.vertex_count
            assert np.allclose(aw.N_tilde[:, V], 1.0 / aw.d1)
            assert np.allclose(aw.N_tilde[:V, 0], alpha**2 + 1.0 / aw.d1)

    def test_path_three_entries(self):
        aw = fundamental_matrix(path_graph(3), 1.0)
        assert aw.N_tilde[1, 1] == pytest.approx(3.0)
        assert aw.N_tilde[2, 2] == pytest.approx(4.0)
        assert aw.N_tilde[1, 2] == pytest.approx(3.0)

    def test_structure(self):
        for d in _batch(6, 8):
            aw = fundamental_matrix(d, 1.3)
            V = d.vertex_count
            leak = 1.0 - aw.Q.sum(axis=1)
            assert np.allclose(leak[:V], 0.0)
            assert leak[V] == pytest.approx(1.0 - aw.beta)
            assert np.allclose(aw.N @ (np.eye(V + 1) - aw.Q), np.eye(V + 1), atol=1e-9)
            assert np.allclose(aw.N_tilde, aw.N_tilde.T, atol=1e-9)

    def test_checks_pass(self):
        for d in _batch(7, 16, 50):
            a = math.sqrt(2 * d.depth)
            assert verify_N_corners(d, a).passed
            assert verify_harmonic_columns(d, a).passed
            assert verify_dag_bound(d, a).passed
            assert verify_K_identity(d, a).passed
            assert verify_K_bounds(d, a).passed
            if d.is_tree:
                assert verify_tree_formula(d, a).passed

    def test_tree_formula_needs_tree(self):
        with pytest.raises(DomainError):
            verify_tree_formula(LayeredDag(4, [(1, 2), (1, 3), (2, 4), (3, 4)]), 1.0)

    def test_edgeless_rejected(self):
        with pytest.raises(DomainError):
            fundamental_matrix(single_vertex(), 1.0)


class TestResistance:
    def test_path(self):
        assert effective_resistance(path_graph(3), 3) == pytest.approx(2.0)
        assert effective_resistance(path_graph(3), 1) == 0.0

    def test_tree_depth(self):
        for t in _batch(8, 10, 40, kind="tree"):
            rd = resistance_data(t)
            assert np.allclose(rd.resistance, t.layers, atol=1e-9)
            assert np.array_equal(rd.lca_depth, lca_depth_table(t))

    def test_rayleigh_monotone(self):
        t = LayeredDag(5, [(1, 2), (1, 3), (2, 4), (3, 5)])
        chord = LayeredDag(5, [(1, 2), (1, 3), (2, 4), (3, 5), (2, 5)])
        for i in t.vertices:
            assert effective_resistance(chord, i) <= effective_resistance(t, i) + 1e-12
        assert effective_resistance(chord, 5) < 2.0

    def test_potential_bounds(self):
        for d in _batch(9, 8):
            if d.vertex_count < 2:
                continue
            phi = harmonic_potential(d, d.vertex_count, 1)
            assert phi.min() >= -1e-12 and phi.max() <= 1.0 + 1e-12
            assert phi[d.vertex_count - 1] == pytest.approx(1.0)

    def test_same_endpoints(self):
        with pytest.raises(DomainError):
            harmonic_potential(path_graph(3), 2, 2)


class TestTopOverlap:
    def test_path_two_edges(self):
        assert top_pair_overlap(build_gram(path_graph(3), 2.0)) >= 2.0 / 3.0

    def test_batch_at_threshold(self):
        for t in _batch(10, 20, 60, kind="tree"):
            rep = verify_top_overlap(t, math.sqrt(2 * t.depth))
            assert rep.passed and rep.details["overlap"] >= 2.0 / 3.0

    def test_check_needs_n(self):
        with pytest.raises(DomainError):
            top_pair_overlap(build_gram(path_graph(3), 2.0), check=True)

    def test_check_raises_below_threshold(self):
        # far below the threshold alpha the overlap collapses
        g = build_gram(path_graph(12), 0.05)
        val = top_pair_overlap(g)
        assert val < 2.0 / 3.0
        top_pair_overlap(g, n=1, check=False)
        with pytest.raises(PropertyViolation):
            top_pair_overlap(build_gram(path_graph(12), 0.05), n=0, check=True)


def test_report_helpers():
    a = VerificationReport("x", 1, 0.0, True)
    b = VerificationReport("x", 2, 0.5, False)
    m = a.merge(b)
    assert m.instances == 3 and m.max_violation == 0.5 and not m.passed
    assert set(m.to_dict()) == {"lemma", "instances", "max_violation", "pass"}
    assert a.raise_if_failed() is a
    with pytest.raises(PropertyViolation):
        b.raise_if_failed()
