import numpy as np
import pytest

from probembed.exceptions import DataError
from probembed.linalg import pairwise_sq_dists
from probembed.meanfield import (
    CaviState,
    cavi_sweep,
    cavi_update,
    cavity_covariance,
    cavity_distance,
    expected_cavity_distance,
    expected_laplacian,
    full_covariance,
)
from probembed.rng import SeededRng


def random_state(seed, n=10, dim=5, beta=2.0, prior=0.3):
    rng = np.random.default_rng(seed)
    d2 = pairwise_sq_dists(rng.normal(size=(n, dim)))
    q = rng.random((n, n))
    q = (q + q.T) / 2.0
    np.fill_diagonal(q, 0.0)
    return CaviState(edge_probs=q, prior=np.full((n, n), prior),
                     dist_sq=d2, dim=dim, beta=beta)


class TestCaviState:
    def test_defaults_and_properties(self):
        state = random_state(0)
        assert state.n_nodes == 10
        assert state.rho == 1.0 / 5  # defaults to 1/dim
        custom = CaviState(edge_probs=np.zeros((3, 3)),
                           prior=np.full((3, 3), 0.5),
                           dist_sq=np.zeros((3, 3)), dim=4, rho=0.7)
        assert custom.rho == 0.7

    def test_validation(self):
        base = dict(prior=np.full((2, 2), 0.5), dist_sq=np.zeros((2, 2)),
                    dim=3)
        with pytest.raises(DataError, match=r"\[0, 1\]"):
            CaviState(edge_probs=np.full((2, 2), 1.5), **base)
        with pytest.raises(DataError, match="strictly inside"):
            CaviState(edge_probs=np.zeros((2, 2)),
                      prior=np.full((2, 2), 1.0),
                      dist_sq=np.zeros((2, 2)), dim=3)
        with pytest.raises(DataError, match="dim"):
            CaviState(edge_probs=np.zeros((2, 2)),
                      prior=np.full((2, 2), 0.5),
                      dist_sq=np.zeros((2, 2)), dim=0)
        with pytest.raises(DataError, match="beta"):
            CaviState(edge_probs=np.zeros((2, 2)),
                      prior=np.full((2, 2), 0.5),
                      dist_sq=np.zeros((2, 2)), dim=3, beta=0.0)
        with pytest.raises(DataError):
            CaviState(edge_probs=np.zeros((2, 2)),
                      prior=np.full((2, 2), 0.5),
                      dist_sq=-np.ones((2, 2)) + np.eye(2), dim=3)


class TestCovariances:
    def test_edgeless_covariance_is_scaled_identity(self):
        state = CaviState(edge_probs=np.zeros((4, 4)),
                          prior=np.full((4, 4), 0.5),
                          dist_sq=np.zeros((4, 4)), dim=2, beta=5.0)
        np.testing.assert_allclose(full_covariance(state), np.eye(4) / 5.0,
                                   atol=1e-12)

    def test_single_edge_hand_inverse(self):
        # K2 with q = 1: precision = beta I + 2 rho [[1,-1],[-1,1]]
        q = np.array([[0.0, 1.0], [1.0, 0.0]])
        state = CaviState(edge_probs=q, prior=np.full((2, 2), 0.5),
                          dist_sq=np.zeros((2, 2)), dim=2, rho=0.5, beta=3.0)
        precision = 3.0 * np.eye(2) + np.array([[1.0, -1.0], [-1.0, 1.0]])
        np.testing.assert_allclose(full_covariance(state),
                                   np.linalg.inv(precision), atol=1e-12)

    def test_matches_dense_inverse(self):
        state = random_state(1, n=6)
        expected = np.linalg.inv(
            state.beta * np.eye(6) + expected_laplacian(state))
        np.testing.assert_allclose(full_covariance(state), expected,
                                   atol=1e-9)

    def test_disconnected_blocks_stay_independent(self):
        q = np.zeros((4, 4))
        q[0, 1] = q[1, 0] = 0.8
        q[2, 3] = q[3, 2] = 0.6
        state = CaviState(edge_probs=q, prior=np.full((4, 4), 0.5),
                          dist_sq=np.zeros((4, 4)), dim=2, beta=1.0)
        cov = full_covariance(state)
        np.testing.assert_allclose(cov[:2, 2:], 0.0, atol=1e-12)

    def test_cavity_removes_exactly_one_edge(self):
        state = random_state(2, n=5)
        lap = expected_laplacian(state, exclude=(1, 3))
        phi = np.zeros(5)
        phi[1], phi[3] = 1.0, -1.0
        rank1 = 2.0 * state.rho * state.edge_probs[1, 3] * np.outer(phi, phi)
        np.testing.assert_allclose(expected_laplacian(state), lap + rank1,
                                   atol=1e-12)
        cav = cavity_covariance(state, 1, 3)
        expected = np.linalg.inv(state.beta * np.eye(5) + lap)
        np.testing.assert_allclose(cav, expected, atol=1e-9)

    def test_cavity_distance_nonnegative_and_quadratic(self):
        state = random_state(3, n=7)
        for i, j in ((0, 1), (2, 6), (3, 4)):
            kappa = cavity_distance(state, i, j)
            cov = cavity_covariance(state, i, j)
            phi = np.zeros(7)
            phi[i], phi[j] = 1.0, -1.0
            np.testing.assert_allclose(kappa, phi @ cov @ phi, atol=1e-12)
            assert kappa > 0

    def test_pair_bounds(self):
        state = random_state(4, n=4)
        with pytest.raises(DataError):
            cavity_covariance(state, 0, 4)
        with pytest.raises(DataError):
            cavity_distance(state, 2, 2)


def test_determinant_update_identity():
    # adding edge (i, j) back to the cavity precision is a rank-one
    # update, so the determinants differ by 1 + 2 rho q kappa
    rng = np.random.default_rng(5)
    for trial in range(20):
        n = int(rng.integers(4, 16))
        state = random_state(100 + trial, n=n)
        i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
        full = state.beta * np.eye(n) + expected_laplacian(state)
        cavity = state.beta * np.eye(n) + expected_laplacian(state,
                                                             exclude=(i, j))
        kappa = cavity_distance(state, i, j)
        factor = 1.0 + 2.0 * state.rho * state.edge_probs[i, j] * kappa
        lhs = np.linalg.det(full)
        rhs = np.linalg.det(cavity) * factor
        np.testing.assert_allclose(lhs, rhs, rtol=1e-8)


def test_rank_one_downdate_recovers_full_covariance():
    # Sherman-Morrison on the cavity covariance reproduces the full one
    state = random_state(6, n=8)
    i, j = 2, 5
    cav = cavity_covariance(state, i, j)
    phi = np.zeros(8)
    phi[i], phi[j] = 1.0, -1.0
    weight = 2.0 * state.rho * state.edge_probs[i, j]
    kappa = float(phi @ cav @ phi)
    update = (weight / (1.0 + weight * kappa)) * np.outer(cav @ phi, cav @ phi)
    np.testing.assert_allclose(full_covariance(state), cav - update,
                               atol=1e-9)


class TestCaviUpdate:
    def test_hand_value(self):
        # edgeless cavity gives kappa = 2/beta = 0.7; the evidence term
        # is 2/10; a flat prior contributes nothing: sigmoid(0.5)
        state = CaviState(edge_probs=np.zeros((3, 3)),
                          prior=np.full((3, 3), 0.5),
                          dist_sq=2.0 * (np.ones((3, 3)) - np.eye(3)),
                          dim=10, beta=20.0 / 7.0)
        value = cavi_update(state, 0, 1)
        assert value == 0.6224593312018546

    def test_fixed_point_exact_at_flat_prior(self):
        # kappa = 2/beta = 0.5 exactly cancels d2/dim = 0.5, so the
        # update returns sigmoid(0) = 0.5 with no float error
        d2 = np.array([[0.0, 2.0], [2.0, 0.0]])
        state = CaviState(edge_probs=np.array([[0.0, 0.5], [0.5, 0.0]]),
                          prior=np.full((2, 2), 0.5), dist_sq=d2,
                          dim=4, beta=4.0)
        assert cavi_update(state, 0, 1) == 0.5
        result = cavi_sweep(state)
        assert result.converged
        assert result.state.edge_probs[0, 1] == 0.5

    def test_balanced_evidence_returns_prior(self):
        # when the cavity distance equals the scaled evidence the update
        # is the logit/sigmoid roundtrip of the prior
        d2 = np.array([[0.0, 2.0], [2.0, 0.0]])
        for pi in (0.3, 0.7, 0.9):
            state = CaviState(edge_probs=np.zeros((2, 2)),
                              prior=np.full((2, 2), pi), dist_sq=d2,
                              dim=4, beta=4.0)
            assert abs(cavi_update(state, 0, 1) - pi) <= 5e-16

    def test_coincident_points_saturate_toward_edge(self):
        # zero observed distance with a weak ridge: overwhelming
        # evidence for the edge
        state = CaviState(edge_probs=np.zeros((2, 2)),
                          prior=np.full((2, 2), 0.5),
                          dist_sq=np.zeros((2, 2)), dim=4, beta=0.01)
        assert cavi_update(state, 0, 1) > 0.999999

    def test_huge_dimension_recovers_prior(self):
        # rho = 1/d kills the graph term and the evidence balances at
        # dist_sq = kappa * d, so every update lands near the prior
        n, dim = 6, 10**6
        d2 = 2.0 * dim * (np.ones((n, n)) - np.eye(n))
        state = CaviState(edge_probs=np.full((n, n), 0.5) - 0.5 * np.eye(n),
                          prior=np.full((n, n), 0.3), dist_sq=d2,
                          dim=dim, beta=1.0)
        result = cavi_sweep(state, max_sweeps=1)
        off = ~np.eye(n, dtype=bool)
        np.testing.assert_allclose(result.state.edge_probs[off], 0.3,
                                   atol=1e-4)

    def test_mc_mode_agrees_with_plugin_at_certain_edges(self):
        # with all edge probabilities 0 or 1 the posterior is a point
        # mass, so sampling is estimation-error free
        q = np.array([[0.0, 1.0, 0.0],
                      [1.0, 0.0, 0.0],
                      [0.0, 0.0, 0.0]])
        state = CaviState(edge_probs=q, prior=np.full((3, 3), 0.5),
                          dist_sq=np.ones((3, 3)) - np.eye(3), dim=3,
                          beta=2.0)
        plugin = expected_cavity_distance(state, 0, 2, mode="plugin")
        mc = expected_cavity_distance(state, 0, 2, mode="mc", n_samples=8,
                                      rng=SeededRng(0))
        np.testing.assert_allclose(mc, plugin, atol=1e-12)

    def test_mc_mode_approaches_plugin_on_soft_edges(self):
        # plugin substitutes E[A] inside the inverse, so the two only
        # agree approximately; they must land in the same neighborhood
        state = random_state(7, n=5)
        plugin = cavi_update(state, 0, 1, mode="plugin")
        mc = cavi_update(state, 0, 1, mode="mc", n_samples=4000,
                         rng=SeededRng(1))
        assert abs(plugin - mc) < 0.1

    def test_mode_errors(self):
        state = random_state(8, n=4)
        with pytest.raises(DataError):
            expected_cavity_distance(state, 0, 1, mode="exact")
        with pytest.raises(DataError):
            expected_cavity_distance(state, 0, 1, mode="mc", n_samples=0)


class TestCaviSweep:
    def test_converges_on_random_instances(self):
        for seed in range(5):
            state = random_state(200 + seed)
            result = cavi_sweep(state, max_sweeps=200, tol=1e-5)
            assert result.converged
            assert result.change_trace[-1] < 1e-5
            q = result.state.edge_probs
            np.testing.assert_array_equal(q, q.T)
            assert np.abs(np.diag(q)).max() == 0.0

    def test_deterministic_in_plugin_mode(self):
        state = random_state(9)
        r1 = cavi_sweep(state)
        r2 = cavi_sweep(state)
        np.testing.assert_array_equal(r1.state.edge_probs,
                                      r2.state.edge_probs)
        assert r1.change_trace == r2.change_trace

    def test_respects_sweep_cap(self):
        state = random_state(10)
        result = cavi_sweep(state, max_sweeps=1, tol=0.0)
        assert not result.converged
        assert len(result.change_trace) == 1

    def test_input_errors(self):
        state = random_state(11)
        with pytest.raises(DataError):
            cavi_sweep(state, max_sweeps=0)
