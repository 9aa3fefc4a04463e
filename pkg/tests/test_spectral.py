import numpy as np
import pytest
from scipy.stats import matrix_normal, wishart

from probembed.exceptions import DataError
from probembed.linalg import pairwise_sq_dists
from probembed.moments import pca_moment
from probembed.spectral import (
    covariance_map,
    gplvm_loglik,
    moment_for,
    precision_map,
    scaled_wishart_loglik,
    spectral_embedding,
    wishart_kl,
    wishart_loglik,
)


def spd(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n + 2))
    return m @ m.T / (n + 2)


class TestWishartLoglik:
    def test_identity_arguments(self):
        # trace(I) + logdet(I) = n, so the value is -(dof/2) n
        n, dof = 4, 7.0
        assert wishart_loglik(np.eye(n), np.eye(n), dof) == -0.5 * dof * n

    def test_differs_from_scipy_by_constant_in_mean(self):
        # exp-family check: for fixed observation the dropped terms do
        # not involve the scale matrix, so the gap to scipy's full
        # logpdf is the same for every mean
        rng = np.random.default_rng(0)
        n, dof = 4, 9.0
        t = spd(1, n)
        gaps = []
        for seed in range(5):
            m = spd(100 + seed, n)
            full = wishart.logpdf(dof * t, df=dof, scale=m)
            gaps.append(full - wishart_loglik(t, m, dof))
        assert np.std(gaps) < 1e-8

    def test_singular_observation_allowed(self):
        u = np.ones((3, 1))
        t = u @ u.T
        val = wishart_loglik(t, np.eye(3), 5.0)
        assert np.isfinite(val)

    def test_rejects_bad_dof_and_indefinite_mean(self):
        with pytest.raises(DataError):
            wishart_loglik(np.eye(2), np.eye(2), 0.0)
        with pytest.raises(Exception):
            wishart_loglik(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]), 3.0)


def test_scaled_wishart_requires_enough_pseudo_observations():
    t = spd(2, 5)
    m = spd(3, 5)
    with pytest.raises(DataError, match="at least"):
        scaled_wishart_loglik(t, m, 4.0)
    # at rho = n the calls agree with the plain version at dof = rho
    assert scaled_wishart_loglik(t, m, 5.0) == wishart_loglik(t, m, 5.0)


class TestWishartKl:
    def test_zero_iff_equal(self):
        q = spd(4, 4)
        assert abs(wishart_kl(q, q, 10.0)) < 1e-10
        p = spd(5, 4)
        assert wishart_kl(q, p, 10.0) > 0

    def test_univariate_closed_form(self):
        # n = 1 reduces to a Gamma KL computable by hand
        q = np.array([[2.0]])
        p = np.array([[3.0]])
        dof = 6.0
        expected = 0.5 * dof * (np.log(3.0) - np.log(2.0) + 2.0 / 3.0 - 1.0)
        np.testing.assert_allclose(wishart_kl(q, p, dof), expected, atol=1e-12)

    def test_monte_carlo_estimate(self):
        # KL(W(q, dof) || W(p, dof)) estimated by sampling from the
        # first law; constants cancel between the two logpdfs
        rng = np.random.default_rng(6)
        n, dof = 2, 5.0
        q = spd(7, n)
        p = spd(8, n)
        draws = wishart.rvs(df=dof, scale=q, size=20000, random_state=rng)
        est = np.mean(wishart.logpdf(draws.transpose(1, 2, 0), df=dof, scale=q)
                      - wishart.logpdf(draws.transpose(1, 2, 0), df=dof, scale=p))
        exact = wishart_kl(q, p, dof)
        assert abs(est - exact) / exact < 0.05

    def test_matches_negative_loglik_up_to_constant(self):
        q = spd(9, 3)
        dof = 7.0
        gaps = []
        for seed in range(4):
            p = spd(200 + seed, 3)
            gaps.append(wishart_kl(q, p, dof) + wishart_loglik(q, p, dof))
        assert np.std(gaps) < 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            wishart_kl(np.eye(2), np.eye(3), 4.0)


class TestCovarianceMap:
    def test_diagonal_example(self):
        # eigenvalues (4, 2, 1, 1), q = 1: noise = 4/3 and the single
        # column is e1 * sqrt(4 - 4/3)
        moment = np.diag([4.0, 2.0, 1.0, 1.0])
        result = covariance_map(moment, 1)
        np.testing.assert_allclose(result.noise_hat, 4.0 / 3.0, atol=1e-12)
        expected = np.zeros((4, 1))
        expected[0, 0] = np.sqrt(8.0 / 3.0)
        np.testing.assert_allclose(result.embedding, expected, atol=1e-12)
        assert not result.clamped

    def test_reconstruction_identity(self):
        # X X' + noise I restricted to the top-q eigenspace reproduces
        # the moment there
        c = spd(10, 6)
        result = covariance_map(c, 2)
        vals, vecs = np.linalg.eigh(c)
        top = vecs[:, ::-1][:, :2]
        lhs = top.T @ (result.embedding @ result.embedding.T
                       + result.noise_hat * np.eye(6)) @ top
        rhs = top.T @ c @ top
        np.testing.assert_allclose(lhs, rhs, atol=1e-8)

    def test_rank_deficient_moment_gives_zero_trailing_column(self):
        u = np.array([[1.0], [0.0], [0.0]])
        moment = 3.0 * (u @ u.T)  # rank one
        result = covariance_map(moment, 2)
        # noise estimate is zero, the second radicand is exactly zero,
        # and nothing goes non-finite
        assert result.noise_hat == 0.0
        np.testing.assert_allclose(result.embedding[:, 1], 0.0, atol=1e-12)
        assert np.isfinite(result.embedding).all()

    def test_q_bounds(self):
        with pytest.raises(DataError):
            covariance_map(np.eye(3), 0)
        with pytest.raises(DataError):
            covariance_map(np.eye(3), 3)


class TestPrecisionMap:
    def test_diagonal_example(self):
        # eigenvalues (1, 2, 4), q = 1 picks the smallest; the inverse
        # noise estimate is 2 / (2 + 4) = 1/3 and the column is
        # e1 * sqrt(1/1 - 1/3)
        moment = np.diag([1.0, 2.0, 4.0])
        result = precision_map(moment, 1, ridge=0.0)
        np.testing.assert_allclose(result.noise_hat, 1.0 / 3.0, atol=1e-12)
        expected = np.zeros((3, 1))
        expected[0, 0] = np.sqrt(2.0 / 3.0)
        np.testing.assert_allclose(np.abs(result.embedding), np.abs(expected),
                                   atol=1e-12)

    def test_drop_null_skips_laplacian_kernel(self):
        lap = np.array([[1.0, -1.0, 0.0],
                        [-1.0, 2.0, -1.0],
                        [0.0, -1.0, 1.0]])
        result = precision_map(lap, 1, drop_null=True)
        # the selected eigenpair is the Fiedler vector, orthogonal to 1
        assert abs(result.embedding[:, 0].sum()) < 1e-6
        assert result.used_components[0] != 2  # not the null index

    def test_smallest_kept_first_ordering(self):
        moment = np.diag([1.0, 2.0, 4.0, 8.0])
        result = precision_map(moment, 2, ridge=0.0)
        # columns ordered smallest eigenvalue first: scales sqrt(1/1-b)
        # then sqrt(1/2-b) with b = 2/(4+8)
        b = 2.0 / 12.0
        np.testing.assert_allclose(
            np.abs(result.embedding).max(axis=0),
            [np.sqrt(1.0 - b), np.sqrt(0.5 - b)], atol=1e-12)

    def test_q_bounds_with_drop(self):
        with pytest.raises(DataError):
            precision_map(np.eye(3), 3)
        with pytest.raises(DataError):
            precision_map(np.eye(3), 2, drop_null=True)


def test_pca_mca_agree_at_full_latent_dimension():
    # with q = n - 1 both noise estimates reduce to the same single
    # trailing eigenvalue, so the maps coincide up to column signs
    rng = np.random.default_rng(11)
    for trial in range(5):
        y = rng.normal(size=(8, 12))
        c = pca_moment(y, center=False).values  # full rank, invertible
        cov = covariance_map(c, 7)
        prec = precision_map(np.linalg.inv(c), 7, ridge=0.0)
        # compare squared column norms (signs and order may differ)
        a = np.sort(np.linalg.norm(cov.embedding, axis=0))
        b = np.sort(np.linalg.norm(prec.embedding, axis=0))
        np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-8)


def test_gplvm_matches_scipy_matrix_normal():
    rng = np.random.default_rng(12)
    n, d = 6, 3
    y = rng.normal(size=(n, d))
    k = spd(13, n) + np.eye(n)
    mine = gplvm_loglik(y, k)
    ref = matrix_normal.logpdf(y, rowcov=k, colcov=np.eye(d))
    np.testing.assert_allclose(mine, ref, atol=1e-9)


def test_gplvm_shape_mismatch():
    with pytest.raises(DataError):
        gplvm_loglik(np.zeros((4, 2)), np.eye(3))


class TestSpectralEmbedding:
    def test_pca_matches_covariance_map(self):
        y = np.random.default_rng(14).normal(size=(15, 6))
        via_algo = spectral_embedding(y, "pca", n_components=2)
        direct = covariance_map(pca_moment(y), 2)
        np.testing.assert_allclose(via_algo.embedding, direct.embedding,
                                   atol=1e-12)

    def test_cmds_duality_with_pca(self):
        y = np.random.default_rng(15).normal(size=(12, 5))
        pca = spectral_embedding(y, "pca", n_components=2)
        cmds = spectral_embedding(y, "cmds", n_components=2)
        # same subspace; compare Gram matrices of the embeddings
        np.testing.assert_allclose(
            pca.embedding @ pca.embedding.T * y.shape[1],
            cmds.embedding @ cmds.embedding.T, atol=1e-6)

    def test_all_algorithms_produce_finite_embeddings(self):
        y = np.random.default_rng(16).normal(size=(20, 4))
        for algo in ("pca", "cmds", "isomap", "kpca", "diffusion", "le", "lle"):
            params = {}
            if algo in ("isomap", "le", "lle"):
                params["n_neighbors"] = 6
            result = spectral_embedding(y, algo, n_components=2, **params)
            assert result.embedding.shape == (20, 2)
            assert np.isfinite(result.embedding).all()

    def test_ingestion_paths(self):
        y = np.random.default_rng(17).normal(size=(10, 3))
        k = y @ y.T
        viak = spectral_embedding(None, "kernel", n_components=2, matrix=k)
        assert viak.embedding.shape == (10, 2)
        lap = np.array([[1.0, -1.0, 0.0],
                        [-1.0, 2.0, -1.0],
                        [0.0, -1.0, 1.0]])
        vial = spectral_embedding(None, "laplacian", n_components=1, matrix=lap)
        assert vial.embedding.shape == (3, 1)

    def test_unknown_algo_and_params(self):
        y = np.zeros((5, 2))
        with pytest.raises(DataError, match="unknown spectral"):
            spectral_embedding(y, "umap")
        with pytest.raises(DataError, match="unknown parameters"):
            spectral_embedding(y, "pca", flavor="fast")
        with pytest.raises(DataError, match="matrix"):
            moment_for(None, "kernel")
