"""Gaussian processes over sampled and expected neighborhood graphs.

The generative chain runs latent coordinates -> random adjacency ->
graph Laplacian -> covariance -> observed feature columns.  This module
covers every link: adjacency sampling from the latent kernels, Matern
covariances built from Laplacians, hyperparameter fitting by marginal
likelihood ascent, conditional prediction of unseen rows, and the
directed-graph covariance constructions (Gaussian Bayes nets and their
convolutional generalization).
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .affinity import AffinityMatrix, latent_kernel, umap_affinities
from .exceptions import DataError, NumericalError
from .graphs import laplacian_matrix
from .linalg import matrix_exponential_sym, solve_psd, sym_eigendecomposition
from .rng import as_generator
from .validation import (
    as_float_array,
    check_data_matrix,
    check_embedding,
    check_square,
    check_symmetric,
)


@dataclass(frozen=True)
class AdjacencySample:
    """A drawn adjacency: directed draw and its undirected union."""

    a_prime: np.ndarray
    a_sym: np.ndarray


@dataclass(frozen=True)
class GraphGPHyper:
    """Hyperparameters of the graph GP covariances.

    `beta` is the ridge of the inverse-Laplacian (Matern-1) kernel and
    `t` the diffusion time of the exponential (Matern-infinity) kernel.
    The fitted observation model uses `kappa`, `sigma_s` and `sigma_n`
    with the reparameterization beta = 2 / kappa^2.
    """

    beta: float = 1.0
    t: float = 1.0
    kappa: float = 1.0
    sigma_s: float = 1.0
    sigma_n: float = 0.1


@dataclass(frozen=True)
class GraphCovariance:
    """A covariance over graph nodes with its construction tag."""

    values: np.ndarray
    construction: str
    normalized: bool = False


def build_laplacian(adjacency, kind="ordinary") -> np.ndarray:
    """Graph Laplacian of a symmetric adjacency (`ordinary`/`normalized`).

    Isolated nodes under the normalized form contribute identity rows
    (degrees are pseudo-inverted, never divided by zero).
    """
    return laplacian_matrix(adjacency, kind)


def matern_covariance(laplacian, hyper: GraphGPHyper, nu=1) -> GraphCovariance:
    """Unit-scale Matern covariance of a graph Laplacian.

    nu=1 gives (L + beta I)^{-1}, computed by solving against the
    ridged Laplacian; nu="inf" (or numpy inf) gives exp(-t L).
    """
    l = check_symmetric(laplacian, "laplacian")
    if nu == 1:
        if not hyper.beta > 0:
            raise DataError(f"beta must be positive, got {hyper.beta}")
        ridged = l + hyper.beta * np.eye(l.shape[0])
        values = solve_psd(ridged, np.eye(l.shape[0]), "ridged laplacian")
        values = (values + values.T) / 2.0
        return GraphCovariance(values, f"matern1(beta={hyper.beta})")
    if nu in ("inf", np.inf):
        if hyper.t < 0:
            raise DataError(f"diffusion time must be non-negative, got {hyper.t}")
        values = matrix_exponential_sym(l, -hyper.t)
        return GraphCovariance(values, f"materninf(t={hyper.t})")
    raise DataError(f"nu must be 1 or 'inf', got {nu!r}")


def normalize_to_correlation(cov: GraphCovariance) -> GraphCovariance:
    """Rescale a covariance to unit diagonal.

    Requires a strictly positive diagonal; a zero (or negative)
    diagonal entry is an error naming the node.
    """
    values = check_symmetric(cov.values, "covariance")
    diag = np.diag(values)
    bad = np.nonzero(diag <= 0)[0]
    if len(bad):
        raise DataError(
            f"covariance diagonal must be strictly positive; "
            f"offending nodes {bad.tolist()}"
        )
    inv = 1.0 / np.sqrt(diag)
    out = (inv[:, None] * values) * inv[None, :]
    out = (out + out.T) / 2.0
    np.fill_diagonal(out, 1.0)
    return GraphCovariance(out, cov.construction, normalized=True)


def sample_adjacency(x, rng, family="umap", a=1.0, b=1.0) -> AdjacencySample:
    """Draw a random adjacency from the latent kernel at `x`.

    The Bernoulli family draws each upper-triangle entry independently
    with probability w_ij; the categorical families draw one neighbor
    per row from the row distribution.  `a_sym` is the undirected union
    of the directed draw.
    """
    x = check_embedding(x, "latent coordinates")
    gen = as_generator(rng)
    w = latent_kernel(x, family, a=a, b=b).probs
    n = x.shape[0]
    a_prime = np.zeros((n, n))
    if family == "umap":
        upper = np.triu_indices(n, k=1)
        draws = gen.random(len(upper[0]))
        a_prime[upper] = (draws < w[upper]).astype(float)
    else:
        for i in range(n):
            j = gen.choice(n, p=w[i])
            a_prime[i, j] = 1.0
    a_sym = np.maximum(a_prime, a_prime.T)
    return AdjacencySample(a_prime=a_prime, a_sym=a_sym)


def prior_sample(x, hyper: GraphGPHyper, rng, n_cols=1, family="umap",
                 a=1.0, b=1.0, laplacian="normalized", nu="inf"):
    """Sample feature columns from the full generative chain at fixed `x`.

    Draws one adjacency, builds its Laplacian and Matern covariance,
    and samples `n_cols` zero-mean Gaussian columns with that
    covariance.  Returns (AdjacencySample, columns) with columns shaped
    (n, n_cols).  Deterministic for a fixed rng seed.
    """
    gen = as_generator(rng)
    if n_cols < 1:
        raise DataError(f"n_cols must be >= 1, got {n_cols}")
    adjacency = sample_adjacency(x, gen, family=family, a=a, b=b)
    lap = laplacian_matrix(adjacency.a_sym, laplacian)
    cov = matern_covariance(lap, hyper, nu).values
    decomp = sym_eigendecomposition(cov)
    factor = decomp.eigenvectors * np.sqrt(np.clip(decomp.eigenvalues, 0.0, None))
    columns = factor @ gen.standard_normal((x.shape[0], int(n_cols)))
    return adjacency, columns


def expected_adjacency(affinity) -> np.ndarray:
    """Edge-probability weights usable as an expected adjacency."""
    if isinstance(affinity, AffinityMatrix):
        p = affinity.probs
    else:
        p = as_float_array(affinity, "affinity")
    p = (p + p.T) / 2.0
    np.fill_diagonal(p, 0.0)
    return p


def _model_eigencoords(laplacians, y):
    """Eigenbasis data for the fitted covariance on each Laplacian."""
    prepared = []
    for lap in laplacians:
        lap = check_symmetric(lap, "laplacian")
        decomp = sym_eigendecomposition(lap)
        projected = decomp.eigenvectors.T @ y
        weights = np.sum(projected * projected, axis=1)
        prepared.append((decomp.eigenvalues, weights))
    return prepared


def _mean_loglik_and_grad(prepared, d, kappa, sigma_s, sigma_n):
    """Mean per-entry log-likelihood and its log-parameter gradient."""
    total = 0.0
    grad = np.zeros(3)  # order: log kappa, log sigma_s, log sigma_n
    n = len(prepared[0][0])
    for eigenvalues, weights in prepared:
        p = 1.0 / (eigenvalues + 2.0 / kappa**2)
        c = sigma_s**2 * p + sigma_n**2
        total += -0.5 * float(np.sum(weights / c)) \
            - 0.5 * d * float(np.sum(np.log(c))) \
            - 0.5 * n * d * np.log(2.0 * np.pi)
        dl_dc = weights / (2.0 * c**2) - d / (2.0 * c)
        dc_dkappa = sigma_s**2 * (4.0 / kappa**3) * p**2
        dc_dsigma_s = 2.0 * sigma_s * p
        dc_dsigma_n = 2.0 * sigma_n
        grad[0] += float(np.sum(dl_dc * dc_dkappa)) * kappa
        grad[1] += float(np.sum(dl_dc * dc_dsigma_s)) * sigma_s
        grad[2] += float(np.sum(dl_dc * dc_dsigma_n)) * sigma_n
    scale = len(prepared) * n * d
    return total / len(prepared), grad / scale


def fit_hyperparams(y_train, laplacians, init: Optional[GraphGPHyper] = None,
                    max_iter=300, learning_rate=0.05):
    """Fit (kappa, sigma_s, sigma_n) by marginal-likelihood ascent.

    The model is a matrix normal over the training rows with column
    covariance sigma_s^2 (L + (2/kappa^2) I)^{-1} + sigma_n^2 I.
    `laplacians` is one Laplacian (the expected graph) or a sequence of
    them (sampled graphs, averaged log-likelihood).  Plain gradient
    ascent runs on the logarithms of the three parameters with the
    per-entry-normalized gradient; the returned trace holds the full
    log-likelihood per iteration.  A non-finite objective raises
    NumericalError with the offending parameter values.
    """
    y = check_data_matrix(y_train, "training data")
    if isinstance(laplacians, np.ndarray) and laplacians.ndim == 2:
        laplacians = [laplacians]
    laplacians = list(laplacians)
    if not laplacians:
        raise DataError("at least one Laplacian is required")
    for lap in laplacians:
        if np.asarray(lap).shape != (y.shape[0], y.shape[0]):
            raise DataError(
                f"laplacian shape {np.asarray(lap).shape} does not match "
                f"{y.shape[0]} training rows"
            )
    if init is None:
        init = GraphGPHyper()
    if min(init.kappa, init.sigma_s, init.sigma_n) <= 0:
        raise DataError("kappa, sigma_s and sigma_n must start positive")
    prepared = _model_eigencoords(laplacians, y)
    d = y.shape[1]
    log_params = np.log([init.kappa, init.sigma_s, init.sigma_n])
    trace = []
    # non-finite objectives are detected and raised below, so the float
    # warnings on the way there are just noise
    with np.errstate(over="ignore", invalid="ignore"):
        for iteration in range(int(max_iter)):
            kappa, sigma_s, sigma_n = np.exp(log_params)
            loglik, grad = _mean_loglik_and_grad(prepared, d, kappa, sigma_s,
                                                 sigma_n)
            if not np.isfinite(loglik) or not np.all(np.isfinite(grad)):
                raise NumericalError(
                    f"hyperparameter objective became non-finite at iteration "
                    f"{iteration}: kappa={kappa:.3e}, sigma_s={sigma_s:.3e}, "
                    f"sigma_n={sigma_n:.3e}"
                )
            trace.append(float(loglik))
            log_params = log_params + learning_rate * grad
        kappa, sigma_s, sigma_n = np.exp(log_params)
    fitted = replace(init, kappa=float(kappa), sigma_s=float(sigma_s),
                     sigma_n=float(sigma_n), beta=float(2.0 / kappa**2))
    return fitted, trace


def fitted_covariance(laplacian, hyper: GraphGPHyper) -> np.ndarray:
    """Signal covariance sigma_s^2 (L + (2/kappa^2) I)^{-1} (no noise)."""
    base = matern_covariance(laplacian, replace(hyper, beta=2.0 / hyper.kappa**2),
                             nu=1).values
    return hyper.sigma_s**2 * base


def predict_unseen(y_train, c_train, c_cross, c_test, hyper: GraphGPHyper):
    """Conditional mean and per-point variance for unseen nodes.

    `c_train`, `c_cross`, `c_test` are the train/train, train/test and
    test/test blocks of a joint noiseless covariance.  The mean is
    C_cross' (C_train + sigma_n^2 I)^{-1} Y_train; the variance is the
    diagonal of the Schur complement plus sigma_n^2.
    """
    y = check_data_matrix(y_train, "training data")
    c_train = check_symmetric(c_train, "train covariance block")
    c_test = check_symmetric(c_test, "test covariance block")
    c_cross = as_float_array(c_cross, "cross covariance block")
    n_train, n_test = c_train.shape[0], c_test.shape[0]
    if y.shape[0] != n_train:
        raise DataError(f"training data has {y.shape[0]} rows, block has {n_train}")
    if c_cross.shape != (n_train, n_test):
        raise DataError(
            f"cross block must be {(n_train, n_test)}, got {c_cross.shape}"
        )
    gram = c_train + hyper.sigma_n**2 * np.eye(n_train)
    try:
        solved_y = solve_psd(gram, y, "train covariance")
        solved_cross = solve_psd(gram, c_cross, "train covariance")
    except NumericalError as exc:
        raise NumericalError(
            "train covariance block is singular; increase sigma_n"
        ) from exc
    mean = c_cross.T @ solved_y
    var = np.diag(c_test) - np.sum(c_cross * solved_cross, axis=0) + hyper.sigma_n**2
    return mean, var


@dataclass(frozen=True)
class PredictionResult:
    """Output of the full graph-GP prediction pipeline."""

    predictions: np.ndarray
    variances: np.ndarray
    hyper: GraphGPHyper
    fit_trace: list


def predict_features(y_train, y_test, n_neighbors=15, laplacian="normalized",
                     init: Optional[GraphGPHyper] = None, fit_max_iter=300,
                     fit_learning_rate=0.05, sigma_n_floor=1e-3) -> PredictionResult:
    """Predict test-row features from training rows through a shared graph.

    Pipeline: expected neighbor graph on the training rows alone ->
    hyperparameter fit -> expected graph over all rows -> joint fitted
    covariance -> conditional mean of the test block.  The fitted noise
    level is floored at `sigma_n_floor` before the conditional solve.

    A test row exactly equal to a training row is the same point, so it
    reuses that node rather than entering the graph as a twin; its
    prediction is the posterior at the node, which reproduces the
    observed features as sigma_n approaches the floor.
    """
    y_train = check_data_matrix(y_train, "training data")
    y_test = check_data_matrix(y_test, "test data")
    if y_train.shape[1] != y_test.shape[1]:
        raise DataError(
            f"train and test must share feature count, got "
            f"{y_train.shape[1]} vs {y_test.shape[1]}"
        )
    v_train, _ = umap_affinities(y_train, n_neighbors)
    l_train = laplacian_matrix(expected_adjacency(v_train), laplacian)
    hyper, trace = fit_hyperparams(y_train, l_train, init,
                                   max_iter=fit_max_iter,
                                   learning_rate=fit_learning_rate)
    if hyper.sigma_n < sigma_n_floor:
        hyper = replace(hyper, sigma_n=float(sigma_n_floor))
    matches = np.full(y_test.shape[0], -1)
    for row in range(y_test.shape[0]):
        hits = np.nonzero(np.all(y_train == y_test[row], axis=1))[0]
        if len(hits):
            matches[row] = hits[0]
    novel = np.nonzero(matches < 0)[0]
    y_full = np.vstack([y_train, y_test[novel]])
    v_full, _ = umap_affinities(y_full, n_neighbors)
    l_full = laplacian_matrix(expected_adjacency(v_full), laplacian)
    c_full = fitted_covariance(l_full, hyper)
    n_train = y_train.shape[0]
    node_idx = matches.copy()
    node_idx[novel] = n_train + np.arange(len(novel))
    mean, var = predict_unseen(
        y_train,
        c_full[:n_train, :n_train],
        c_full[:n_train, node_idx],
        c_full[np.ix_(node_idx, node_idx)],
        hyper,
    )
    return PredictionResult(predictions=mean, variances=var, hyper=hyper,
                            fit_trace=trace)


def bayesnet_covariance(parent_weights) -> GraphCovariance:
    """Covariance of a linear Gaussian network on a DAG.

    `parent_weights` must be strictly lower triangular with
    non-negative rows summing to 0 (roots) or 1 (children average
    their parents); node i is then distributed as a unit-variance
    Gaussian around the weighted mean of its parents, and the implied
    covariance is M M' with M = (I - A)^{-1}.
    """
    a = check_square(parent_weights, "parent weights")
    if np.abs(np.triu(a)).max() > 0:
        raise DataError("parent weights must be strictly lower triangular")
    if a.min() < 0:
        raise DataError("parent weights must be non-negative")
    sums = a.sum(axis=1)
    bad = np.nonzero((sums > 1e-8) & (np.abs(sums - 1.0) > 1e-8))[0]
    if len(bad):
        raise DataError(
            f"parent weight rows must sum to 0 or 1; offending rows {bad.tolist()}"
        )
    n = a.shape[0]
    m = solve_triangular(np.eye(n) - a, np.eye(n), lower=True)
    values = m @ m.T
    return GraphCovariance((values + values.T) / 2.0, "bayesnet")


def gcgp_covariance(a_sym, k, base) -> GraphCovariance:
    """Graph-convolutional covariance S^k C (S^k)'.

    S is the self-loop adjacency A + I under symmetric degree
    normalization.  k = 0 returns the base covariance unchanged; an
    edgeless graph leaves any k a no-op.
    """
    a = check_symmetric(a_sym, "adjacency")
    if a.min() < 0:
        raise DataError("adjacency weights must be non-negative")
    k = int(k)
    if k < 0:
        raise DataError(f"k must be non-negative, got {k}")
    base = check_symmetric(base, "base covariance")
    if base.shape != a.shape:
        raise DataError(f"base covariance shape {base.shape} != {a.shape}")
    a_tilde = a + np.eye(a.shape[0])
    deg = a_tilde.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    s = (inv_sqrt[:, None] * a_tilde) * inv_sqrt[None, :]
    s_k = np.linalg.matrix_power(s, k)
    values = s_k @ base @ s_k.T
    return GraphCovariance((values + values.T) / 2.0, f"gcgp(k={k})")


@dataclass(frozen=True)
class GammaLaw:
    """Shape/scale parameters of a Gamma distribution."""

    shape: float
    scale: float


def normal_distance_gamma(k_ii, k_jj, k_ij, d) -> GammaLaw:
    """Distribution of a squared distance between jointly Gaussian rows.

    If two length-d rows are jointly Gaussian with kernel entries k_ii,
    k_jj, k_ij per column, their squared Euclidean distance follows
    Gamma(d/2, 2 (k_ii + k_jj - 2 k_ij)) in shape/scale form.  A
    negative variance term (non-PSD kernel slice) is an error.
    """
    if d < 1:
        raise DataError(f"d must be >= 1, got {d}")
    variance = float(k_ii + k_jj - 2.0 * k_ij)
    if variance < 0:
        raise DataError(
            f"kernel slice gives negative pair variance {variance:.3e}"
        )
    return GammaLaw(shape=d / 2.0, scale=2.0 * variance)
