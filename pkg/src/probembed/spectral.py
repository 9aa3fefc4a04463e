"""Closed-form embeddings as maximum a posteriori estimates.

A moment matrix over points, paired with a Wishart observation model,
yields a closed-form latent estimate: scaled major eigenvectors for a
covariance moment, scaled minor eigenvectors for a precision moment.
The Wishart log-likelihood and the matching KL divergence differ only
by terms constant in the model matrix, so either one can serve as the
objective; both are exposed here along with a dispatcher that runs the
full moment-then-map pipeline for each supported algorithm.
"""

from dataclasses import dataclass

import numpy as np

from . import moments as _moments
from .exceptions import DataError, NumericalError
from .linalg import logdet_psd, pairwise_sq_dists, solve_psd, sym_eigendecomposition
from .validation import check_data_matrix, check_symmetric

# Default diagonal ridge added to precision moments ahead of the
# eigenvalue reciprocals taken inside `precision_map`.
PRECISION_RIDGE = 1e-8


@dataclass(frozen=True)
class MapEmbedding:
    """Latent coordinates plus the fitted noise level.

    `noise_hat` is the residual-eigenvalue estimate (variance for
    covariance maps, inverse-variance for precision maps).
    `used_components` indexes the selected eigenpairs into the
    descending-order decomposition, in the order of the embedding
    columns.  `clamped` flags radicands that had to be clipped at zero
    because the requested dimension reached past the matrix rank.
    """

    embedding: np.ndarray
    noise_hat: float
    used_components: np.ndarray
    clamped: bool


def _as_moment(m, expected_kind, caller):
    if isinstance(m, _moments.MomentMatrix):
        if m.kind != expected_kind:
            raise DataError(
                f"{caller} needs a {expected_kind} moment, got {m.kind} "
                f"(provenance {m.provenance})"
            )
        return m.values
    return check_symmetric(m, "moment")


def wishart_loglik(moment, mean, dof) -> float:
    """Wishart log-likelihood of a scaled moment, constants dropped.

    Evaluates -(dof/2) [trace(mean^{-1} moment) + logdet(mean)], the
    log-density of `dof * moment` under a Wishart with `dof` degrees of
    freedom and scale `mean`, up to terms independent of `mean`.  The
    moment may be singular (low-rank moments are the common case); the
    mean must be positive definite.
    """
    t = check_symmetric(moment, "moment")
    m = check_symmetric(mean, "mean")
    if dof <= 0:
        raise DataError(f"dof must be positive, got {dof}")
    logdet = logdet_psd(m, "mean")
    trace = float(np.trace(solve_psd(m, t, "mean")))
    return -0.5 * dof * (trace + logdet)


def scaled_wishart_loglik(moment, mean, rho) -> float:
    """Inflated-degrees variant of :func:`wishart_loglik`.

    Substituting `rho` pseudo-observations for the true column count
    rescales the log-likelihood without moving its optimum; sampling
    `rho * moment` with `rho >= n` also keeps the density proper when
    the true column count is below n.  Constants are dropped exactly as
    in :func:`wishart_loglik`.
    """
    t = check_symmetric(moment, "moment")
    n = t.shape[0]
    if rho < n:
        raise DataError(f"rho must be at least n = {n}, got {rho}")
    return wishart_loglik(t, mean, rho)


def covariance_map(moment, n_components) -> MapEmbedding:
    """Closed-form embedding from a covariance moment.

    The estimate is U_q (L_q - s2 I)^{1/2} where U_q, L_q are the top
    eigenpairs and s2 is the mean of the remaining eigenvalues.
    Radicands are clamped at zero (and flagged) when the requested
    dimension reaches past the rank.
    """
    values = _as_moment(moment, "covariance", "covariance_map")
    n = values.shape[0]
    q = int(n_components)
    if not 1 <= q < n:
        raise DataError(f"n_components must satisfy 1 <= q < {n}, got {q}")
    decomp = sym_eigendecomposition(values)
    lam = decomp.eigenvalues
    noise = float(lam[q:].sum() / (n - q))
    radicand = lam[:q] - noise
    clamped = bool(radicand.min() < 0)
    scale = np.sqrt(np.clip(radicand, 0.0, None))
    embedding = decomp.eigenvectors[:, :q] * scale
    return MapEmbedding(
        embedding=embedding,
        noise_hat=noise,
        used_components=np.arange(q),
        clamped=clamped,
    )


def precision_map(moment, n_components, drop_null=False, ridge=PRECISION_RIDGE) -> MapEmbedding:
    """Closed-form embedding from a precision moment.

    The estimate is U_q (L_q^{-1} - b I)^{1/2} over the q smallest
    eigenpairs, where b is (count / sum) over the eigenvalues left
    unselected.  With `drop_null` the single trailing eigenpair (the
    null vector of a connected-graph Laplacian) is discarded before
    selecting.  `ridge` is added to the diagonal ahead of any
    reciprocal so exact null eigenvalues stay finite.
    """
    values = _as_moment(moment, "precision", "precision_map")
    n = values.shape[0]
    q = int(n_components)
    drop = 1 if drop_null else 0
    if not 1 <= q <= n - 1 - drop:
        raise DataError(
            f"n_components must satisfy 1 <= q <= {n - 1 - drop} "
            f"(n = {n}, drop_null = {drop_null}), got {q}"
        )
    if ridge < 0:
        raise DataError(f"ridge must be non-negative, got {ridge}")
    if ridge > 0:
        values = values + ridge * np.eye(n)
    decomp = sym_eigendecomposition(values)
    lam = decomp.eigenvalues  # descending; minor eigenpairs sit at the tail
    last = n - drop
    selected = np.arange(last - q, last)[::-1]  # smallest kept first
    rest = np.arange(0, last - q)
    rest_sum = float(lam[rest].sum())
    if rest_sum <= 0:
        raise NumericalError("non-selected precision spectrum sums to zero")
    noise = float(len(rest) / rest_sum)
    radicand = 1.0 / lam[selected] - noise
    clamped = bool(radicand.min() < 0)
    scale = np.sqrt(np.clip(radicand, 0.0, None))
    embedding = decomp.eigenvectors[:, selected] * scale
    return MapEmbedding(
        embedding=embedding,
        noise_hat=noise,
        used_components=selected,
        clamped=clamped,
    )


def wishart_kl(q_mean, p_mean, dof) -> float:
    """KL divergence between Wisharts sharing `dof` degrees of freedom.

    Returns (dof/2) [logdet(p) - logdet(q) + trace(p^{-1} q) - n],
    which is zero exactly at q_mean = p_mean and differs from
    -wishart_loglik(q_mean, p_mean, dof) only by terms constant in
    p_mean.  Both means must be positive definite.
    """
    q = check_symmetric(q_mean, "q_mean")
    p = check_symmetric(p_mean, "p_mean")
    if q.shape != p.shape:
        raise DataError(
            f"mean shapes differ: {q.shape} vs {p.shape}"
        )
    if dof <= 0:
        raise DataError(f"dof must be positive, got {dof}")
    n = q.shape[0]
    logdet_q = logdet_psd(q, "q_mean")
    logdet_p = logdet_psd(p, "p_mean")
    trace = float(np.trace(solve_psd(p, q, "p_mean")))
    return 0.5 * dof * (logdet_p - logdet_q + trace - n)


def gplvm_loglik(y, kernel) -> float:
    """Matrix-normal log-likelihood of data columns under a latent kernel.

    Evaluates log N(Y | 0, K, I_d) including constants:
    -(1/2) trace(K^{-1} Y Y') - (d/2) logdet(K) - (n d / 2) log(2 pi).
    Equal to -wishart_kl(Y Y'/d, K, d) up to terms constant in K.
    """
    y = check_data_matrix(y, "data")
    k = check_symmetric(kernel, "kernel")
    n, d = y.shape
    if k.shape[0] != n:
        raise DataError(f"kernel is {k.shape[0]} x {k.shape[0]}, data has {n} rows")
    logdet = logdet_psd(k, "kernel")
    trace = float(np.sum(y * solve_psd(k, y, "kernel")))
    return -0.5 * trace - 0.5 * d * logdet - 0.5 * n * d * np.log(2.0 * np.pi)


# Algorithm tags accepted by `spectral_embedding`, with the moment kind
# each one produces.
SPECTRAL_ALGOS = {
    "pca": "covariance",
    "cmds": "covariance",
    "isomap": "covariance",
    "kpca": "covariance",
    "diffusion": "covariance",
    "kernel": "covariance",
    "le": "precision",
    "lle": "precision",
    "laplacian": "precision",
}


def moment_for(y, algo, **params) -> _moments.MomentMatrix:
    """Step one of the pipeline: the moment matrix for `algo`.

    For the external ingestion tags (`kernel`, `laplacian`) the matrix
    itself must be supplied via the `matrix` parameter and `y` may be
    None.  Unknown parameters are rejected.
    """
    if algo == "pca":
        moment = _moments.pca_moment(y, center=params.pop("center", True))
    elif algo == "cmds":
        moment = _moments.cmds_moment(pairwise_sq_dists(check_data_matrix(y)))
    elif algo == "isomap":
        moment = _moments.isomap_moment(y, params.pop("n_neighbors", 10))
    elif algo == "kpca":
        moment = _moments.kpca_moment(
            y,
            kernel=params.pop("kernel", "rbf"),
            lengthscale=params.pop("lengthscale", 1.0),
            degree=params.pop("degree", 3),
            offset=params.pop("offset", 1.0),
        )
    elif algo == "diffusion":
        moment = _moments.diffusion_moment(
            y,
            lengthscale=params.pop("lengthscale", 1.0),
            steps=params.pop("steps", 1),
        )
    elif algo == "le":
        moment = _moments.le_precision(
            y,
            n_neighbors=params.pop("n_neighbors", None),
            epsilon=params.pop("epsilon", None),
            laplacian=params.pop("laplacian", "normalized"),
        )
    elif algo == "lle":
        moment = _moments.lle_precision(
            y,
            n_neighbors=params.pop("n_neighbors", 10),
            ridge=params.pop("ridge", 1e-3),
        )
    elif algo == "kernel":
        matrix = params.pop("matrix", None)
        if matrix is None:
            raise DataError("algo 'kernel' requires a 'matrix' parameter")
        moment = _moments.external_kernel_moment(matrix)
    elif algo == "laplacian":
        matrix = params.pop("matrix", None)
        if matrix is None:
            raise DataError("algo 'laplacian' requires a 'matrix' parameter")
        moment = _moments.external_laplacian_precision(matrix)
    else:
        raise DataError(f"unknown spectral algorithm: {algo!r}")
    if params:
        raise DataError(
            f"unknown parameters for algo {algo!r}: {sorted(params)}"
        )
    return moment


def spectral_embedding(y, algo="pca", n_components=2, ridge=PRECISION_RIDGE,
                       **params) -> MapEmbedding:
    """Moment estimation followed by the matching closed-form map.

    Covariance-producing algorithms route through
    :func:`covariance_map`; precision-producing algorithms route
    through :func:`precision_map` with the trailing null eigenpair
    dropped (graph Laplacians always carry one).
    """
    if algo not in SPECTRAL_ALGOS:
        raise DataError(f"unknown spectral algorithm: {algo!r}")
    moment = moment_for(y, algo, **params)
    if moment.kind == "covariance":
        return covariance_map(moment, n_components)
    return precision_map(moment, n_components, drop_null=True, ridge=ridge)
