"""Moment-matrix estimators.

Each classical embedding algorithm is reduced here to the quantity it
implicitly estimates: either a covariance over points or a precision
over points.  The matrices returned by this module feed the eigenvector
maps in :mod:`probembed.spectral`.

Covariance constructors project onto the PSD cone after assembly, so a
moment is always symmetric PSD.  Precision constructors return graph
Laplacians (or Laplacian-like matrices), which are PSD by construction.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import graphs
from .exceptions import DataError
from .linalg import (
    double_center,
    pairwise_sq_dists,
    psd_project,
    sym_eigendecomposition,
)
from .validation import as_float_array, check_data_matrix, check_symmetric

Kind = Literal["covariance", "precision"]


@dataclass(frozen=True)
class MomentMatrix:
    """A PSD moment over points with its estimation provenance.

    `kind` states whether `values` plays the role of a covariance
    (major eigenvectors carry signal) or a precision (minor
    eigenvectors carry signal).
    """

    values: np.ndarray
    kind: Kind
    provenance: str

    def __post_init__(self):
        if self.kind not in ("covariance", "precision"):
            raise DataError(f"unknown moment kind: {self.kind!r}")


def pca_moment(y, center=True) -> MomentMatrix:
    """Covariance over points, Y Y' / d, with optional column centering."""
    y = check_data_matrix(y, "data")
    if center:
        y = y - y.mean(axis=0, keepdims=True)
    values = (y @ y.T) / y.shape[1]
    return MomentMatrix((values + values.T) / 2.0, "covariance", "pca")


def cmds_moment(dist_sq) -> MomentMatrix:
    """Covariance recovered from squared distances by double centering.

    Computes the PSD part of -H D2 H / 2.  Rejects asymmetric input, a
    nonzero diagonal, or negative squared distances.
    """
    d2 = check_symmetric(dist_sq, "squared distances")
    if np.abs(np.diag(d2)).max() > 1e-10:
        raise DataError("squared distance matrix must have a zero diagonal")
    if d2.min() < 0:
        raise DataError("squared distances must be non-negative")
    values = psd_project(double_center(-0.5 * d2))
    return MomentMatrix(values, "covariance", "cmds")


def isomap_moment(y, n_neighbors) -> MomentMatrix:
    """Covariance from squared geodesic distances along a kNN graph.

    Edge lengths are Euclidean; shortest-path distances are squared and
    routed through the same double-centering as `cmds_moment`.  A
    disconnected graph is an error naming the component count.
    """
    y = check_data_matrix(y, "data")
    graph = graphs.knn_graph(y, n_neighbors)
    geo = graphs.geodesic_distances(graph)
    moment = cmds_moment(geo**2)
    return MomentMatrix(moment.values, "covariance", f"isomap(k={n_neighbors})")


def _kernel_matrix(y, kernel, lengthscale, degree, offset):
    if kernel == "rbf":
        if not lengthscale > 0:
            raise DataError(f"lengthscale must be positive, got {lengthscale}")
        return np.exp(-pairwise_sq_dists(y) / (2.0 * lengthscale**2))
    if kernel == "linear":
        return y @ y.T
    if kernel == "polynomial":
        if degree < 1:
            raise DataError(f"polynomial degree must be >= 1, got {degree}")
        return (y @ y.T + offset) ** degree
    raise DataError(f"unknown kernel: {kernel!r}")


def kpca_moment(y, kernel="rbf", lengthscale=1.0, degree=3, offset=1.0) -> MomentMatrix:
    """Covariance from a centered kernel matrix.

    Supported kernels: `rbf` (exp(-d2 / (2 l^2))), `linear` (Y Y'),
    `polynomial` ((Y Y' + offset)^degree).  The kernel is double
    centered and projected onto the PSD cone.
    """
    y = check_data_matrix(y, "data")
    k = _kernel_matrix(y, kernel, lengthscale, degree, offset)
    values = psd_project(double_center(k))
    return MomentMatrix(values, "covariance", f"kpca({kernel})")


def external_kernel_moment(k) -> MomentMatrix:
    """Covariance from an externally supplied kernel/inner-product matrix.

    Ingestion path for methods that produce a Gram matrix of their own
    (maximum variance unfolding style): the matrix is double centered
    and PSD projected, then treated exactly like any other covariance.
    """
    k = check_symmetric(k, "kernel")
    values = psd_project(double_center(k))
    return MomentMatrix(values, "covariance", "external_kernel")


def le_precision(y, n_neighbors=None, epsilon=None, laplacian="normalized") -> MomentMatrix:
    """Precision over points: the Laplacian of a neighborhood indicator graph.

    Exactly one of `n_neighbors` (union-symmetrized kNN) or `epsilon`
    (pairs strictly closer than epsilon) selects the graph.  In epsilon
    mode an isolated node is an error listing the node ids.  `laplacian`
    chooses between the ordinary (D - A) and symmetric normalized
    (I - D^{-1/2} A D^{-1/2}) forms.
    """
    y = check_data_matrix(y, "data")
    if (n_neighbors is None) == (epsilon is None):
        raise DataError("exactly one of n_neighbors or epsilon must be given")
    if n_neighbors is not None:
        graph = graphs.knn_graph(y, n_neighbors)
    else:
        graph = graphs.epsilon_graph(y, epsilon)
        lonely = graphs.isolated_nodes(graph)
        if lonely:
            raise DataError(
                f"epsilon graph leaves isolated nodes {lonely}; increase epsilon"
            )
    values = graphs.laplacian_matrix(graph.adjacency(weighted=False), laplacian)
    return MomentMatrix(values, "precision", f"le({graph.mode},{laplacian})")


def external_laplacian_precision(l) -> MomentMatrix:
    """Precision from an externally supplied Laplacian-like PSD matrix.

    Ingestion path for spectral-clustering style pipelines that already
    own a Laplacian.  Symmetry is required; negative eigenvalues beyond
    rounding are rejected.
    """
    l = check_symmetric(l, "laplacian")
    eigenvalues = np.linalg.eigvalsh(l)
    if eigenvalues.min() < -1e-8 * max(1.0, abs(eigenvalues).max()):
        raise DataError("laplacian input must be positive semi-definite")
    return MomentMatrix(l, "precision", "external_laplacian")


def lle_precision(y, n_neighbors, ridge=1e-3) -> MomentMatrix:
    """Precision W W' from locally linear reconstruction weights.

    Column i of W has W_ii = 1 and carries minus the barycentric
    weights that reconstruct point i from its k nearest neighbors, so
    the off-diagonal support of column i sums to -1.  Each local Gram
    matrix is regularized by `ridge * trace / k` on the diagonal; a
    singular local Gram with ridge = 0 is an error advising a ridge.
    """
    y = check_data_matrix(y, "data")
    if ridge < 0:
        raise DataError(f"ridge must be non-negative, got {ridge}")
    n = y.shape[0]
    idx = graphs.knn_indices(y, n_neighbors)
    w = np.eye(n)
    ones = np.ones(n_neighbors)
    for i in range(n):
        local = y[idx[i]] - y[i]
        gram = local @ local.T
        if np.trace(gram) == 0.0:
            # every neighbor coincides with the point itself: any convex
            # combination reconstructs it, so use the uniform one.
            w[idx[i], i] = -ones / n_neighbors
            continue
        if ridge > 0:
            gram = gram + np.eye(n_neighbors) * (ridge * np.trace(gram) / n_neighbors)
        else:
            # cond check: with no ridge a rank-deficient neighborhood
            # cannot produce meaningful weights.
            spectrum = np.linalg.eigvalsh(gram)
            if spectrum[0] <= spectrum[-1] * 1e-12 or spectrum[-1] == 0.0:
                raise DataError(
                    f"local Gram matrix at point {i} is singular; "
                    "set ridge > 0 to regularize"
                )
        try:
            weights = np.linalg.solve(gram, ones)
        except np.linalg.LinAlgError as exc:
            raise DataError(
                f"local Gram matrix at point {i} is singular; "
                "set ridge > 0 to regularize"
            ) from exc
        total = weights.sum()
        if total == 0.0:
            raise DataError(
                f"reconstruction weights at point {i} sum to zero; "
                "increase ridge"
            )
        w[idx[i], i] = -weights / total
    values = w @ w.T
    return MomentMatrix((values + values.T) / 2.0,
                        "precision", f"lle(k={n_neighbors})")


def diffusion_moment(y, lengthscale=1.0, steps=1) -> MomentMatrix:
    """Covariance from a symmetrically normalized heat kernel, powered.

    Builds K_ij = exp(-d2 / (2 l^2)), normalizes to D^{-1/2} K D^{-1/2}
    and raises the result to the `steps`-th matrix power.
    """
    y = check_data_matrix(y, "data")
    if not lengthscale > 0:
        raise DataError(f"lengthscale must be positive, got {lengthscale}")
    steps = int(steps)
    if steps < 1:
        raise DataError(f"steps must be >= 1, got {steps}")
    k = np.exp(-pairwise_sq_dists(y) / (2.0 * lengthscale**2))
    deg = k.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)  # rows of K include exp(0)=1, so deg >= 1
    base = (inv_sqrt[:, None] * k) * inv_sqrt[None, :]
    base = (base + base.T) / 2.0
    values = np.linalg.matrix_power(base, steps) if steps > 1 else base
    values = psd_project((values + values.T) / 2.0)
    return MomentMatrix(values, "covariance", f"diffusion(steps={steps})")
