"""Shared linear algebra primitives.

Conventions used throughout the package:

* eigenvalues are reported in descending order, so "minor" components
  are always found at the tail;
* each eigenvector's sign is fixed by making its largest-magnitude
  entry positive (ties broken by the lowest index), which pins an
  otherwise arbitrary choice and makes runs comparable;
* matrices that ought to be symmetric are averaged with their
  transpose once validated, so downstream code never sees asymmetry
  beyond rounding.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, NumericalError
from .validation import as_float_array, check_data_matrix, check_symmetric


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (descending) and matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u, lam = self.eigenvectors, self.eigenvalues
        return (u * lam) @ u.T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # argmax returns the lowest index on ties, which is exactly the
    # tie-break rule we document.
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigendecomposition(m, name="matrix") -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    m : array-like, shape (n, n)
        Symmetric matrix (asymmetry beyond rounding tolerance is
        rejected; below it, the matrix is averaged with its transpose).

    Returns
    -------
    EigenDecomposition
        Eigenvalues sorted descending with sign-fixed eigenvectors.
    """
    m = check_symmetric(m, name)
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(eigenvalues, kind="stable")[::-1]
    return EigenDecomposition(
        eigenvalues=eigenvalues[order],
        eigenvectors=_fix_signs(eigenvectors[:, order]),
    )


def double_center(k) -> np.ndarray:
    """Apply the centering map H K H with H = I - (1/n) 11'.

    Row and column means of the result vanish.  Uses the expanded form
    K - row_mean - col_mean + grand_mean rather than two matrix
    products.
    """
    k = as_float_array(k, "kernel")
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DataError(f"kernel must be square, got shape {k.shape}")
    row = k.mean(axis=1, keepdims=True)
    col = k.mean(axis=0, keepdims=True)
    grand = k.mean()
    return k - row - col + grand


def psd_project(m) -> np.ndarray:
    """Project a symmetric matrix onto the PSD cone.

    Negative eigenvalues are clamped to zero; eigenvectors are left
    untouched.  An input that is already PSD is returned unchanged
    (after symmetry averaging).
    """
    m = check_symmetric(m, "matrix")
    decomp = sym_eigendecomposition(m)
    if decomp.eigenvalues.min() >= 0.0:
        return m
    clipped = np.clip(decomp.eigenvalues, 0.0, None)
    out = (decomp.eigenvectors * clipped) @ decomp.eigenvectors.T
    return (out + out.T) / 2.0


def pairwise_sq_dists(y) -> np.ndarray:
    """Squared Euclidean distances between rows of `y`.

    Computed with the Gram-matrix identity; tiny negative values from
    cancellation are clamped to zero, the diagonal is exactly zero and
    the output is exactly symmetric.
    """
    y = check_data_matrix(y, "data")
    sq = np.sum(y * y, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    np.maximum(d2, 0.0, out=d2)
    d2 = (d2 + d2.T) / 2.0
    np.fill_diagonal(d2, 0.0)
    return d2


def matrix_exponential_sym(m, scale=1.0) -> np.ndarray:
    """Matrix exponential of `scale * m` for symmetric `m`.

    Evaluated through the eigendecomposition, U exp(scale L) U', which
    is exact for symmetric input and keeps the result symmetric.
    """
    decomp = sym_eigendecomposition(m)
    u = decomp.eigenvectors
    out = (u * np.exp(scale * decomp.eigenvalues)) @ u.T
    return (out + out.T) / 2.0


def logdet_psd(m, name="matrix") -> float:
    """Log-determinant via Cholesky; raises NumericalError if not PD."""
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{name} is singular or not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def solve_psd(m, b, name="matrix") -> np.ndarray:
    """Solve m x = b for symmetric positive definite m."""
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{name} is singular or not positive definite") from exc
    z = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.T, z)
