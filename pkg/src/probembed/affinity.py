"""Neighbor affinities in data space and kernels in latent space.

Three model families are supported, each pairing a data-side affinity
construction with a latent-side kernel:

* ``sne``  -- per-row categorical: Gaussian affinities with per-point
  bandwidths calibrated to a perplexity target; latent side is a
  row-normalized unit-bandwidth Gaussian.
* ``tsne`` -- joint categorical: the symmetrized SNE affinities scaled
  by 1/(2n); latent side is a row-normalized Student-t kernel.
* ``umap`` -- Bernoulli pairs: smooth nearest-neighbor affinities with
  per-point offsets and bandwidths, OR-symmetrized; latent side is an
  unnormalized rational-quadratic curve (1 + a d^{2b})^{-1}.

Data-side constructors return a PerplexityCalibration describing the
fitted bandwidths alongside the affinities.
"""

import warnings
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .exceptions import DataError
from .graphs import knn_indices
from .linalg import pairwise_sq_dists
from .validation import check_data_matrix, check_embedding

Family = Literal["sne", "tsne", "umap"]

# Bisection settings shared by the bandwidth searches.
_MAX_BISECT = 128
_ENTROPY_TOL = 1e-9
_SUM_TOL = 1e-6


@dataclass(frozen=True)
class AffinityMatrix:
    """Pairwise association probabilities tagged with their model family.

    `role` records which side of the divergence the matrix lives on:
    "data" for affinities computed from observations, "latent" for
    kernels computed from embedding coordinates.
    """

    probs: np.ndarray
    family: Family
    role: Literal["data", "latent"] = "data"

    def __post_init__(self):
        if self.family not in ("sne", "tsne", "umap"):
            raise DataError(f"unknown affinity family: {self.family!r}")
        if self.role not in ("data", "latent"):
            raise DataError(f"unknown affinity role: {self.role!r}")

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    def validate(self, atol=1e-10):
        """Check the family/role invariants; raises DataError on failure."""
        p = self.probs
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise DataError(f"affinities must be square, got {p.shape}")
        if np.abs(np.diag(p)).max() > 0.0:
            raise DataError("affinity diagonal must be exactly zero")
        if p.min() < 0.0:
            raise DataError("affinities must be non-negative")
        if self.family == "umap" or (self.family == "tsne" and self.role == "data"):
            if np.abs(p - p.T).max() > atol:
                raise DataError(f"{self.family} affinities must be symmetric")
        if self.family == "umap":
            if p.max() > 1.0 + atol:
                raise DataError("umap affinities must lie in [0, 1]")
        elif self.family == "tsne" and self.role == "data":
            if abs(p.sum() - 1.0) > 1e-8:
                raise DataError("tsne data affinities must sum to 1 in total")
        else:
            # per-row categoricals: every row is a distribution
            if np.abs(p.sum(axis=1) - 1.0).max() > 1e-8:
                raise DataError(f"{self.family} rows must each sum to 1")
        return self


@dataclass(frozen=True)
class PerplexityCalibration:
    """Fitted per-point bandwidths from a data-side construction.

    `target` is the perplexity (sne/tsne) or the neighbor count whose
    base-2 logarithm the affinity rows were matched to (umap).  `rhos`
    holds the nearest-neighbor offsets for umap and is None otherwise.
    `clamped` lists points whose search hit its bracket boundary
    without meeting the target.
    """

    target: float
    sigmas: np.ndarray
    rhos: Optional[np.ndarray]
    clamped: tuple = ()


def _row_entropy_probs(d2_row, beta):
    """Shifted-exponential row probabilities and their entropy (base 2)."""
    shifted = -beta * (d2_row - d2_row.min())
    p = np.exp(shifted)
    total = p.sum()
    p /= total
    # H = -sum p log2 p, computed stably through the shifted exponents
    nonzero = p > 0
    h = -float(np.sum(p[nonzero] * np.log2(p[nonzero])))
    return p, h


def _calibrate_row(d2_row, target_h):
    """Bisect the precision beta so the row entropy matches target_h."""
    beta, lo, hi = 1.0, 0.0, np.inf
    p, h = _row_entropy_probs(d2_row, beta)
    for _ in range(_MAX_BISECT):
        if abs(h - target_h) <= _ENTROPY_TOL:
            return p, beta, False
        if h > target_h:  # too spread out: raise the precision
            lo = beta
            beta = beta * 2.0 if np.isinf(hi) else (lo + hi) / 2.0
        else:
            hi = beta
            beta = beta / 2.0 if lo == 0.0 else (lo + hi) / 2.0
        p, h = _row_entropy_probs(d2_row, beta)
    return p, beta, abs(h - target_h) > 1e-3


def sne_affinities(y, perplexity=30.0):
    """Row-stochastic Gaussian affinities at a fixed perplexity.

    Row i uses its own bandwidth, found by bisection so that the row
    entropy H_i satisfies 2^{H_i} = perplexity.  Rows whose search
    cannot reach the target (duplicate-heavy neighborhoods) keep the
    bracket-boundary bandwidth and are reported in the calibration.

    Returns
    -------
    (AffinityMatrix, PerplexityCalibration)
    """
    y = check_data_matrix(y, "data")
    n = y.shape[0]
    if not 1.0 <= perplexity < n:
        raise DataError(f"perplexity must satisfy 1 <= perplexity < {n}, got {perplexity}")
    d2 = pairwise_sq_dists(y)
    target_h = np.log2(perplexity)
    probs = np.zeros((n, n))
    sigmas = np.zeros(n)
    clamped = []
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        row = d2[i][mask[i]]
        p, beta, missed = _calibrate_row(row, target_h)
        probs[i][mask[i]] = p
        sigmas[i] = 1.0 / np.sqrt(beta)  # affinity exponent is -d2 / sigma^2
        if missed:
            clamped.append(i)
    if clamped:
        warnings.warn(
            f"perplexity {perplexity} unattainable for points {clamped}; "
            "kept boundary bandwidths",
            stacklevel=2,
        )
    affinities = AffinityMatrix(probs, "sne", "data")
    calibration = PerplexityCalibration(
        target=float(perplexity), sigmas=sigmas, rhos=None, clamped=tuple(clamped)
    )
    return affinities, calibration


def tsne_affinities(y, perplexity=30.0):
    """Joint affinities (P + P') / 2n from the SNE construction.

    Symmetric, zero diagonal, total mass 1.

    Returns
    -------
    (AffinityMatrix, PerplexityCalibration)
    """
    row_aff, calibration = sne_affinities(y, perplexity)
    n = row_aff.n
    joint = (row_aff.probs + row_aff.probs.T) / (2.0 * n)
    return AffinityMatrix(joint, "tsne", "data"), calibration


def _umap_smooth_bandwidth(neighbor_dists, rho, target):
    """Bisect sigma so sum_j exp((rho - d_j)/sigma) hits `target`."""

    def mass(sigma):
        return float(np.sum(np.exp(np.minimum((rho - neighbor_dists) / sigma, 0.0))))

    lo, hi = 0.0, 1.0
    grow = 0
    while mass(hi) < target and grow < 64:
        hi *= 2.0
        grow += 1
    sigma = hi
    if mass(hi) < target:  # saturated: every neighbor tied at rho
        return hi, True
    for _ in range(_MAX_BISECT):
        sigma = (lo + hi) / 2.0
        if sigma == lo or sigma == hi:
            break
        if mass(sigma) < target:
            lo = sigma
        else:
            hi = sigma
    missed = abs(mass(sigma) - target) > _SUM_TOL
    return sigma, missed


def umap_affinities(y, n_neighbors=15):
    """Smooth nearest-neighbor affinities, OR-symmetrized.

    For each point, conditional affinities to its k nearest neighbors
    are exp((rho_i - d_ij) / sigma_i) with rho_i the distance to the
    nearest neighbor and sigma_i calibrated so the conditional mass
    equals log2(k).  Directed affinities are combined by probabilistic
    union: v = a + a' - a a'.

    Returns
    -------
    (AffinityMatrix, PerplexityCalibration)
    """
    y = check_data_matrix(y, "data")
    n = y.shape[0]
    if not 2 <= n_neighbors < n:
        raise DataError(
            f"n_neighbors must satisfy 2 <= k < {n}, got {n_neighbors}"
        )
    idx = knn_indices(y, n_neighbors)
    dist = np.sqrt(pairwise_sq_dists(y))
    target = float(np.log2(n_neighbors))
    conditional = np.zeros((n, n))
    sigmas = np.zeros(n)
    rhos = np.zeros(n)
    clamped = []
    for i in range(n):
        neighbor_dists = dist[i, idx[i]]
        rho = float(neighbor_dists.min())
        sigma, missed = _umap_smooth_bandwidth(neighbor_dists, rho, target)
        conditional[i, idx[i]] = np.exp(
            np.minimum((rho - neighbor_dists) / sigma, 0.0)
        )
        sigmas[i] = sigma
        rhos[i] = rho
        if missed:
            clamped.append(i)
    if clamped:
        warnings.warn(
            f"neighbor-mass target log2({n_neighbors}) unattainable for "
            f"points {clamped}; kept boundary bandwidths",
            stacklevel=2,
        )
    union = conditional + conditional.T - conditional * conditional.T
    np.fill_diagonal(union, 0.0)
    affinities = AffinityMatrix(union, "umap", "data")
    calibration = PerplexityCalibration(
        target=float(n_neighbors), sigmas=sigmas, rhos=rhos, clamped=tuple(clamped)
    )
    return affinities, calibration


def latent_kernel(x, family, a=1.0, b=1.0) -> AffinityMatrix:
    """Latent-side kernel for `family` at coordinates `x`.

    sne: row-normalized exp(-d2); tsne: row-normalized (1 + d2)^{-1};
    umap: unnormalized (1 + a d^{2b})^{-1} with zero diagonal.  The
    curve parameters a, b apply to umap only.
    """
    x = check_embedding(x, "embedding")
    d2 = pairwise_sq_dists(x)
    n = x.shape[0]
    off = ~np.eye(n, dtype=bool)
    if family == "sne":
        # shift by the row minimum before exponentiating; the shift
        # cancels under row normalization but prevents underflow to an
        # all-zero row when coordinates drift far apart.
        shift = np.min(d2 + np.where(off, 0.0, np.inf), axis=1, keepdims=True)
        k = np.exp(np.where(off, shift - d2, -np.inf))
        k /= k.sum(axis=1, keepdims=True)
        return AffinityMatrix(k, "sne", "latent")
    if family == "tsne":
        k = np.where(off, 1.0 / (1.0 + d2), 0.0)
        k /= k.sum(axis=1, keepdims=True)
        return AffinityMatrix(k, "tsne", "latent")
    if family == "umap":
        if a <= 0 or b <= 0:
            raise DataError(f"curve parameters must be positive, got a={a}, b={b}")
        with np.errstate(divide="ignore"):
            k = np.where(off, 1.0 / (1.0 + a * d2**b), 0.0)
        return AffinityMatrix(k, "umap", "latent")
    raise DataError(f"unknown affinity family: {family!r}")
