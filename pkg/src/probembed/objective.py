"""Divergence objectives between data affinities and latent kernels.

The categorical families (sne, tsne) use the plain Kullback-Leibler sum
over off-diagonal entries; the Bernoulli family (umap) uses the
per-pair binary cross-entropy divergence counted once per unordered
pair.  Only the latent kernel can make a log singular (log w at w -> 0
for far-apart points, log(1 - w) at w -> 1 for coincident points), so
latent probabilities are floored at 1e-12 inside logarithms, which caps
them at 1 - 1e-12 inside log(1 - w).  Data affinities are never
clamped: exact zeros are skipped by masking and nonzero entries enter
the logs untouched, keeping the computed value identical to the textbook
formulas whenever the latent kernel stays inside the clamp band.  Clamp
activations are counted in `CLAMP_COUNTER` so tests can assert they
never fire on healthy data.
"""

import numpy as np

from .affinity import AffinityMatrix, latent_kernel
from .exceptions import DataError
from .linalg import pairwise_sq_dists
from .validation import check_embedding

PROB_FLOOR = 1e-12


class _ClampCounter:
    """Counts probability clamps that actually changed a value."""

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += int(n)

    def reset(self):
        self.count = 0


CLAMP_COUNTER = _ClampCounter()


def _floored_log(p, mask):
    """log(max(p, floor)) over `mask`, counting clamps of nonzero entries."""
    active = mask & (p > 0) & (p < PROB_FLOOR)
    CLAMP_COUNTER.add(np.count_nonzero(active))
    return np.log(np.maximum(p, PROB_FLOOR))


def _masked_log(p, mask):
    """Exact log over `mask`; entries outside the mask are left at 0."""
    return np.log(np.where(mask, p, 1.0))


def _check_pair(data_affinity, latent_affinity):
    if not isinstance(data_affinity, AffinityMatrix) or not isinstance(
        latent_affinity, AffinityMatrix
    ):
        raise DataError("objective expects AffinityMatrix operands")
    if data_affinity.family != latent_affinity.family:
        raise DataError(
            f"family mismatch: {data_affinity.family} vs {latent_affinity.family}"
        )
    if data_affinity.probs.shape != latent_affinity.probs.shape:
        raise DataError(
            f"shape mismatch: {data_affinity.probs.shape} vs "
            f"{latent_affinity.probs.shape}"
        )
    return data_affinity.probs, latent_affinity.probs, data_affinity.family


def kl_objective(data_affinity, latent_affinity) -> float:
    """Divergence of the latent kernel from the data affinities.

    For sne/tsne this is sum_{i != j} v log(v / w); for umap it is the
    sum over unordered pairs of v log(v / w) + (1-v) log((1-v)/(1-w)).
    Always non-negative up to clamp effects, and exactly zero when the
    two matrices coincide.
    """
    v, w, family = _check_pair(data_affinity, latent_affinity)
    n = v.shape[0]
    if family in ("sne", "tsne"):
        mask = (~np.eye(n, dtype=bool)) & (v > 0)
        terms = v * (_masked_log(v, mask) - _floored_log(w, mask))
        return float(terms[mask].sum())
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    attract_mask = upper & (v > 0)
    repulse_mask = upper & (v < 1)
    attract = v * (_masked_log(v, attract_mask) - _floored_log(w, attract_mask))
    one_minus_v, one_minus_w = 1.0 - v, 1.0 - w
    repulse = one_minus_v * (
        _masked_log(one_minus_v, repulse_mask)
        - _floored_log(one_minus_w, repulse_mask)
    )
    return float(attract[attract_mask].sum() + repulse[repulse_mask].sum())


def kl_gradient(data_affinity, x, a=1.0, b=1.0) -> np.ndarray:
    """Gradient of :func:`kl_objective` with respect to the coordinates.

    The latent kernel is recomputed from `x` for the family of
    `data_affinity`; `a` and `b` apply to the umap curve only.  Each
    family reduces to a symmetric pair-coefficient matrix M with
    gradient rows 2 sum_j M_ij (x_i - x_j).
    """
    if not isinstance(data_affinity, AffinityMatrix):
        raise DataError("kl_gradient expects an AffinityMatrix")
    x = check_embedding(x, "embedding")
    v = data_affinity.probs
    n = v.shape[0]
    if x.shape[0] != n:
        raise DataError(f"embedding has {x.shape[0]} rows, affinities have {n}")
    family = data_affinity.family
    d2 = pairwise_sq_dists(x)
    off = ~np.eye(n, dtype=bool)
    if family == "sne":
        w = latent_kernel(x, "sne").probs
        coef = v + v.T - w - w.T
    elif family == "tsne":
        u = np.where(off, 1.0 / (1.0 + d2), 0.0)
        w = u / u.sum(axis=1, keepdims=True)
        r = v.sum(axis=1)
        coef = (v + v.T - r[:, None] * w - r[None, :] * w.T) * u
    elif family == "umap":
        w = latent_kernel(x, "umap", a=a, b=b).probs
        d2_safe = d2 + PROB_FLOOR
        attract = v * (a * b * d2_safe ** (b - 1.0)) * w
        repulse = (1.0 - v) * b * w / d2_safe
        coef = np.where(off, attract - repulse, 0.0)
    else:  # pragma: no cover - families are closed
        raise DataError(f"unknown affinity family: {family!r}")
    grad = 2.0 * (coef.sum(axis=1)[:, None] * x - coef @ x)
    return grad


def categorical_pseudo_counts(data_affinity) -> np.ndarray:
    """Integer pseudo-counts whose log-likelihood tracks the divergence.

    Each categorical distribution is replaced by floor(m * p) pseudo
    observations of its categories, with m the notional draw count: n
    draws per row for the row-family (sne) and n^2 draws for the joint
    family (tsne).  Only categorical families are accepted.
    """
    if not isinstance(data_affinity, AffinityMatrix):
        raise DataError("categorical_pseudo_counts expects an AffinityMatrix")
    if data_affinity.family not in ("sne", "tsne"):
        raise DataError(
            f"pseudo-counts apply to categorical families only, "
            f"got {data_affinity.family!r}"
        )
    n = data_affinity.n
    draws = n if data_affinity.family == "sne" else n * n
    return np.floor(draws * data_affinity.probs)


def pseudo_count_loglik(counts, latent_affinity) -> float:
    """Log-likelihood of pseudo-counts under a latent categorical kernel."""
    if not isinstance(latent_affinity, AffinityMatrix):
        raise DataError("pseudo_count_loglik expects an AffinityMatrix kernel")
    counts = np.asarray(counts, dtype=float)
    w = latent_affinity.probs
    if counts.shape != w.shape:
        raise DataError(f"shape mismatch: {counts.shape} vs {w.shape}")
    mask = counts > 0
    return float(np.sum(counts[mask] * _floored_log(w, mask)[mask]))
