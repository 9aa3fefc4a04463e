"""Embedding-comparison metrics.

Procrustes alignment answers "are these two layouts the same shape";
spectral maps carry their own scaling, so alignment solves for an
orthogonal transform, translation, and (by default) a uniform scale.
Silhouette scores cluster separation; rmse scores feature prediction.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .linalg import pairwise_sq_dists
from .validation import as_float_array, check_embedding


@dataclass(frozen=True)
class ProcrustesResult:
    """Relative alignment residual plus the transformed second input.

    `residual` is 0 exactly when the inputs agree up to the allowed
    transform family; `aligned` is the second embedding mapped into the
    first one's frame.
    """

    residual: float
    aligned: np.ndarray


def procrustes(a, b, scale=True) -> ProcrustesResult:
    """Best-orthogonal-alignment distance between two embeddings.

    Both inputs are centered; with `scale=True` they are also brought
    to unit Frobenius norm, so the residual is invariant to rotation,
    reflection, translation, and uniform scaling of either input and is
    symmetric in its arguments.  With `scale=False` the residual is the
    relative error ||a - bQ|| / ||a|| at the optimal orthogonal Q.
    A zero-variance input (all rows identical) cannot be aligned.
    """
    a = check_embedding(a, "first embedding")
    b = check_embedding(b, "second embedding")
    if a.shape != b.shape:
        raise DataError(f"embeddings must share shape, got {a.shape} vs {b.shape}")
    a_center, b_center = a.mean(axis=0), b.mean(axis=0)
    a_c, b_c = a - a_center, b - b_center
    a_norm, b_norm = np.linalg.norm(a_c), np.linalg.norm(b_c)
    if a_norm == 0 or b_norm == 0:
        raise DataError("zero-variance embedding cannot be aligned")
    if scale:
        a_c, b_c = a_c / a_norm, b_c / b_norm
    u, singulars, vt = np.linalg.svd(b_c.T @ a_c)
    rotation = u @ vt
    if scale:
        trace_norm = float(singulars.sum())
        residual = float(np.sqrt(max(1.0 - trace_norm**2, 0.0)))
        aligned = (b_c @ rotation) * trace_norm * a_norm + a_center
    else:
        diff = a_c - b_c @ rotation
        residual = float(np.linalg.norm(diff) / a_norm)
        aligned = b_c @ rotation + a_center
    return ProcrustesResult(residual=residual, aligned=aligned)


def silhouette(x, labels) -> float:
    """Mean silhouette over points, with ties and singletons scored 0.

    Each point scores (b - a) / max(a, b), a the mean distance to its
    own cluster (excluding itself), b the smallest mean distance to any
    other cluster.  Points in singleton clusters score 0, as do points
    where a and b tie (including the all-coincident case).
    """
    x = check_embedding(x, "embedding")
    labels = np.asarray(labels)
    if labels.shape != (x.shape[0],):
        raise DataError(
            f"labels must be one per row, got {labels.shape} for {x.shape[0]} rows"
        )
    unique = np.unique(labels)
    if len(unique) < 2:
        raise DataError("silhouette requires at least two distinct labels")
    dists = np.sqrt(pairwise_sq_dists(x))
    members = {lab: np.nonzero(labels == lab)[0] for lab in unique}
    scores = np.zeros(x.shape[0])
    for idx in range(x.shape[0]):
        own = members[labels[idx]]
        if len(own) == 1:
            continue
        a = dists[idx, own].sum() / (len(own) - 1)
        b = min(dists[idx, members[lab]].mean()
                for lab in unique if lab != labels[idx])
        denom = max(a, b)
        if denom > 0 and a != b:
            scores[idx] = (b - a) / denom
    return float(scores.mean())


def rmse(pred, truth) -> float:
    """Root mean squared elementwise error between equal-shape arrays."""
    pred = as_float_array(pred, "predictions")
    truth = as_float_array(truth, "truth")
    if pred.shape != truth.shape:
        raise DataError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))
