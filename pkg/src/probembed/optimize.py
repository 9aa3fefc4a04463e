"""Gradient-descent layout optimization for the neighbor families.

A single plain optimizer serves all three families: gradient descent
with momentum, a learning rate normalized by the initial gradient
magnitude, and no exaggeration phases.  Runs are deterministic given a
seed, and every iteration's loss and gradient norm are recorded so
convergence is auditable after the fact.
"""

import json
from collections import namedtuple
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from . import affinity as _affinity
from .exceptions import DataError, NumericalError
from .graphs import laplacian_matrix
from .objective import kl_gradient, kl_objective
from .rng import SeededRng
from .spectral import precision_map
from .validation import check_embedding

TracePoint = namedtuple("TracePoint", ["iteration", "loss", "grad_norm"])


@dataclass(frozen=True)
class EmbedConfig:
    """Settings for affinity construction and layout optimization.

    `learning_rate` is a dimensionless factor: the step size actually
    used is learning_rate * n / |initial gradient|, which makes the
    first step's magnitude comparable across problem sizes.  `a` and
    `b` shape the umap latent curve and are ignored by sne/tsne.
    """

    n_components: int = 2
    family: Literal["sne", "tsne", "umap"] = "tsne"
    perplexity: float = 30.0
    n_neighbors: int = 15
    a: float = 1.0
    b: float = 1.0
    learning_rate: float = 0.1
    momentum: float = 0.8
    max_iter: int = 1000
    init: Literal["random", "spectral"] = "random"
    init_scale: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("sne", "tsne", "umap"):
            raise DataError(f"unknown family: {self.family!r}")
        if self.n_components < 1:
            raise DataError(f"n_components must be >= 1, got {self.n_components}")
        if not 0.0 <= self.momentum < 1.0:
            raise DataError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.learning_rate <= 0:
            raise DataError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_iter < 1:
            raise DataError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.init not in ("random", "spectral"):
            raise DataError(f"unknown init: {self.init!r}")


def neighbor_affinities(y, config: EmbedConfig):
    """Data-side affinities for the configured family."""
    if config.family == "sne":
        return _affinity.sne_affinities(y, config.perplexity)
    if config.family == "tsne":
        return _affinity.tsne_affinities(y, config.perplexity)
    return _affinity.umap_affinities(y, config.n_neighbors)


def _spectral_init(v: _affinity.AffinityMatrix, q: int) -> np.ndarray:
    """Minor eigenvectors of the affinity-weighted Laplacian, rescaled.

    The layout is expanded so its farthest point sits at radius 10.
    Raw spectral coordinates are tiny, and starting an unnormalized
    cross-entropy inside that well lets the repulsive term blow the
    layout apart radially before attraction can sort neighborhoods.
    """
    weights = (v.probs + v.probs.T) / 2.0
    lap = laplacian_matrix(weights, "normalized")
    coords = precision_map(lap, q, drop_null=True).embedding
    coords = coords - coords.mean(axis=0)
    radius = float(np.max(np.linalg.norm(coords, axis=1)))
    if radius > 0:
        coords = coords * (10.0 / radius)
    return coords


def _initial_coords(v, config, n):
    # init_scale applies to the random draw only; spectral layouts
    # carry meaningful relative geometry and get a fixed span instead
    if config.init == "spectral":
        return _spectral_init(v, config.n_components)
    gen = SeededRng(config.seed).generator
    return config.init_scale * gen.standard_normal((n, config.n_components))


MAX_BACKTRACKS = 40


def _descend(v, x, config, update_rows=None, max_step=None):
    """Backtracking momentum descent on the divergence.

    Returns (coords, trace).  Each iteration proposes the usual
    momentum step; a proposal that would raise the loss (or make it
    non-finite) halves the step scale, drops the accumulated momentum,
    and retries, so the recorded loss trace never increases.  The
    halving persists, with a slow regrowth on clean acceptances, which
    lets an overly hot learning rate settle onto a workable scale
    instead of diverging.  An iteration that cannot find an acceptable
    step leaves the coordinates where they are.

    When `update_rows` is given, only those rows move; the rest are
    held fixed (their gradient is discarded) and the step size is
    normalized by the moving-row count.  `max_step` caps each moving
    row's per-iteration displacement, which keeps a point whose initial
    gradient happens to be small from being flung into the far field
    where the heavy-tailed kernels exert almost no restoring force.
    """
    x = x.copy()
    velocity = np.zeros_like(x)
    n = x.shape[0] if update_rows is None else len(update_rows)

    def masked(g):
        if update_rows is None:
            return g
        out = np.zeros_like(g)
        out[update_rows] = g[update_rows]
        return out

    def loss_at(coords):
        return float(kl_objective(v, _affinity.latent_kernel(
            coords, v.family, a=config.a, b=config.b)))

    def capped(step):
        if max_step is None:
            return step
        norms = np.linalg.norm(step, axis=1, keepdims=True)
        return step * np.minimum(1.0, max_step / np.maximum(norms, 1e-300))

    # non-finite intermediates are detected and handled, so the float
    # warnings on the way there are just noise
    with np.errstate(over="ignore", invalid="ignore"):
        grad = masked(kl_gradient(v, x, a=config.a, b=config.b))
        grad_norm = float(np.linalg.norm(grad))
        scale = config.learning_rate * n / max(grad_norm, 1e-12)
        loss = loss_at(x)
        if not np.isfinite(loss) or not np.isfinite(grad_norm):
            raise NumericalError("layout optimization diverged at iteration 0")
        trace = [TracePoint(0, loss, grad_norm)]
        for iteration in range(1, config.max_iter + 1):
            accepted = False
            for attempt in range(MAX_BACKTRACKS + 1):
                if attempt == 0:
                    step = capped(config.momentum * velocity - scale * grad)
                else:
                    step = capped(-scale * grad)
                candidate = x + step
                loss_cand = loss_at(candidate)
                if np.isfinite(loss_cand) and loss_cand <= loss:
                    accepted = True
                    break
                scale = scale * 0.5
            if accepted:
                x = candidate
                velocity = step
                loss = loss_cand
                if attempt == 0:
                    scale = scale * 1.1
                grad = masked(kl_gradient(v, x, a=config.a, b=config.b))
                grad_norm = float(np.linalg.norm(grad))
                if not np.isfinite(grad_norm):
                    raise NumericalError(
                        f"layout optimization diverged at iteration {iteration}"
                    )
            else:
                velocity = np.zeros_like(x)
            trace.append(TracePoint(iteration, loss, grad_norm))
    return x, trace


def optimize_embedding(data_affinity, config: EmbedConfig, x_init=None):
    """Optimize latent coordinates against fixed data affinities.

    Returns (embedding, trace) where `trace` lists one TracePoint per
    iteration plus a final entry for the returned coordinates.  A
    non-finite loss or gradient raises NumericalError naming the
    iteration.  Identical inputs and seeds reproduce the trace exactly.
    """
    if not isinstance(data_affinity, _affinity.AffinityMatrix):
        raise DataError("optimize_embedding expects an AffinityMatrix")
    n = data_affinity.n
    if config.n_components >= n:
        raise DataError(
            f"n_components must be below the point count {n}, "
            f"got {config.n_components}"
        )
    if x_init is not None:
        x = check_embedding(x_init, "x_init")
        if x.shape != (n, config.n_components):
            raise DataError(
                f"x_init must have shape {(n, config.n_components)}, got {x.shape}"
            )
    else:
        x = _initial_coords(data_affinity, config, n)
    return _descend(data_affinity, x, config)


def embed_out_of_sample(full_affinity, x_train, config: EmbedConfig):
    """Place unseen points into a fixed trained layout.

    `full_affinity` covers training points first and new points after
    them; `x_train` holds the frozen training coordinates.  New points
    start at the affinity-weighted mean of their training anchors and
    only their rows are optimized, with per-iteration movement capped
    at the trained layout's radius.  Returns (x_new, trace) for the new
    rows; the training coordinates are never modified.
    """
    if not isinstance(full_affinity, _affinity.AffinityMatrix):
        raise DataError("embed_out_of_sample expects an AffinityMatrix")
    x_train = check_embedding(x_train, "x_train")
    n_total = full_affinity.n
    n_train = x_train.shape[0]
    n_new = n_total - n_train
    if n_new < 1:
        raise DataError(
            f"affinity matrix covers {n_total} points but x_train has {n_train}"
        )
    q = x_train.shape[1]
    if q != config.n_components:
        config = replace(config, n_components=q)
    weights = full_affinity.probs[n_train:, :n_train]
    totals = weights.sum(axis=1, keepdims=True)
    gen = SeededRng(config.seed).generator
    fallback = config.init_scale * gen.standard_normal((n_new, q))
    with np.errstate(invalid="ignore"):
        anchored = (weights @ x_train) / totals
    x_new = np.where(totals > 0, anchored, fallback)
    x_full = np.vstack([x_train, x_new])
    rows = np.arange(n_train, n_total)
    center = x_train.mean(axis=0)
    radius = float(np.max(np.linalg.norm(x_train - center, axis=1)))
    out, trace = _descend(full_affinity, x_full, config, update_rows=rows,
                          max_step=max(radius, 1e-3))
    assert np.array_equal(out[:n_train], x_train)
    return out[n_train:], trace


def write_trace(trace, path):
    """Write a loss trace as JSON lines (iteration, loss, grad_norm)."""
    with open(path, "w", encoding="utf-8") as fh:
        for point in trace:
            fh.write(json.dumps({
                "iteration": int(point.iteration),
                "loss": float(point.loss),
                "grad_norm": float(point.grad_norm),
            }) + "\n")
