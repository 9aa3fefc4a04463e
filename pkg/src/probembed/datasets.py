"""Synthetic datasets for tests, examples, and the shipped sample files."""

import numpy as np

from .exceptions import DataError
from .rng import as_generator


def make_three_clusters(n_per_cluster=20, n_features=5, separation=8.0,
                        cluster_std=1.0, seed=0):
    """Three isotropic Gaussian blobs with controllable separation.

    Centers sit at the origin and at `separation` along the first two
    feature axes.  Returns (data, labels) with labels 0/1/2.
    """
    if n_per_cluster < 1 or n_features < 2:
        raise DataError("need n_per_cluster >= 1 and n_features >= 2")
    gen = as_generator(seed)
    centers = np.zeros((3, n_features))
    centers[1, 0] = separation
    centers[2, 1] = separation
    rows = []
    labels = []
    for idx, center in enumerate(centers):
        rows.append(center + cluster_std * gen.standard_normal((n_per_cluster,
                                                                n_features)))
        labels.extend([idx] * n_per_cluster)
    return np.vstack(rows), np.array(labels)


def _smooth_features(latent, mixing, noise, gen):
    z1, z2 = latent[:, 0], latent[:, 1]
    basis = np.column_stack([
        np.sin(np.pi * z1),
        np.cos(np.pi * z2),
        z1 * z2,
        z1**2 - z2**2,
        np.sin(np.pi * z1 * z2),
        z1 + z2,
    ])
    y = basis @ mixing
    if noise > 0:
        y = y + noise * gen.standard_normal(y.shape)
    return y


def make_manifold(n_train=200, n_test=200, n_features=30, noise=0.05, seed=0):
    """High-dimensional features varying smoothly over a 2-d latent square.

    Six smooth basis functions of the latent coordinates are mixed into
    `n_features` columns by a fixed random matrix, plus isotropic noise.
    Returns (y_train, y_test, latent_train, latent_test).
    """
    if min(n_train, n_test) < 1 or n_features < 1:
        raise DataError("need positive sizes")
    gen = as_generator(seed)
    mixing = gen.standard_normal((6, n_features)) / np.sqrt(6.0)
    latent_train = gen.uniform(-1.0, 1.0, size=(n_train, 2))
    latent_test = gen.uniform(-1.0, 1.0, size=(n_test, 2))
    y_train = _smooth_features(latent_train, mixing, noise, gen)
    y_test = _smooth_features(latent_test, mixing, noise, gen)
    return y_train, y_test, latent_train, latent_test


def make_line(n=200, low=-3.0, high=3.0, seed=0):
    """One-dimensional uniform latent draw, shaped (n, 1)."""
    if n < 2:
        raise DataError(f"need n >= 2, got {n}")
    if not high > low:
        raise DataError(f"need high > low, got [{low}, {high}]")
    gen = as_generator(seed)
    return gen.uniform(low, high, size=(n, 1))


def make_iris_like(n_per_class=50, seed=0):
    """Three flower-measurement-style clusters in four features.

    Returns (data, labels); the class means and spreads echo the
    classic iris shape without copying any real measurements.
    """
    if n_per_class < 1:
        raise DataError(f"need n_per_class >= 1, got {n_per_class}")
    gen = as_generator(seed)
    means = np.array([
        [5.0, 3.4, 1.5, 0.2],
        [5.9, 2.8, 4.3, 1.3],
        [6.6, 3.0, 5.6, 2.1],
    ])
    stds = np.array([
        [0.35, 0.38, 0.17, 0.10],
        [0.51, 0.31, 0.47, 0.20],
        [0.63, 0.32, 0.55, 0.27],
    ])
    rows = []
    labels = []
    for idx in range(3):
        draw = means[idx] + stds[idx] * gen.standard_normal((n_per_class, 4))
        rows.append(np.clip(draw, 0.1, None))
        labels.extend([idx] * n_per_class)
    return np.vstack(rows), np.array(labels)
