import numpy as np
import pytest

from probembed.datasets import (
    make_iris_like,
    make_line,
    make_manifold,
    make_three_clusters,
)
from probembed.exceptions import DataError
from probembed.metrics import silhouette


def test_three_clusters_shapes_and_labels():
    x, labels = make_three_clusters(n_per_cluster=15, n_features=4)
    assert x.shape == (45, 4)
    np.testing.assert_array_equal(np.bincount(labels), [15, 15, 15])


def test_three_clusters_separation_is_real():
    x, labels = make_three_clusters(separation=10.0, cluster_std=0.5, seed=3)
    assert silhouette(x, labels) > 0.8


def test_three_clusters_deterministic():
    a, _ = make_three_clusters(seed=7)
    b, _ = make_three_clusters(seed=7)
    c, _ = make_three_clusters(seed=8)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_three_clusters_input_errors():
    with pytest.raises(DataError):
        make_three_clusters(n_per_cluster=0)
    with pytest.raises(DataError):
        make_three_clusters(n_features=1)


def test_manifold_shapes_and_determinism():
    tr, te, lat_tr, lat_te = make_manifold(n_train=50, n_test=30,
                                           n_features=12, seed=1)
    assert tr.shape == (50, 12)
    assert te.shape == (30, 12)
    assert lat_tr.shape == (50, 2)
    assert lat_te.shape == (30, 2)
    tr2, te2, _, _ = make_manifold(n_train=50, n_test=30, n_features=12,
                                   seed=1)
    np.testing.assert_array_equal(tr, tr2)
    np.testing.assert_array_equal(te, te2)


def test_manifold_features_track_latents():
    # noiseless columns are exact functions of the latent point, so
    # identical latents give identical features
    tr, _, lat, _ = make_manifold(n_train=40, n_test=2, n_features=8,
                                  noise=0.0, seed=2)
    near = np.argsort(np.linalg.norm(lat - lat[0], axis=1))[1]
    far = np.argmax(np.linalg.norm(lat - lat[0], axis=1))
    assert (np.linalg.norm(tr[0] - tr[near])
            < np.linalg.norm(tr[0] - tr[far]))


def test_manifold_input_errors():
    with pytest.raises(DataError):
        make_manifold(n_train=0)
    with pytest.raises(DataError):
        make_manifold(n_features=0)


def test_line_shape_bounds_and_determinism():
    x = make_line(n=100, low=-2.0, high=5.0, seed=4)
    assert x.shape == (100, 1)
    assert x.min() >= -2.0 and x.max() <= 5.0
    np.testing.assert_array_equal(x, make_line(n=100, low=-2.0, high=5.0,
                                               seed=4))
    with pytest.raises(DataError):
        make_line(n=1)
    with pytest.raises(DataError):
        make_line(low=1.0, high=1.0)


def test_iris_like_shape_and_positivity():
    x, labels = make_iris_like(n_per_class=20, seed=5)
    assert x.shape == (60, 4)
    assert x.min() >= 0.1
    np.testing.assert_array_equal(np.bincount(labels), [20, 20, 20])
    with pytest.raises(DataError):
        make_iris_like(n_per_class=0)


def test_iris_like_classes_ordered_by_petal_length():
    x, labels = make_iris_like(seed=6)
    means = [x[labels == k, 2].mean() for k in range(3)]
    assert means[0] < means[1] < means[2]
