"""Estimator-style wrappers around the functional modules.

Three entry points mirror the three inference routes: closed-form
spectral maps, iterative neighbor layouts, and graph-GP feature
prediction.  All follow the fit/transform/predict conventions, store
constructor arguments verbatim, and expose fitted state through
trailing-underscore attributes.
"""

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .affinity import latent_kernel
from .exceptions import DataError
from .graphgp import GraphGPHyper, PredictionResult, predict_features
from .optimize import (
    EmbedConfig,
    embed_out_of_sample,
    neighbor_affinities,
    optimize_embedding,
)
from .spectral import PRECISION_RIDGE, spectral_embedding
from .validation import check_data_matrix


class SpectralMap(BaseEstimator):
    """Closed-form embedding: moment estimate, then eigenvector map.

    `algo` picks the moment construction (pca, cmds, isomap, kpca,
    diffusion, le, lle, or the ingestion tags kernel/laplacian); the
    remaining arguments parameterize it and are ignored by algorithms
    that do not use them (left at None they fall back to per-algorithm
    defaults).  There is no out-of-sample transform: the map is defined
    by the eigenvectors of the fitted moment, so only `fit_transform`
    is offered.
    """

    def __init__(self, algo="pca", n_components=2, n_neighbors=None,
                 epsilon=None, lengthscale=None, steps=None, kernel=None,
                 degree=None, offset=None, ridge=None, laplacian=None,
                 matrix=None, center=None):
        self.algo = algo
        self.n_components = n_components
        self.n_neighbors = n_neighbors
        self.epsilon = epsilon
        self.lengthscale = lengthscale
        self.steps = steps
        self.kernel = kernel
        self.degree = degree
        self.offset = offset
        self.ridge = ridge
        self.laplacian = laplacian
        self.matrix = matrix
        self.center = center

    def _algo_params(self):
        named = {
            "n_neighbors": self.n_neighbors,
            "epsilon": self.epsilon,
            "lengthscale": self.lengthscale,
            "steps": self.steps,
            "kernel": self.kernel,
            "degree": self.degree,
            "offset": self.offset,
            "laplacian": self.laplacian,
            "matrix": self.matrix,
            "center": self.center,
        }
        return {key: value for key, value in named.items() if value is not None}

    def fit(self, X, y=None):
        params = self._algo_params()
        if self.ridge is not None:
            params["ridge"] = self.ridge
        elif self.algo in ("le", "laplacian"):
            params["ridge"] = PRECISION_RIDGE
        if self.algo in ("le", "laplacian"):
            ridge = params.pop("ridge")
            result = spectral_embedding(X, self.algo, self.n_components,
                                        ridge=ridge, **params)
        else:
            result = spectral_embedding(X, self.algo, self.n_components,
                                        **params)
        self.embedding_ = result.embedding
        self.noise_ = result.noise_hat
        self.used_components_ = result.used_components
        self.clamped_ = result.clamped
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


class NeighborEmbedding(BaseEstimator):
    """Iterative layout matching latent to data neighbor distributions.

    `family` selects the affinity model (sne, tsne, umap) on both the
    data and latent sides; the optimizer is plain gradient descent with
    momentum on the divergence between them.  `transform` places new
    rows into a fitted layout by optimizing only their coordinates.
    """

    def __init__(self, family="tsne", n_components=2, perplexity=30.0,
                 n_neighbors=15, a=1.0, b=1.0, learning_rate=0.1,
                 momentum=0.8, max_iter=1000, init="random", init_scale=1e-2,
                 seed=0):
        self.family = family
        self.n_components = n_components
        self.perplexity = perplexity
        self.n_neighbors = n_neighbors
        self.a = a
        self.b = b
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.max_iter = max_iter
        self.init = init
        self.init_scale = init_scale
        self.seed = seed

    def _config(self) -> EmbedConfig:
        return EmbedConfig(
            n_components=self.n_components,
            family=self.family,
            perplexity=self.perplexity,
            n_neighbors=self.n_neighbors,
            a=self.a,
            b=self.b,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            max_iter=self.max_iter,
            init=self.init,
            init_scale=self.init_scale,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        X = check_data_matrix(X, "data")
        config = self._config()
        affinities, calibration = neighbor_affinities(X, config)
        embedding, trace = optimize_embedding(affinities, config)
        self._train_data = X
        self.embedding_ = embedding
        self.trace_ = trace
        self.calibration_ = calibration
        self.affinities_ = affinities
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

    def transform(self, X):
        if not hasattr(self, "embedding_"):
            raise DataError("transform requires a fitted embedding; call fit first")
        X = check_data_matrix(X, "new data")
        if X.shape[1] != self._train_data.shape[1]:
            raise DataError(
                f"new data has {X.shape[1]} features, training data had "
                f"{self._train_data.shape[1]}"
            )
        config = self._config()
        stacked = np.vstack([self._train_data, X])
        v_full, _ = neighbor_affinities(stacked, config)
        x_new, _ = embed_out_of_sample(v_full, self.embedding_, config)
        return x_new

    def latent_affinities(self):
        """Latent-side neighbor distribution of the fitted layout."""
        if not hasattr(self, "embedding_"):
            raise DataError("call fit first")
        return latent_kernel(self.embedding_, self.family, a=self.a, b=self.b)


class GraphGPPredictor(BaseEstimator):
    """Feature prediction for unseen rows through a shared neighbor graph.

    Fitting builds the expected neighbor graph of the training rows and
    maximizes the matrix-normal likelihood over (kappa, sigma_s,
    sigma_n).  Prediction joins the new rows into the graph and returns
    the conditional mean of their features; `predict(..., return_var=
    True)` adds per-row predictive variances.
    """

    def __init__(self, n_neighbors=15, laplacian="normalized",
                 init: Optional[GraphGPHyper] = None, max_iter=300,
                 learning_rate=0.05, sigma_n_floor=1e-3):
        self.n_neighbors = n_neighbors
        self.laplacian = laplacian
        self.init = init
        self.max_iter = max_iter
        self.learning_rate = learning_rate
        self.sigma_n_floor = sigma_n_floor

    def fit(self, X, y=None):
        self._train_data = check_data_matrix(X, "training data")
        return self

    def predict(self, X, return_var=False):
        if not hasattr(self, "_train_data"):
            raise DataError("predict requires training data; call fit first")
        result: PredictionResult = predict_features(
            self._train_data,
            X,
            n_neighbors=self.n_neighbors,
            laplacian=self.laplacian,
            init=self.init,
            fit_max_iter=self.max_iter,
            fit_learning_rate=self.learning_rate,
            sigma_n_floor=self.sigma_n_floor,
        )
        self.hyper_ = result.hyper
        self.fit_trace_ = result.fit_trace
        if return_var:
            return result.predictions, result.variances
        return result.predictions
