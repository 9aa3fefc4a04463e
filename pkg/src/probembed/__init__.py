"""Probabilistic embeddings toolkit.

Classical dimensionality reductions recast as inference: closed-form
spectral maps from moment matrices, neighbor layouts fit by divergence
descent, and Gaussian processes over neighborhood graphs, plus the
metrics and CLI gluing them together.
"""

__version__ = "0.1.0"

from .estimators import GraphGPPredictor, NeighborEmbedding, SpectralMap
from .exceptions import (
    ConfigError,
    DataError,
    NumericalError,
    ProbembedError,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DataError",
    "GraphGPPredictor",
    "NeighborEmbedding",
    "NumericalError",
    "ProbembedError",
    "SpectralMap",
]
