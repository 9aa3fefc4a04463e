"""Neighborhood graphs and graph Laplacians.

Graphs are built from pairwise Euclidean structure and shared by the
moment constructors and the graph Gaussian process code.  Directed
k-nearest-neighbor edges are symmetrized by union: an undirected edge
exists when either endpoint selected the other.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc
from scipy.sparse.csgraph import dijkstra

from .exceptions import DataError
from .linalg import pairwise_sq_dists
from .validation import as_float_array, check_data_matrix, check_symmetric


@dataclass(frozen=True)
class NeighborGraph:
    """Undirected neighborhood graph.

    `edges` is an (m, 3) array of rows (i, j, weight) with i < j.  The
    weight carries squared Euclidean distance for metric graphs and 1.0
    for indicator graphs; `mode` records how the graph was built.
    """

    n: int
    edges: np.ndarray
    mode: str

    def adjacency(self, weighted=False) -> np.ndarray:
        """Dense symmetric adjacency; indicator unless `weighted`."""
        a = np.zeros((self.n, self.n))
        if len(self.edges):
            i = self.edges[:, 0].astype(int)
            j = self.edges[:, 1].astype(int)
            w = self.edges[:, 2] if weighted else 1.0
            a[i, j] = w
            a[j, i] = w
        return a


def knn_indices(y, k) -> np.ndarray:
    """Indices of the k nearest neighbors of each row (self excluded).

    Ties are broken deterministically toward lower indices via a stable
    sort on distances.
    """
    y = check_data_matrix(y, "data")
    n = y.shape[0]
    if not 1 <= k < n:
        raise DataError(f"n_neighbors must satisfy 1 <= k < {n}, got {k}")
    d2 = pairwise_sq_dists(y)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def knn_graph(y, k) -> NeighborGraph:
    """Union-symmetrized kNN graph weighted by squared distances."""
    y = check_data_matrix(y, "data")
    idx = knn_indices(y, k)
    d2 = pairwise_sq_dists(y)
    pairs = set()
    for i in range(y.shape[0]):
        for j in idx[i]:
            a, b = (i, int(j)) if i < j else (int(j), i)
            pairs.add((a, b))
    edges = np.array([[i, j, d2[i, j]] for i, j in sorted(pairs)], dtype=float)
    return NeighborGraph(n=y.shape[0], edges=edges, mode=f"knn({k})")


def epsilon_graph(y, epsilon) -> NeighborGraph:
    """Indicator graph connecting pairs strictly closer than `epsilon`."""
    y = check_data_matrix(y, "data")
    if not epsilon > 0:
        raise DataError(f"epsilon must be positive, got {epsilon}")
    d2 = pairwise_sq_dists(y)
    n = y.shape[0]
    rows, cols = np.nonzero(np.triu(d2 < epsilon**2, k=1))
    edges = np.array([[i, j, 1.0] for i, j in zip(rows, cols)], dtype=float)
    return NeighborGraph(n=n, edges=edges, mode=f"epsilon({epsilon})")


def isolated_nodes(graph: NeighborGraph) -> list[int]:
    """Node ids with no incident edge."""
    present = set()
    for row in graph.edges:
        present.add(int(row[0]))
        present.add(int(row[1]))
    return [i for i in range(graph.n) if i not in present]


def laplacian_matrix(adjacency, kind="ordinary") -> np.ndarray:
    """Graph Laplacian of a symmetric (possibly weighted) adjacency.

    `ordinary` gives D - A.  `normalized` gives I - D^{-1/2} A D^{-1/2}
    with pseudo-inverted degrees, so isolated nodes contribute identity
    rows instead of dividing by zero.
    """
    a = check_symmetric(adjacency, "adjacency")
    if np.any(a < 0):
        raise DataError("adjacency weights must be non-negative")
    a = a.copy()
    np.fill_diagonal(a, 0.0)
    deg = a.sum(axis=1)
    if kind == "ordinary":
        return np.diag(deg) - a
    if kind == "normalized":
        inv_sqrt = np.zeros_like(deg)
        nz = deg > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
        out = np.eye(a.shape[0]) - (inv_sqrt[:, None] * a) * inv_sqrt[None, :]
        return (out + out.T) / 2.0
    raise DataError(f"unknown laplacian kind: {kind!r}")


def geodesic_distances(graph: NeighborGraph) -> np.ndarray:
    """All-pairs shortest-path distances along the graph.

    Edge lengths are Euclidean distances (square roots of the stored
    squared-distance weights).  Raises DataError when the graph is
    disconnected, reporting the component count.
    """
    n = graph.n
    if len(graph.edges) == 0:
        raise DataError(f"graph is disconnected: {n} components over {n} nodes")
    i = graph.edges[:, 0].astype(int)
    j = graph.edges[:, 1].astype(int)
    w = np.sqrt(graph.edges[:, 2])
    sparse = csr_matrix((np.concatenate([w, w]),
                         (np.concatenate([i, j]), np.concatenate([j, i]))),
                        shape=(n, n))
    dist = dijkstra(sparse, directed=False)
    if np.isinf(dist).any():
        n_comp, _ = _cc(sparse, directed=False)
        raise DataError(
            f"graph is disconnected: {n_comp} components over {n} nodes"
        )
    return dist


def connected_component_count(adjacency) -> int:
    """Number of connected components of a symmetric adjacency."""
    a = as_float_array(adjacency, "adjacency")
    n_comp, _ = _cc(csr_matrix(a), directed=False)
    return int(n_comp)
