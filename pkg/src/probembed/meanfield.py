"""Mean-field inference over random graph edges behind a Gaussian model.

Rows of the data are modelled as zero-mean Gaussian columns with
precision beta I + L(A), where L(A) counts each unordered edge with
weight 2 rho.  A fully factorized Bernoulli posterior over edges is
optimized by coordinate ascent: each pairwise update needs the cavity
covariance (the model covariance with that edge removed) and the
squared distance kappa it induces between the two endpoints.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DataError
from .linalg import solve_psd
from .rng import as_generator
from .validation import as_float_array, check_square, check_symmetric


@dataclass(frozen=True)
class CaviState:
    """Edge posteriors plus the fixed quantities the updates read.

    `edge_probs` holds q(A_ij = 1), symmetric with zero diagonal;
    `prior` the per-edge prior probabilities (strictly interior, their
    logits appear in the update); `dist_sq` the observed squared
    distances; `dim` the feature count d; `rho` the per-edge coupling
    (defaults to 1/d); `beta` the precision ridge.
    """

    edge_probs: np.ndarray
    prior: np.ndarray
    dist_sq: np.ndarray
    dim: int
    rho: Optional[float] = None
    beta: float = 1.0

    def __post_init__(self):
        q = check_symmetric(as_float_array(self.edge_probs, "edge_probs"),
                            "edge_probs")
        if q.min() < 0 or q.max() > 1:
            raise DataError("edge probabilities must lie in [0, 1]")
        np.fill_diagonal(q, 0.0)
        n = q.shape[0]
        prior = check_square(self.prior, "prior")
        if prior.shape != q.shape:
            raise DataError(f"prior shape {prior.shape} != {q.shape}")
        off = ~np.eye(n, dtype=bool)
        if prior[off].min() <= 0 or prior[off].max() >= 1:
            raise DataError("prior probabilities must be strictly inside (0, 1)")
        d2 = check_symmetric(self.dist_sq, "dist_sq")
        if d2.shape != q.shape:
            raise DataError(f"dist_sq shape {d2.shape} != {q.shape}")
        if d2.min() < 0:
            raise DataError("squared distances must be non-negative")
        if self.dim < 1:
            raise DataError(f"dim must be >= 1, got {self.dim}")
        if not self.beta > 0:
            raise DataError(f"beta must be positive, got {self.beta}")
        rho = 1.0 / self.dim if self.rho is None else float(self.rho)
        if not rho > 0:
            raise DataError(f"rho must be positive, got {rho}")
        object.__setattr__(self, "edge_probs", q)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "dist_sq", d2)
        object.__setattr__(self, "rho", rho)

    @property
    def n_nodes(self) -> int:
        return self.edge_probs.shape[0]


def _check_pair(state: CaviState, i: int, j: int):
    n = state.n_nodes
    if not (0 <= i < n and 0 <= j < n):
        raise DataError(f"pair ({i}, {j}) out of range for {n} nodes")
    if i == j:
        raise DataError("self-edges are excluded from the model")


def _laplacian_of(weights: np.ndarray, rho: float) -> np.ndarray:
    """Precision contribution 2 rho (D - W) of symmetric edge weights."""
    deg = np.diag(weights.sum(axis=1))
    return 2.0 * rho * (deg - weights)


def expected_laplacian(state: CaviState, exclude=None) -> np.ndarray:
    """Expected edge-weight Laplacian, optionally with one pair zeroed.

    Linearity in the adjacency lets the expectation act entrywise on
    the edge probabilities; `exclude=(i, j)` removes that pair before
    building the Laplacian, giving the cavity form.
    """
    q = state.edge_probs
    if exclude is not None:
        i, j = exclude
        _check_pair(state, i, j)
        q = q.copy()
        q[i, j] = 0.0
        q[j, i] = 0.0
    return _laplacian_of(q, state.rho)


def full_covariance(state: CaviState) -> np.ndarray:
    """Model covariance (beta I + expected Laplacian)^{-1}."""
    n = state.n_nodes
    precision = state.beta * np.eye(n) + expected_laplacian(state)
    cov = solve_psd(precision, np.eye(n), "edge-model precision")
    return (cov + cov.T) / 2.0


def cavity_covariance(state: CaviState, i: int, j: int) -> np.ndarray:
    """Model covariance with edge (i, j) removed.

    beta > 0 keeps the ridged Laplacian invertible for any edge
    probabilities, so no degenerate case exists.
    """
    _check_pair(state, i, j)
    n = state.n_nodes
    precision = state.beta * np.eye(n) + expected_laplacian(state, exclude=(i, j))
    cov = solve_psd(precision, np.eye(n), "cavity precision")
    return (cov + cov.T) / 2.0


def cavity_distance(state: CaviState, i: int, j: int) -> float:
    """Squared distance between nodes i and j under the cavity Gaussian.

    Equals the quadratic form of e_i - e_j in the cavity covariance:
    c_ii + c_jj - 2 c_ij, always non-negative.
    """
    cov = cavity_covariance(state, i, j)
    return float(cov[i, i] + cov[j, j] - 2.0 * cov[i, j])


def expected_cavity_distance(state: CaviState, i: int, j: int,
                             mode="plugin", n_samples=32, rng=None) -> float:
    """Posterior expectation of the cavity distance for edge (i, j).

    The default plug-in estimate builds the expected Laplacian from the
    current edge probabilities and reads kappa off its cavity inverse;
    it is deterministic.  `mode="mc"` instead averages kappa over
    `n_samples` graphs drawn edgewise from the current posterior.
    """
    _check_pair(state, i, j)
    if mode == "plugin":
        return cavity_distance(state, i, j)
    if mode != "mc":
        raise DataError(f"mode must be 'plugin' or 'mc', got {mode!r}")
    if n_samples < 1:
        raise DataError(f"n_samples must be >= 1, got {n_samples}")
    gen = as_generator(rng)
    n = state.n_nodes
    q = state.edge_probs
    phi = np.zeros(n)
    phi[i], phi[j] = 1.0, -1.0
    total = 0.0
    upper = np.triu_indices(n, k=1)
    for _ in range(int(n_samples)):
        draws = (gen.random(len(upper[0])) < q[upper]).astype(float)
        a = np.zeros((n, n))
        a[upper] = draws
        a = a + a.T
        a[i, j] = 0.0
        a[j, i] = 0.0
        precision = state.beta * np.eye(n) + _laplacian_of(a, state.rho)
        total += float(phi @ solve_psd(precision, phi, "sampled cavity precision"))
    return total / n_samples


def cavi_update(state: CaviState, i: int, j: int, mode="plugin",
                n_samples=32, rng=None) -> float:
    """One coordinate update of the edge posterior q(A_ij = 1).

    Returns the logistic of (expected cavity distance - d_ij / d +
    logit prior); strictly inside (0, 1) for interior priors.
    """
    _check_pair(state, i, j)
    kappa = expected_cavity_distance(state, i, j, mode=mode,
                                     n_samples=n_samples, rng=rng)
    pi = state.prior[i, j]
    logit_prior = np.log(pi) - np.log1p(-pi)
    z = kappa - state.dist_sq[i, j] / state.dim + logit_prior
    # expit via the stable two-branch form; z is a finite scalar here
    if z >= 0:
        return float(1.0 / (1.0 + np.exp(-z)))
    e = np.exp(z)
    return float(e / (1.0 + e))


@dataclass(frozen=True)
class CaviResult:
    """Converged (or capped) sweep output with its per-sweep changes."""

    state: CaviState
    change_trace: list
    converged: bool


def cavi_sweep(state: CaviState, max_sweeps=200, tol=1e-5, mode="plugin",
               n_samples=32, rng=None) -> CaviResult:
    """Run full lexicographic update sweeps until the posterior settles.

    Each sweep visits pairs (i, j) with i < j in fixed order, writing
    updates symmetrically as it goes.  The trace records the largest
    absolute probability change per sweep; iteration stops when it
    drops below `tol` or after `max_sweeps` sweeps (converged=False).
    """
    if max_sweeps < 1:
        raise DataError(f"max_sweeps must be >= 1, got {max_sweeps}")
    gen = as_generator(rng) if mode == "mc" else None
    current = state
    trace = []
    converged = False
    n = state.n_nodes
    for _ in range(int(max_sweeps)):
        max_change = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                new_q = cavi_update(current, i, j, mode=mode,
                                    n_samples=n_samples, rng=gen)
                max_change = max(max_change, abs(new_q - current.edge_probs[i, j]))
                q = current.edge_probs.copy()
                q[i, j] = new_q
                q[j, i] = new_q
                current = CaviState(edge_probs=q, prior=state.prior,
                                    dist_sq=state.dist_sq, dim=state.dim,
                                    rho=state.rho, beta=state.beta)
        trace.append(float(max_change))
        if max_change < tol:
            converged = True
            break
    return CaviResult(state=current, change_trace=trace, converged=converged)
