"""Input validation helpers.

Every public entry point funnels its array arguments through these
checks so that error messages are uniform and numerical code can assume
well-formed float64 inputs.
"""

import numpy as np

from .exceptions import DataError

# Asymmetry below this (relative to the matrix magnitude) is treated as
# floating-point noise and silently averaged away.
SYMMETRY_TOL = 1e-10


def as_float_array(a, name="array"):
    """Coerce to a float64 ndarray, rejecting non-finite entries."""
    out = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(out)):
        raise DataError(f"{name} contains NaN or infinite entries")
    return out


def check_data_matrix(y, name="data"):
    """Validate an n x d data matrix: 2-d, finite, n >= 2, d >= 1."""
    y = as_float_array(y, name)
    if y.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {y.shape}")
    n, d = y.shape
    if n < 2:
        raise DataError(f"{name} needs at least 2 rows, got {n}")
    if d < 1:
        raise DataError(f"{name} needs at least 1 column, got {d}")
    return y


def check_square(m, name="matrix"):
    """Validate a square 2-d float matrix."""
    m = as_float_array(m, name)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError(f"{name} must be square, got shape {m.shape}")
    return m


def check_symmetric(m, name="matrix", tol=SYMMETRY_TOL):
    """Validate symmetry up to `tol` and return the averaged matrix.

    The tolerance scales with the magnitude of the matrix so that large
    well-conditioned inputs are not rejected for harmless rounding.
    """
    m = check_square(m, name)
    scale = max(1.0, float(np.abs(m).max()))
    gap = float(np.abs(m - m.T).max())
    if gap > tol * scale:
        raise DataError(
            f"{name} is not symmetric: max |m - m.T| = {gap:.3e} "
            f"exceeds tolerance {tol * scale:.3e}"
        )
    return (m + m.T) / 2.0


def check_embedding(x, name="embedding"):
    """Validate an n x q latent coordinate matrix."""
    x = as_float_array(x, name)
    if x.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {x.shape}")
    if x.shape[1] < 1:
        raise DataError(f"{name} needs at least 1 column")
    return x


def check_components(q, n, name="n_components"):
    """Validate a target dimension 1 <= q < n."""
    q = int(q)
    if not 1 <= q < n:
        raise DataError(f"{name} must satisfy 1 <= {name} < {n}, got {q}")
    return q
