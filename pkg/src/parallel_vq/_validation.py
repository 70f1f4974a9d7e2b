"""Input validation helpers shared by the kernels and estimators."""

import numpy as np


class ShapeError(ValueError):
    """Raised when arrays passed to a kernel do not have compatible shapes."""


def check_prototypes(w, copy=False):
    """Return ``w`` as a C-contiguous float64 (kappa, dim) array.

    Rejects empty, non-2D and non-finite inputs.
    """
    if copy:
        w = np.array(w, dtype=np.float64, order="C")
    else:
        w = np.ascontiguousarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
        raise ShapeError(f"prototypes must be a non-empty 2D array, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("prototypes contain NaN or Inf")
    return w


def check_point(z, dim):
    z = np.ascontiguousarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] != dim:
        raise ShapeError(f"data point must have shape ({dim},), got {z.shape}")
    return z


def check_points(X, dim=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2D array of points, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ShapeError(f"points have dimension {X.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contain NaN or Inf")
    return X


def check_shards(shards, dim=None):
    """Return shards as a float64 (M, n, dim) array."""
    shards = np.ascontiguousarray(shards, dtype=np.float64)
    if shards.ndim != 3 or 0 in shards.shape:
        raise ShapeError(f"shards must be a non-empty (M, n, dim) array, got {shards.shape}")
    if dim is not None and shards.shape[2] != dim:
        raise ShapeError(f"shards have dimension {shards.shape[2]}, expected {dim}")
    return shards


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
