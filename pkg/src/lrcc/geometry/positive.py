"""Geometry of the strictly positive orthant of R^p.

Points are plain (p,) arrays with positive entries; tangent vectors are
arbitrary (p,) arrays.  The metric rescales by 1/sigma^2 coordinate-wise
(the vector counterpart of the affine-invariant metric on SPD matrices),
which is what keeps retracted points away from the boundary.
"""

import numpy as np

from ..errors import DimensionMismatchError

# floor applied when ingesting external scale data; the metric divides by
# sigma^2 and denormals would poison everything downstream
SCALE_FLOOR = 1e-150


def as_scale_vector(x) -> np.ndarray:
    """Validate and floor a positive vector coming from external data."""
    sigma = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
        raise ValueError("scale vector entries must be finite and strictly positive")
    return np.maximum(sigma, SCALE_FLOOR)


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def metric_pos(sigma: np.ndarray, xi: np.ndarray, eta: np.ndarray) -> float:
    """Inner product sum_i xi_i eta_i / sigma_i^2."""
    _check_same_shape(sigma, xi)
    _check_same_shape(xi, eta)
    return float(np.sum(xi * eta / (sigma * sigma)))


def egrad_to_rgrad_pos(sigma: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Convert a Euclidean gradient to the metric's gradient: sigma^2 * g."""
    _check_same_shape(sigma, g)
    return sigma * sigma * g


def retract_pos(sigma: np.ndarray, xi: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Second-order retraction sigma + t xi + (t xi)^2 / (2 sigma).

    Entrywise this is sigma_i (1 + u + u^2/2) with u = t xi_i / sigma_i;
    the quadratic 1 + u + u^2/2 has no real roots, so the result is
    strictly positive for every finite step.
    """
    _check_same_shape(sigma, xi)
    step = t * xi
    return sigma + step + 0.5 * step * step / sigma


def exp_pos(sigma: np.ndarray, xi: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Exact exponential map sigma * exp(t xi / sigma); test oracle only."""
    return sigma * np.exp(t * xi / sigma)


def transport_pos(sigma: np.ndarray, sigma_new: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Parallel transport: rescale coordinates by sigma_new / sigma."""
    _check_same_shape(sigma, sigma_new)
    _check_same_shape(sigma, xi)
    return sigma_new / sigma * xi
