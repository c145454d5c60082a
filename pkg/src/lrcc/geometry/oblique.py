"""Geometry of p x k matrices with unit-norm rows, quotiented by right
rotations.

Points are plain (p, k) arrays whose rows all have Euclidean norm 1.
Right-multiplying a point by a k x k orthogonal matrix does not change the
outer product W W^T, so directions of the form W @ Omega (Omega
skew-symmetric) are "vertical": they move along the equivalence class.
The horizontal space is the orthogonal complement of those directions
inside the tangent space, and is where descent directions live.

Tangent vectors are plain (p, k) arrays; no re-projection happens
implicitly, callers re-project after taking linear combinations.
"""

import numpy as np

from ..errors import DimensionMismatchError, SylvesterSingularError, ZeroRowError

POINT_TOL = 1e-12
HORIZONTAL_TOL = 1e-10

_ROW_NORM_FLOOR = 1e-300


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def row_norms_sq(z: np.ndarray) -> np.ndarray:
    """Diagonal of Z Z^T without forming the p x p product."""
    return np.einsum("ij,ij->i", z, z)


def project_to_manifold(z: np.ndarray) -> np.ndarray:
    """Normalize every row of ``z`` to unit Euclidean norm.

    Raises ZeroRowError when a row norm underflows; the caller should
    re-randomize that row rather than silently keep a garbage direction.
    """
    norms = np.sqrt(row_norms_sq(z))
    if np.any(norms < _ROW_NORM_FLOOR):
        raise ZeroRowError("input has a row with (numerically) zero norm")
    return z / norms[:, None]


def check_point(w: np.ndarray, tol: float = POINT_TOL) -> bool:
    """True when every row norm is within ``tol`` of 1."""
    return bool(np.max(np.abs(row_norms_sq(w) - 1.0)) <= 2 * tol)


def tangent_project(w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Orthogonal projection of an ambient matrix onto the tangent space.

    The tangent space at ``w`` consists of matrices whose rows are
    orthogonal to the corresponding rows of ``w``; the projection removes
    the per-row component along ``w``.
    """
    _check_same_shape(w, z)
    return z - np.einsum("ij,ij->i", z, w)[:, None] * w


def check_tangent(w: np.ndarray, xi: np.ndarray, tol: float = POINT_TOL) -> bool:
    return bool(np.max(np.abs(np.einsum("ij,ij->i", xi, w))) <= max(tol, tol * np.abs(xi).max(initial=1.0)))


def _solve_skew_sylvester(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve gram @ Omega + Omega @ gram = rhs for skew-symmetric Omega.

    ``gram`` is symmetric PSD (k x k), ``rhs`` skew-symmetric.  The solve
    is diagonalized by the eigenbasis of ``gram``; component (i, j) divides
    by (lam_i + lam_j).  Pairs with lam_i + lam_j below 1e-12 * lam_max are
    zeroed; if the right-hand side is non-negligible there, the projection
    is ill-posed and SylvesterSingularError is raised.
    """
    lam, u = np.linalg.eigh(gram)
    rhs_t = u.T @ rhs @ u
    denom = lam[:, None] + lam[None, :]
    lam_max = max(lam[-1], 0.0)
    bad = denom < 1e-12 * lam_max if lam_max > 0 else np.ones_like(denom, dtype=bool)
    if np.any(bad):
        if np.any(np.abs(rhs_t[bad]) > 1e-8):
            raise SylvesterSingularError(
                "factor is numerically rank-deficient; horizontal projection is not unique"
            )
        denom = np.where(bad, 1.0, denom)
        rhs_t = np.where(bad, 0.0, rhs_t)
    omega_t = rhs_t / denom
    omega = u @ omega_t @ u.T
    # re-skew to scrub rounding: the exact solution is skew-symmetric
    return 0.5 * (omega - omega.T)


def vertical_project(w: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Component of a tangent vector along the equivalence class, W @ Omega."""
    _check_same_shape(w, xi)
    c = w.T @ xi
    return w @ _solve_skew_sylvester(w.T @ w, c - c.T)


def horizontal_project(w: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Remove the vertical component of a tangent vector.

    The result stays tangent (rows of W @ Omega are orthogonal to rows of
    ``w`` since Omega is skew) and satisfies the symmetry condition
    W^T xi = xi^T W that characterizes horizontality.
    """
    return xi - vertical_project(w, xi)


def check_horizontal(w: np.ndarray, xi: np.ndarray, tol: float = HORIZONTAL_TOL) -> bool:
    scale = max(1.0, float(np.abs(xi).max(initial=0.0)))
    if np.max(np.abs(np.einsum("ij,ij->i", xi, w))) > tol * scale:
        return False
    wtxi = w.T @ xi
    return bool(np.max(np.abs(wtxi - wtxi.T)) <= tol * scale)


def retract(w: np.ndarray, xi: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Row-renormalize ``w + t * xi``; first-order retraction."""
    _check_same_shape(w, xi)
    return project_to_manifold(w + t * xi)


def transport(w: np.ndarray, w_new: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Carry a horizontal vector at ``w`` to the horizontal space at ``w_new``
    by projecting its entries (tangent projection, then horizontal)."""
    return horizontal_project(w_new, tangent_project(w_new, xi))


def metric(xi: np.ndarray, eta: np.ndarray) -> float:
    """Euclidean inner product tr(xi^T eta); base-point independent."""
    _check_same_shape(xi, eta)
    return float(np.tensordot(xi, eta))


def random_point(p: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Row-normalized standard Gaussian draw; rows re-drawn while degenerate."""
    z = rng.standard_normal((p, k))
    while True:
        small = row_norms_sq(z) < 1e-16
        if not np.any(small):
            break
        z[small] = rng.standard_normal((int(small.sum()), k))
    return project_to_manifold(z)


def random_horizontal(w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random horizontal tangent vector at ``w`` (for tests and probes)."""
    return horizontal_project(w, tangent_project(w, rng.standard_normal(w.shape)))
