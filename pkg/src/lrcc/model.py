"""Low-rank conditional-correlation model of a precision matrix.

The precision matrix is parameterized as Theta = diag(sigma) W W^T
diag(sigma) with W a p x k matrix with unit-norm rows and sigma a strictly
positive vector.  Off-diagonal entries of W W^T are (minus) conditional
correlations, so the factor alone carries the graph; sigma carries the
per-node scale.  The objective fitted to data is

    0.5 tr(Theta S) - 0.5 log det_k(Theta) + lam * h(Theta)

where det_k is the product of the k nonzero eigenvalues of Theta and h is
a smooth sparsity penalty sum_{q != l} eps * log cosh(Theta_ql / eps).

Everything on the hot path works with the p x k factor A = diag(sigma) W
and k x k Gram matrices; the only quadratic-in-p work is the penalty,
which is swept in fixed-size tiles regenerated from the factor so that no
p x p array is ever allocated.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, RankDeficientError
from .geometry import oblique

# edge length of the square blocks used by the penalty sweeps
PENALTY_TILE = 512

# largest p for which dense p x p materialization is allowed by default
DENSE_CAP = 2000


@dataclass(frozen=True)
class ObjectiveConfig:
    """Penalty weight, log-cosh smoothing, and rank bound."""

    lam: float = 0.0
    eps: float = 1e-2
    k: int = 1

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("penalty weight must be >= 0")
        if self.eps <= 0:
            raise ValueError("log-cosh smoothing must be > 0")
        if self.k < 1:
            raise ValueError("rank bound must be >= 1")


@dataclass(frozen=True)
class SampleSet:
    """Node-major data matrix with its sample covariance."""

    x: np.ndarray | None
    s: np.ndarray
    n: int

    @classmethod
    def from_data(cls, x: np.ndarray) -> "SampleSet":
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise DimensionMismatchError("data matrix must be p x n")
        n = x.shape[1]
        if n < 1:
            raise ValueError("need at least one sample")
        s = x @ x.T / n
        return cls(x=x, s=0.5 * (s + s.T), n=n)

    @classmethod
    def from_covariance(cls, s: np.ndarray, n: int) -> "SampleSet":
        s = np.asarray(s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise DimensionMismatchError("covariance must be square")
        return cls(x=None, s=0.5 * (s + s.T), n=n)

    @property
    def p(self) -> int:
        return self.s.shape[0]


class CovarianceOp:
    """Action of the sample covariance without committing to a storage form.

    Backed either by a dense p x p matrix or by the data matrix itself
    (S = X X^T / n applied as two skinny products).  The data-backed form
    is what keeps large-p solves free of p x p allocations.
    """

    def __init__(self, s: np.ndarray | None = None, x: np.ndarray | None = None, n: int | None = None):
        if (s is None) == (x is None):
            raise ValueError("provide exactly one of a covariance or a data matrix")
        if s is not None:
            s = np.asarray(s, dtype=float)
            if s.ndim != 2 or s.shape[0] != s.shape[1]:
                raise DimensionMismatchError("covariance must be square")
        else:
            x = np.asarray(x, dtype=float)
            if x.ndim != 2:
                raise DimensionMismatchError("data matrix must be p x n")
            n = x.shape[1] if n is None else n
        self._s = s
        self._x = x
        self._n = n

    @property
    def p(self) -> int:
        return self._s.shape[0] if self._s is not None else self._x.shape[0]

    def matmat(self, a: np.ndarray) -> np.ndarray:
        if self._s is not None:
            return self._s @ a
        return self._x @ (self._x.T @ a) / self._n

    def quad_form(self, a: np.ndarray) -> float:
        """tr(A^T S A)."""
        if self._s is not None:
            return float(np.tensordot(a, self._s @ a))
        xa = self._x.T @ a
        return float(np.tensordot(xa, xa) / self._n)

    def diag(self) -> np.ndarray:
        if self._s is not None:
            return np.diag(self._s).copy()
        return np.einsum("ij,ij->i", self._x, self._x) / self._n

    def trace(self) -> float:
        return float(np.sum(self.diag()))

    def dense(self) -> np.ndarray:
        if self._s is not None:
            return self._s
        s = self._x @ self._x.T / self._n
        return 0.5 * (s + s.T)


def as_covariance(obj) -> CovarianceOp:
    """Coerce a SampleSet, covariance matrix, or CovarianceOp."""
    if isinstance(obj, CovarianceOp):
        return obj
    if isinstance(obj, SampleSet):
        return CovarianceOp(s=obj.s)
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return CovarianceOp(s=arr)
    raise DimensionMismatchError("expected a SampleSet or a square covariance matrix")


@dataclass(frozen=True)
class PrecisionModel:
    """The pair (W, sigma) plus cached k x k Gram factors.

    ``scaled_w`` is A = diag(sigma) W, ``gram`` is A^T A = W^T diag(sigma^2) W
    and ``gram_w`` is W^T W.  Theta = A A^T is never stored; ``dense`` builds
    it on demand for moderate p.
    """

    w: np.ndarray
    sigma: np.ndarray
    scaled_w: np.ndarray
    gram: np.ndarray
    gram_w: np.ndarray

    @property
    def p(self) -> int:
        return self.w.shape[0]

    @property
    def k(self) -> int:
        return self.w.shape[1]

    def dense(self, max_p: int = DENSE_CAP) -> np.ndarray:
        """Materialize Theta; explicit opt-in, refused above ``max_p``."""
        if self.p > max_p:
            raise ValueError(f"refusing to materialize {self.p} x {self.p} matrix (cap {max_p})")
        return self.scaled_w @ self.scaled_w.T


def assemble_precision(w: np.ndarray, sigma: np.ndarray) -> PrecisionModel:
    """Bind a factor and scale vector, building the Gram caches."""
    w = np.asarray(w, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if w.ndim != 2 or sigma.ndim != 1 or w.shape[0] != sigma.shape[0]:
        raise DimensionMismatchError(f"incompatible shapes {w.shape} / {sigma.shape}")
    a = sigma[:, None] * w
    return PrecisionModel(w=w, sigma=sigma, scaled_w=a, gram=a.T @ a, gram_w=w.T @ w)


def conditional_correlation(model: PrecisionModel, q: int, l: int) -> float:
    """Conditional correlation of nodes ``q`` and ``l`` given all others.

    Equals -Theta_ql / sqrt(Theta_qq Theta_ll).  Rows of W have unit norm,
    so Theta_qq = sigma_q^2 > 0 always: the denominator cannot vanish and
    the value reduces to minus the inner product of rows q and l of W.
    """
    p = model.p
    if not (0 <= q < p and 0 <= l < p):
        raise IndexError(f"node index out of range for p={p}")
    if q == l:
        raise ValueError("conditional correlation is defined for distinct nodes")
    return float(-np.dot(model.w[q], model.w[l]))


def _log_cosh(u: np.ndarray) -> np.ndarray:
    # |u| + log1p(exp(-2|u|)) - log 2, stable for large |u|
    au = np.abs(u)
    return au + np.log1p(np.exp(-2.0 * au)) - math.log(2.0)


def _penalty_tile_sum(block: np.ndarray, eps: float) -> float:
    return float(eps * np.sum(_log_cosh(block / eps)))


def penalty_value(model: PrecisionModel, eps: float, tile: int = PENALTY_TILE) -> float:
    """Smooth sparsity penalty sum_{q != l} eps log cosh(Theta_ql / eps).

    Swept over tiles of Theta regenerated from the factor; symmetric
    off-diagonal blocks are visited once and counted twice.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    a = model.scaled_w
    p = model.p
    total = 0.0
    for i0 in range(0, p, tile):
        i1 = min(i0 + tile, p)
        ai = a[i0:i1]
        block = ai @ ai.T
        total += _penalty_tile_sum(block, eps)
        total -= float(eps * np.sum(_log_cosh(np.einsum("ij,ij->i", ai, ai) / eps)))
        for j0 in range(i1, p, tile):
            j1 = min(j0 + tile, p)
            total += 2.0 * _penalty_tile_sum(ai @ a[j0:j1].T, eps)
    return total


def penalty_gradient(model: PrecisionModel, eps: float, max_p: int = DENSE_CAP) -> np.ndarray:
    """Dense gradient of the penalty: tanh(Theta_ql / eps) off the diagonal.

    The diagonal is excluded from the penalty sum, so it is zeroed here.
    Dense by nature (elementwise in Theta); use ``penalty_gradient_matmat``
    on the hot path instead.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    g = np.tanh(model.dense(max_p=max_p) / eps)
    np.fill_diagonal(g, 0.0)
    return g


def penalty_gradient_matmat(
    model: PrecisionModel, eps: float, b: np.ndarray, tile: int = PENALTY_TILE
) -> np.ndarray:
    """Product tanh(Theta/eps)_offdiag @ b without materializing p x p.

    Each Theta tile is regenerated as an outer product of factor slices,
    passed through tanh, and immediately contracted against the matching
    row block of ``b``; memory stays O(tile^2 + p k).
    """
    a = model.scaled_w
    p = model.p
    out = np.zeros((p, b.shape[1]))
    for i0 in range(0, p, tile):
        i1 = min(i0 + tile, p)
        ai = a[i0:i1]
        t = np.tanh(ai @ ai.T / eps)
        np.fill_diagonal(t, 0.0)
        out[i0:i1] += t @ b[i0:i1]
        for j0 in range(i1, p, tile):
            j1 = min(j0 + tile, p)
            t = np.tanh(ai @ a[j0:j1].T / eps)
            out[i0:i1] += t @ b[j0:j1]
            out[j0:j1] += t.T @ b[i0:i1]
    return out


def _penalty_value_and_matmat(
    model: PrecisionModel, eps: float, b: np.ndarray, tile: int = PENALTY_TILE
):
    """Penalty value and gradient action in a single tiled sweep."""
    a = model.scaled_w
    p = model.p
    out = np.zeros((p, b.shape[1]))
    total = 0.0
    for i0 in range(0, p, tile):
        i1 = min(i0 + tile, p)
        ai = a[i0:i1]
        block = ai @ ai.T
        total += _penalty_tile_sum(block, eps)
        total -= float(eps * np.sum(_log_cosh(np.diag(block) / eps)))
        t = np.tanh(block / eps)
        np.fill_diagonal(t, 0.0)
        out[i0:i1] += t @ b[i0:i1]
        for j0 in range(i1, p, tile):
            j1 = min(j0 + tile, p)
            block = ai @ a[j0:j1].T
            total += 2.0 * _penalty_tile_sum(block, eps)
            t = np.tanh(block / eps)
            out[i0:i1] += t @ b[j0:j1]
            out[j0:j1] += t.T @ b[i0:i1]
    return total, out


def _gram_cholesky(model: PrecisionModel) -> np.ndarray:
    """Lower Cholesky factor of the Gram matrix, or RankDeficientError.

    A failed factorization *is* the rank detector: the Gram matrix of a
    full-column-rank scaled factor is positive definite.  A pivot ratio
    below sqrt(1e-12) flags near-singularity that Cholesky survives.
    """
    if not np.all(np.isfinite(model.gram)):
        raise RankDeficientError("Gram matrix has non-finite entries")
    try:
        chol = np.linalg.cholesky(model.gram)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError("Gram matrix is not positive definite") from exc
    d = np.diag(chol)
    if d.min() ** 2 < 1e-12 * d.max() ** 2:
        raise RankDeficientError("Gram matrix is numerically rank deficient")
    return chol


def logdet_k(model: PrecisionModel) -> float:
    """Log of the product of the k nonzero eigenvalues of Theta.

    Those eigenvalues coincide with the spectrum of the k x k Gram matrix
    A^T A, so a Cholesky of the Gram gives the value in O(p k^2 + k^3).
    """
    chol = _gram_cholesky(model)
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def pseudo_inverse_factor(model: PrecisionModel) -> np.ndarray:
    """B with Theta^+ = B B^T, namely B = A (A^T A)^{-1}."""
    chol = _gram_cholesky(model)
    return scipy.linalg.cho_solve((chol, True), model.scaled_w.T).T


def pseudo_inverse(model: PrecisionModel, max_p: int = DENSE_CAP) -> np.ndarray:
    """Dense Moore-Penrose pseudo-inverse of Theta.

    Uses the rank-factorization identity (A A^T)^+ = A (A^T A)^{-2} A^T.
    """
    if model.p > max_p:
        raise ValueError(f"refusing to materialize {model.p} x {model.p} matrix (cap {max_p})")
    b = pseudo_inverse_factor(model)
    return b @ b.T


def objective_value(w: np.ndarray, sigma: np.ndarray, samples, cfg: ObjectiveConfig) -> float:
    """Penalized fit of the factored precision to the sample covariance.

    Returns +inf when the Gram matrix is singular (rank below k), which is
    the convention that keeps line searches away from the rank boundary.
    """
    model = assemble_precision(w, sigma)
    return objective_from_model(model, as_covariance(samples), cfg)


def objective_from_model(model: PrecisionModel, cov: CovarianceOp, cfg: ObjectiveConfig) -> float:
    try:
        ld = logdet_k(model)
    except RankDeficientError:
        return math.inf
    value = 0.5 * cov.quad_form(model.scaled_w) - 0.5 * ld
    if cfg.lam > 0:
        value += cfg.lam * penalty_value(model, cfg.eps)
    return value


def euclidean_grad_theta(model: PrecisionModel, samples, cfg: ObjectiveConfig) -> np.ndarray:
    """Dense gradient of the objective in Theta-space.

    0.5 (S - Theta^+) + lam tanh(Theta/eps)_offdiag; the 0.5 keeps the
    gradient consistent with the 0.5-weighted fit terms of the objective.
    """
    cov = as_covariance(samples)
    g = 0.5 * (cov.dense() - pseudo_inverse(model))
    if cfg.lam > 0:
        g = g + cfg.lam * penalty_gradient(model, cfg.eps)
    return 0.5 * (g + g.T)


def chain_rule_grads(w: np.ndarray, sigma: np.ndarray, g_theta: np.ndarray):
    """Pull a symmetric Theta-space gradient back to (W, sigma) partials.

    With A = diag(sigma) W and M = G A:
      grad_W     = 2 diag(sigma) M
      grad_sigma = 2 rowsum(W * M)
    which realizes grad_sigma = 2 diagvec(W W^T diag(sigma) G) without any
    p x p intermediate beyond G itself.
    """
    w = np.asarray(w, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if g_theta.shape != (w.shape[0], w.shape[0]):
        raise DimensionMismatchError("Theta-space gradient has wrong shape")
    m = g_theta @ (sigma[:, None] * w)
    return 2.0 * sigma[:, None] * m, 2.0 * np.einsum("ij,ij->i", w, m)


def value_and_euclidean_grads(model: PrecisionModel, cov: CovarianceOp, cfg: ObjectiveConfig):
    """Objective value and Euclidean partials in factored form.

    The Theta-space gradient is never materialized: its action on the
    factor, M = (0.5 (S - Theta^+) + lam grad h) A, is assembled from
    skinny products plus the tiled penalty sweep.  Raises
    RankDeficientError at rank-deficient points (where the value is +inf).
    """
    a = model.scaled_w
    sa = cov.matmat(a)
    quad = float(np.tensordot(a, sa))
    ld = logdet_k(model)
    pinv_a = pseudo_inverse_factor(model)  # Theta^+ A = A G^{-1}
    m = 0.5 * (sa - pinv_a)
    value = 0.5 * quad - 0.5 * ld
    if cfg.lam > 0:
        pen, pen_a = _penalty_value_and_matmat(model, cfg.eps, a)
        m += cfg.lam * pen_a
        value += cfg.lam * pen
    eg_w = 2.0 * model.sigma[:, None] * m
    eg_sigma = 2.0 * np.einsum("ij,ij->i", model.w, m)
    return value, eg_w, eg_sigma
