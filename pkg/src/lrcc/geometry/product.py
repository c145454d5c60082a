"""Product of the quotiented unit-row-norm factor manifold and the positive
orthant: the search space of the graph-learning solver.

A point is a pair (W, sigma); a tangent vector is a pair of arrays anchored
at a point.  All operations delegate component-wise.  Linear combinations of
tangent pairs (conjugate-gradient directions) must be re-projected through
``make_tangent`` because the horizontal constraint is not preserved by
addition in floating point.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import BaseMismatchError, DimensionMismatchError
from . import oblique, positive


@dataclass(frozen=True)
class ProductPoint:
    """A factor matrix with unit-norm rows and a positive scale vector."""

    w: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.w.ndim != 2 or self.sigma.ndim != 1 or self.w.shape[0] != self.sigma.shape[0]:
            raise DimensionMismatchError(
                f"incompatible point shapes {self.w.shape} / {self.sigma.shape}"
            )

    @property
    def p(self) -> int:
        return self.w.shape[0]

    @property
    def k(self) -> int:
        return self.w.shape[1]

    def is_valid(self) -> bool:
        return oblique.check_point(self.w) and bool(np.all(self.sigma > 0))


@dataclass(frozen=True)
class TangentPair:
    """Tangent representative at ``base``: horizontal W-part, free sigma-part."""

    w: np.ndarray
    sigma: np.ndarray
    base: ProductPoint

    def is_valid(self, tol: float = oblique.HORIZONTAL_TOL) -> bool:
        return oblique.check_horizontal(self.base.w, self.w, tol)


def _same_base(x: ProductPoint, u: TangentPair):
    if u.base is x:
        return
    if not (np.array_equal(u.base.w, x.w) and np.array_equal(u.base.sigma, x.sigma)):
        raise BaseMismatchError("tangent vector is anchored at a different point")


def make_tangent(x: ProductPoint, w_part: np.ndarray, sigma_part: np.ndarray) -> TangentPair:
    """Build a tangent pair, horizontally re-projecting the W-part."""
    return TangentPair(
        oblique.horizontal_project(x.w, oblique.tangent_project(x.w, w_part)),
        np.asarray(sigma_part, dtype=float),
        x,
    )


def zero_tangent(x: ProductPoint) -> TangentPair:
    return TangentPair(np.zeros_like(x.w), np.zeros_like(x.sigma), x)


def metric_product(x: ProductPoint, u: TangentPair, v: TangentPair) -> float:
    """Sum of the component metrics."""
    _same_base(x, u)
    _same_base(x, v)
    return oblique.metric(u.w, v.w) + positive.metric_pos(x.sigma, u.sigma, v.sigma)


def norm_product(x: ProductPoint, u: TangentPair) -> float:
    return float(np.sqrt(max(metric_product(x, u, u), 0.0)))


def rgrad_product(x: ProductPoint, eg_w: np.ndarray, eg_sigma: np.ndarray) -> TangentPair:
    """Metric gradient from Euclidean partials.

    The W-part only needs the tangent projection: gradients of functions
    that are invariant under right rotations of W have no vertical
    component, so the horizontal constraint holds automatically.
    """
    return TangentPair(
        oblique.tangent_project(x.w, eg_w),
        positive.egrad_to_rgrad_pos(x.sigma, eg_sigma),
        x,
    )


def retract_product(x: ProductPoint, u: TangentPair, t: float = 1.0) -> ProductPoint:
    _same_base(x, u)
    return ProductPoint(
        oblique.retract(x.w, u.w, t),
        positive.retract_pos(x.sigma, u.sigma, t),
    )


def transport_product(x: ProductPoint, x_new: ProductPoint, u: TangentPair) -> TangentPair:
    _same_base(x, u)
    return TangentPair(
        oblique.transport(x.w, x_new.w, u.w),
        positive.transport_pos(x.sigma, x_new.sigma, u.sigma),
        x_new,
    )
