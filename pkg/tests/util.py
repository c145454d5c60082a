"""Shared helpers for the test suite."""

import numpy as np

from lrcc.geometry import ProductPoint, oblique, make_tangent, retract_product


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def random_product_point(p: int, k: int, seed: int = 0) -> ProductPoint:
    g = rng(seed)
    w = oblique.random_point(p, k, g)
    sigma = g.uniform(0.5, 2.0, size=p)
    return ProductPoint(w=w, sigma=sigma)


def random_tangent(x: ProductPoint, seed: int = 0):
    g = rng(seed)
    return make_tangent(x, g.standard_normal(x.w.shape),
                        g.standard_normal(x.sigma.shape))


def random_orthogonal(k: int, seed: int = 0) -> np.ndarray:
    q, r = np.linalg.qr(rng(seed).standard_normal((k, k)))
    return q * np.sign(np.diag(r))


def central_diff(f, x, u, h: float = 1e-6) -> float:
    """Central difference of f along the retracted curve through x."""
    return (f(retract_product(x, u, h)) - f(retract_product(x, u, -h))) / (2 * h)


def random_spd(p: int, seed: int = 0, cond: float = 10.0) -> np.ndarray:
    g = rng(seed)
    q = np.linalg.qr(g.standard_normal((p, p)))[0]
    ev = np.geomspace(1.0, cond, p)
    return (q * ev) @ q.T
