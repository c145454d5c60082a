from . import oblique, positive, product
from .product import (
    ProductPoint,
    TangentPair,
    make_tangent,
    metric_product,
    norm_product,
    retract_product,
    rgrad_product,
    transport_product,
    zero_tangent,
)

__all__ = [
    "oblique",
    "positive",
    "product",
    "ProductPoint",
    "TangentPair",
    "make_tangent",
    "metric_product",
    "norm_product",
    "retract_product",
    "rgrad_product",
    "transport_product",
    "zero_tangent",
]
