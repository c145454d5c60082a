"""Synthetic benchmark data: random graphs, Laplacian precisions, samples.

The benchmark pipeline is: draw a weighted random topology, form the
Laplacian, shift it to a positive definite precision, draw Gaussian
samples with that precision, then ask the estimator to recover the edge
set from the samples alone.  A kernel-distance builder provides binary
ground truth for sensor layouts given by coordinates.

All randomness flows through counter-based Philox generators so a seed
means the same draw on every platform.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph

from .errors import CholeskyFailedError, DimensionMismatchError
from .model import SampleSet

GRAPH_MODELS = ("barabasi-albert", "erdos-renyi")


@dataclass(frozen=True)
class GraphTopology:
    """Weighted undirected graph as a symmetric adjacency matrix."""

    adjacency: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatchError("adjacency must be square")
        if not np.allclose(a, a.T, atol=1e-12):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be zero")
        if np.any(a < 0):
            raise ValueError("adjacency weights must be nonnegative")
        object.__setattr__(self, "adjacency", 0.5 * (a + a.T))
        if self.labels is not None and len(self.labels) != a.shape[0]:
            raise DimensionMismatchError("one label per node required")

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]

    def edge_mask(self) -> np.ndarray:
        """Boolean upper-triangle indicator of present edges."""
        return np.triu(self.adjacency > 0, k=1)

    def edge_count(self) -> int:
        return int(self.edge_mask().sum())

    def component_count(self) -> int:
        graph = scipy.sparse.csr_matrix(self.adjacency)
        n, _ = scipy.sparse.csgraph.connected_components(graph, directed=False)
        return int(n)


@dataclass(frozen=True)
class SensorLayout:
    """Planar sensor positions, one row per sensor, in meters."""

    coords: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 2 or c.shape[1] != 2:
            raise DimensionMismatchError("coordinates must be p x 2")
        if not np.all(np.isfinite(c)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "coords", c)
        if self.labels is not None and len(self.labels) != c.shape[0]:
            raise DimensionMismatchError("one label per sensor required")

    @property
    def p(self) -> int:
        return self.coords.shape[0]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _ba_edges(p: int, m: int, rng: np.random.Generator):
    """Preferential attachment: each arriving node links to m earlier ones.

    Seeded with m unconnected nodes; the first arrival picks its targets
    uniformly (all degrees are still zero).  ``pool`` repeats each node
    once per incident edge, so uniform draws from it realize
    degree-proportional attachment.
    """
    edges = []
    targets = list(range(m))
    pool: list[int] = []
    for u in range(m, p):
        for v in targets:
            edges.append((v, u))
        pool.extend(targets)
        pool.extend([u] * m)
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(pool[rng.integers(len(pool))])
        targets = sorted(chosen)
    return edges


def random_graph(p: int, model: str = "barabasi-albert", density_param: float = 0.1,
                 weight_range: tuple[float, float] = (2.0, 5.0), seed: int = 0) -> GraphTopology:
    """Weighted random topology with i.i.d. uniform edge weights.

    For preferential attachment the density parameter maps to the
    per-arrival edge count m = max(1, round(density_param * p / 2)), so
    the expected edge density is roughly density_param.  For the
    independent-pairs model it is the edge probability directly.
    """
    if p < 2:
        raise ValueError("need at least two nodes")
    lo, hi = weight_range
    if not 0 < lo < hi:
        raise ValueError("weight range must satisfy 0 < lo < hi")
    if model not in GRAPH_MODELS:
        raise ValueError(f"unknown graph model {model!r}; choose from {GRAPH_MODELS}")
    rng = _rng(seed)
    adj = np.zeros((p, p))
    if model == "barabasi-albert":
        m = max(1, round(density_param * p / 2))
        m = min(m, p - 1)
        edges = _ba_edges(p, m, rng)
        for u, v in edges:
            w = rng.uniform(lo, hi)
            adj[u, v] = adj[v, u] = w
    else:
        if not 0 <= density_param <= 1:
            raise ValueError("edge probability must lie in [0, 1]")
        iu, ju = np.triu_indices(p, k=1)
        present = rng.uniform(size=iu.size) < density_param
        weights = rng.uniform(lo, hi, size=iu.size)
        adj[iu[present], ju[present]] = weights[present]
        adj[ju[present], iu[present]] = weights[present]
    return GraphTopology(adjacency=adj)


def laplacian(topology: GraphTopology) -> np.ndarray:
    """Combinatorial Laplacian: degree matrix minus adjacency."""
    a = topology.adjacency
    return np.diag(a.sum(axis=1)) - a


def precision_from_laplacian(lap: np.ndarray, kappa: float = 0.1) -> np.ndarray:
    """Diagonal shift making the (singular) Laplacian positive definite."""
    if kappa <= 0:
        raise ValueError("diagonal shift must be > 0")
    lap = np.asarray(lap, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise DimensionMismatchError("Laplacian must be square")
    return lap + kappa * np.eye(lap.shape[0])


def sample_gaussian(theta: np.ndarray, n: int, seed: int = 0) -> SampleSet:
    """Draw n zero-mean Gaussian columns with precision ``theta``.

    Uses the Cholesky factor C of theta: solving C^T X = Z gives columns
    with covariance theta^{-1} without ever forming the inverse.
    """
    theta = np.asarray(theta, dtype=float)
    if n < 1:
        raise ValueError("need at least one sample")
    try:
        chol = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailedError("precision matrix is not positive definite") from exc
    z = _rng(seed).standard_normal((theta.shape[0], n))
    x = scipy.linalg.solve_triangular(chol.T, z, lower=False)
    return SampleSet.from_data(x)


def pairwise_distances(layout: SensorLayout) -> np.ndarray:
    d = layout.coords[:, None, :] - layout.coords[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", d, d))


def kernel_ground_truth(layout: SensorLayout, gamma: float = 5.0, beta: float = 0.5) -> GraphTopology:
    """Binary proximity graph: edge iff exp(-d / (2 gamma^2)) >= beta.

    The exponent uses the plain distance d, not d^2, so with gamma=5 and
    beta=0.5 the edge boundary sits at d = 50 ln 2.
    """
    if gamma <= 0:
        raise ValueError("kernel bandwidth must be > 0")
    if not 0 < beta < 1:
        raise ValueError("threshold must lie in (0, 1)")
    dist = pairwise_distances(layout)
    adj = (np.exp(-dist / (2.0 * gamma * gamma)) >= beta).astype(float)
    np.fill_diagonal(adj, 0.0)
    return GraphTopology(adjacency=adj, labels=layout.labels)
