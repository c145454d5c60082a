"""Sparse graph learning through low-rank factored precision matrices."""

__version__ = "0.1.0"

# plots and cli are not imported here: they pull in matplotlib
from . import config, errors, evaluation, geometry, io, model, optimizer, synthetic
from .config import ExperimentConfig
from .evaluation import RocCurve, edge_scores, lambda_grid_search, roc
from .geometry import ProductPoint, TangentPair
from .model import (
    CovarianceOp,
    ObjectiveConfig,
    PrecisionModel,
    SampleSet,
    assemble_precision,
    conditional_correlation,
    objective_value,
)
from .optimizer import SolverConfig, SolveTrace, initialize, solve, spectral_init
from .synthetic import (
    GraphTopology,
    SensorLayout,
    kernel_ground_truth,
    laplacian,
    precision_from_laplacian,
    random_graph,
    sample_gaussian,
)
