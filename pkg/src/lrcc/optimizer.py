"""Riemannian first-order solvers for the factored precision objective.

Gradient descent and Polak-Ribiere+ conjugate gradient on the product of
the unit-row-norm factor manifold (modulo right rotations) and the
positive scale orthant, with Armijo backtracking.  A solve walks:
assemble the model, take Euclidean partials, convert to the Riemannian
gradient, pick a direction, retract along it with a line search, repeat.
"""

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import model as model_mod
from .errors import (
    DegenerateCovarianceError,
    DimensionMismatchError,
    LineSearchFailedError,
    RankDeficientError,
)
from .geometry import (
    ProductPoint,
    TangentPair,
    make_tangent,
    metric_product,
    norm_product,
    retract_product,
    rgrad_product,
    transport_product,
)
from .model import CovarianceOp, ObjectiveConfig, as_covariance

_METHODS = ("gradient-descent", "conjugate-gradient")
_ALIASES = {"gd": "gradient-descent", "cg": "conjugate-gradient"}

# warm-started trial step is clamped to this range
_STEP_MIN = 1e-8
_STEP_MAX = 1e4


@dataclass(frozen=True)
class SolverConfig:
    method: str = "conjugate-gradient"
    max_iters: int = 1000
    grad_tol: float = 1e-6
    initial_step: float = 1.0
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 30
    cg_restart: int | None = None  # None: restart every p iterations
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", _ALIASES.get(self.method, self.method))
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient-decrease constant must lie in (0, 1)")
        if self.max_backtracks < 1:
            raise ValueError("need at least one backtrack")
        if self.max_iters < 1 or self.grad_tol <= 0 or self.initial_step <= 0:
            raise ValueError("max_iters, grad_tol, initial_step must be positive")
        if self.cg_restart is not None and self.cg_restart < 1:
            raise ValueError("cg_restart period must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    value: float
    grad_norm: float
    step: float
    backtracks: int
    direction: str  # "sd" or "cg"
    wall_time: float


@dataclass
class SolveTrace:
    """Per-iteration telemetry plus the termination verdict."""

    records: list = field(default_factory=list)
    initial_value: float = math.nan
    initial_grad_norm: float = math.nan
    termination: str = "running"

    @property
    def converged(self) -> bool:
        return self.termination == "grad_tol"

    @property
    def iterations(self) -> int:
        return len(self.records)

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    def grad_norms(self) -> np.ndarray:
        return np.array([r.grad_norm for r in self.records])

    def write_jsonl(self, path) -> None:
        import json

        with open(path, "w") as fh:
            fh.write(json.dumps({"initial_value": self.initial_value,
                                 "initial_grad_norm": self.initial_grad_norm,
                                 "termination": self.termination}) + "\n")
            for rec in self.records:
                fh.write(json.dumps(asdict(rec)) + "\n")


def initialize(samples, k: int, seed: int = 0, rng=None) -> ProductPoint:
    """Random unit-row factor and covariance-matched scales.

    sigma0_i = (S_ii + delta)^{-1/2} with delta = 1e-8 tr(S)/p, so nodes
    with larger marginal variance start with smaller precision scale.
    """
    cov = _coerce_samples(samples)
    p = cov.p
    if k > p:
        raise DimensionMismatchError(f"rank bound {k} exceeds node count {p}")
    d = cov.diag()
    tr = float(np.sum(d))
    if not np.isfinite(tr) or tr <= 0:
        raise DegenerateCovarianceError("sample covariance has non-positive or non-finite trace")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(seed))
    w = rng.standard_normal((p, k))
    norms = np.linalg.norm(w, axis=1)
    while np.any(norms < 1e-8):
        bad = norms < 1e-8
        w[bad] = rng.standard_normal((int(bad.sum()), k))
        norms = np.linalg.norm(w, axis=1)
    w /= norms[:, None]
    delta = 1e-8 * tr / p
    sigma = 1.0 / np.sqrt(np.maximum(d, 0.0) + delta)
    return ProductPoint(w=w, sigma=sigma)


def spectral_init(samples, k: int, ridge_mult: float = 0.3) -> ProductPoint:
    """Warm start from the dominant eigenpairs of a ridge-inverted covariance.

    Eigendecomposes (S + tau I)^{-1} with tau = ridge_mult * tr(S)/p and
    splits the top-k factor into unit rows and row norms.  Dense O(p^3):
    meant for benchmark-scale problems, not the large-p path.  Starting
    here instead of at a random factor lands solves in markedly better
    basins of the nonconvex objective.
    """
    cov = _coerce_samples(samples)
    p = cov.p
    if k > p:
        raise DimensionMismatchError(f"rank bound {k} exceeds node count {p}")
    s = cov.dense()
    tr = float(np.trace(s))
    if not np.isfinite(tr) or tr <= 0:
        raise DegenerateCovarianceError("sample covariance has non-positive or non-finite trace")
    tau = ridge_mult * tr / p
    q = np.linalg.inv(s + tau * np.eye(p))
    ev, vec = np.linalg.eigh(q)
    a = vec[:, -k:] * np.sqrt(np.maximum(ev[-k:], 0.0))
    norms = np.linalg.norm(a, axis=1)
    floor = 1e-12 * norms.max()
    if np.any(norms <= floor):
        # rows orthogonal to the kept eigenspace: nudge onto the last column
        bad = norms <= floor
        a[bad, -1] = floor
        norms = np.linalg.norm(a, axis=1)
    return ProductPoint(w=a / norms[:, None], sigma=norms)


def line_search(value_fn, point: ProductPoint, direction: TangentPair,
                f0: float, g0: float, cfg: SolverConfig, initial_step: float | None = None):
    """Armijo backtracking along a retracted ray.

    Accepts the first step with f(R(x, a d)) <= f0 + c1 a g0.  Trial
    values of +inf (rank-deficient trial points) simply fail the test and
    shrink the step.
    """
    if not g0 < 0:
        raise ValueError(f"need a descent direction, got directional derivative {g0}")
    step = cfg.initial_step if initial_step is None else initial_step
    slope = cfg.sufficient_decrease * g0
    for _ in range(cfg.max_backtracks + 1):
        candidate = retract_product(point, direction, step)
        value = value_fn(candidate)
        if value <= f0 + step * slope:
            return step, candidate, value
        step *= cfg.contraction
    raise LineSearchFailedError(
        f"no Armijo step after {cfg.max_backtracks} backtracks (f0={f0:.6g}, g0={g0:.3g})")


def cg_direction(grad: TangentPair, prev_dir: TangentPair, prev_grad: TangentPair,
                 point: ProductPoint) -> TangentPair:
    """Polak-Ribiere+ direction; prev quantities already transported here.

    beta = max(0, <g, g - g_prev> / <g_prev, g_prev>) in the product
    metric; the combined direction is re-projected to the horizontal
    space and reset to steepest descent if it fails to be a descent
    direction.
    """
    denom = metric_product(point, prev_grad, prev_grad)
    if denom <= 0:
        return TangentPair(w=-grad.w, sigma=-grad.sigma, base=point)
    diff = TangentPair(w=grad.w - prev_grad.w, sigma=grad.sigma - prev_grad.sigma, base=point)
    beta = max(0.0, metric_product(point, grad, diff) / denom)
    d = make_tangent(point, -grad.w + beta * prev_dir.w, -grad.sigma + beta * prev_dir.sigma)
    if metric_product(point, d, grad) >= 0:
        return TangentPair(w=-grad.w, sigma=-grad.sigma, base=point)
    return d


def _coerce_samples(samples) -> CovarianceOp:
    """SampleSet, CovarianceOp, square covariance, or p x n data matrix."""
    if isinstance(samples, CovarianceOp):
        return samples
    if isinstance(samples, model_mod.SampleSet):
        return as_covariance(samples)
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatchError("expected a 2-d array")
    if arr.shape[0] == arr.shape[1] and np.allclose(arr, arr.T, atol=1e-10):
        return CovarianceOp(s=arr)
    return CovarianceOp(x=arr)


def solve(samples, cfg: ObjectiveConfig, scfg: SolverConfig | None = None,
          x0: ProductPoint | None = None, on_step=None):
    """Minimize the penalized objective; returns (point, trace).

    ``samples`` may be a SampleSet, a covariance matrix, a p x n data
    matrix (kept in factored form so no p x p array is built), or a
    CovarianceOp.  A rank-deficient failure triggers one random
    re-initialization before giving up.  ``on_step(t, point)`` fires after
    every accepted iteration.
    """
    scfg = SolverConfig() if scfg is None else scfg
    cov = _coerce_samples(samples)
    rng = np.random.Generator(np.random.Philox(scfg.seed))
    point = initialize(cov, cfg.k, rng=rng) if x0 is None else x0
    for attempt in range(2):
        try:
            return _run(point, cov, cfg, scfg, on_step)
        except RankDeficientError:
            if attempt == 1:
                raise
            point = initialize(cov, cfg.k, rng=rng)


def _run(point: ProductPoint, cov: CovarianceOp, cfg: ObjectiveConfig,
         scfg: SolverConfig, on_step):
    trace = SolveTrace()
    t_start = time.perf_counter()
    restart_period = point.p if scfg.cg_restart is None else scfg.cg_restart
    use_cg = scfg.method == "conjugate-gradient"

    evals = [0]

    def value_fn(x: ProductPoint) -> float:
        evals[0] += 1
        m = model_mod.assemble_precision(x.w, x.sigma)
        return model_mod.objective_from_model(m, cov, cfg)

    def grad_at(x: ProductPoint):
        m = model_mod.assemble_precision(x.w, x.sigma)
        value, eg_w, eg_sigma = model_mod.value_and_euclidean_grads(m, cov, cfg)
        return value, rgrad_product(x, eg_w, eg_sigma)

    f0, grad = grad_at(point)
    gnorm0 = norm_product(point, grad)
    trace.initial_value = f0
    trace.initial_grad_norm = gnorm0
    if gnorm0 == 0.0:
        trace.termination = "grad_tol"
        return point, trace

    prev_grad = prev_dir = None
    trial_step = scfg.initial_step
    since_restart = 0
    for t in range(1, scfg.max_iters + 1):
        if use_cg and prev_grad is not None and since_restart < restart_period:
            tg = transport_product(prev_grad.base, point, prev_grad)
            td = transport_product(prev_dir.base, point, prev_dir)
            direction = cg_direction(grad, td, tg, point)
            kind = "cg"
        else:
            direction = TangentPair(w=-grad.w, sigma=-grad.sigma, base=point)
            kind = "sd"
            since_restart = 0
        g0 = metric_product(point, direction, grad)

        evals_before = evals[0]
        try:
            step, new_point, f_new = line_search(value_fn, point, direction, f0, g0, scfg,
                                                 initial_step=trial_step)
        except LineSearchFailedError:
            if kind == "cg":
                # one steepest-descent rescue before giving up
                direction = TangentPair(w=-grad.w, sigma=-grad.sigma, base=point)
                kind = "sd"
                since_restart = 0
                g0 = -norm_product(point, grad) ** 2
                try:
                    step, new_point, f_new = line_search(value_fn, point, direction, f0, g0,
                                                         scfg, initial_step=scfg.initial_step)
                except LineSearchFailedError:
                    trace.termination = "line_search_failed"
                    return point, trace
            else:
                trace.termination = "line_search_failed"
                return point, trace

        backtracks = evals[0] - evals_before - 1
        prev_grad, prev_dir = grad, direction
        point, f0 = new_point, f_new
        f_new_check, grad = grad_at(point)
        gnorm = norm_product(point, grad)
        trace.records.append(IterationRecord(
            iteration=t, value=f_new, grad_norm=gnorm, step=step,
            backtracks=backtracks, direction=kind,
            wall_time=time.perf_counter() - t_start))
        if on_step is not None:
            on_step(t, point)
        trial_step = min(max(2.0 * step, _STEP_MIN), _STEP_MAX)
        since_restart += 1
        if gnorm <= scfg.grad_tol * gnorm0:
            trace.termination = "grad_tol"
            return point, trace
    trace.termination = "max_iters"
    return point, trace
