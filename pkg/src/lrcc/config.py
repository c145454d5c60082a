"""Experiment configuration: a flat, schema-checked key-value document.

One dataclass covers the synthetic benchmark, real-data fitting, and
scoring runs.  Configs load from JSON files or dicts; unknown keys are
rejected up front so typos fail before any compute, and every field can
be mirrored by a command-line flag of the same name.
"""

import dataclasses
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .evaluation import INIT_KINDS, SCORE_KINDS
from .optimizer import SolverConfig
from .synthetic import GRAPH_MODELS

OUTPUT_ROOT_ENV = "LRCC_OUTPUT_ROOT"

_GRID_LO, _GRID_HI, _GRID_POINTS = 1e-3, 1e2, 10


def default_lambda_grid() -> list:
    """Ten log-spaced penalty weights spanning [1e-3, 1e2]."""
    return [float(v) for v in np.logspace(math.log10(_GRID_LO), math.log10(_GRID_HI),
                                          _GRID_POINTS)]


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs for one run; ``None`` means "derive a default at runtime".

    Derived defaults: ``n`` -> p + 5, ``density`` -> 2/p for the
    scale-free model (one attachment per added node) and 0.1 for the
    random-pairs model, ``lam_grid`` -> 10 log-spaced points in
    [1e-3, 1e2], ``cg_restart`` -> the node count, ``output_dir`` ->
    $LRCC_OUTPUT_ROOT (or the working directory) plus the command name.
    """

    # problem size
    p: int = 150
    n: int = None
    k: int = 15
    # synthetic generator
    graph_model: str = "barabasi-albert"
    density: float = None
    kappa: float = 0.1
    weight_min: float = 2.0
    weight_max: float = 5.0
    # objective / sweep
    lam: float = 0.013
    lam_grid: list = None
    eps: float = 1e-2
    trials: int = 20
    base_seed: int = 0
    score_kind: str = "correlation"
    init: str = "spectral"
    # fit-specific
    standardize: bool = False
    tau: float = 0.5
    # solver
    method: str = "conjugate-gradient"
    max_iters: int = 2500
    grad_tol: float = 1e-6
    initial_step: float = 1.0
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 30
    cg_restart: int = None
    # execution
    jobs: int = 1
    deterministic: bool = False
    output_dir: str = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        chk = _Checker(self)
        chk.int_field("p", lo=2)
        chk.int_field("n", lo=1, optional=True)
        chk.int_field("k", lo=1)
        if self.k > self.p:
            raise ConfigError(f"k={self.k} exceeds p={self.p}")
        chk.choice("graph_model", GRAPH_MODELS)
        chk.float_field("density", lo=0.0, strict_lo=True, optional=True)
        if self.density is not None and self.graph_model == "erdos-renyi" and self.density > 1:
            raise ConfigError("density is an edge probability for erdos-renyi; need <= 1")
        chk.float_field("kappa", lo=0.0, strict_lo=True)
        chk.float_field("weight_min", lo=0.0, strict_lo=True)
        chk.float_field("weight_max", lo=0.0, strict_lo=True)
        if not self.weight_min < self.weight_max:
            raise ConfigError("need weight_min < weight_max")
        chk.float_field("lam", lo=0.0)
        if self.lam_grid is not None:
            if not isinstance(self.lam_grid, (list, tuple)) or not self.lam_grid:
                raise ConfigError("lam_grid must be a nonempty list of numbers")
            for v in self.lam_grid:
                if not isinstance(v, (int, float)) or isinstance(v, bool) or v < 0:
                    raise ConfigError("lam_grid entries must be numbers >= 0")
        chk.float_field("eps", lo=0.0, strict_lo=True)
        chk.int_field("trials", lo=1)
        chk.int_field("base_seed", lo=None)
        chk.choice("score_kind", SCORE_KINDS)
        chk.choice("init", INIT_KINDS)
        chk.bool_field("standardize")
        chk.float_field("tau", lo=0.0, hi=1.0)
        chk.bool_field("deterministic")
        chk.int_field("jobs", lo=1)
        chk.int_field("max_iters", lo=1)
        chk.float_field("grad_tol", lo=0.0)
        chk.int_field("max_backtracks", lo=1)
        chk.int_field("cg_restart", lo=1, optional=True)
        chk.float_field("initial_step", lo=0.0, strict_lo=True)
        chk.float_field("sufficient_decrease", lo=0.0, strict_lo=True)
        chk.float_field("contraction", lo=0.0, strict_lo=True)
        if not self.contraction < 1 or not self.sufficient_decrease < 1:
            raise ConfigError("contraction and sufficient_decrease must lie in (0, 1)")
        if self.output_dir is not None and not isinstance(self.output_dir, str):
            raise ConfigError("output_dir must be a string path")
        # delegate method-name validation (accepts gd/cg aliases)
        try:
            self.solver_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    # -- derived values ------------------------------------------------

    def effective_n(self) -> int:
        return self.n if self.n is not None else self.p + 5

    def effective_density(self) -> float:
        if self.density is not None:
            return float(self.density)
        return 2.0 / self.p if self.graph_model == "barabasi-albert" else 0.1

    def effective_lam_grid(self) -> list:
        if self.lam_grid is not None:
            return [float(v) for v in self.lam_grid]
        return default_lambda_grid()

    def effective_jobs(self) -> int:
        return 1 if self.deterministic else self.jobs

    def resolve_output_dir(self, command: str) -> str:
        if self.output_dir is not None:
            return self.output_dir
        root = os.environ.get(OUTPUT_ROOT_ENV, os.getcwd())
        return os.path.join(root, command)

    def solver_config(self, seed: int = None) -> SolverConfig:
        return SolverConfig(
            method=self.method,
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            initial_step=self.initial_step,
            contraction=self.contraction,
            sufficient_decrease=self.sufficient_decrease,
            max_backtracks=self.max_backtracks,
            cg_restart=self.cg_restart,
            seed=self.base_seed if seed is None else seed,
        )

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def resolved_dict(self) -> dict:
        """Config dict with every runtime default filled in, for manifests."""
        d = self.to_dict()
        d["n"] = self.effective_n()
        d["density"] = self.effective_density()
        d["lam_grid"] = self.effective_lam_grid()
        if d["cg_restart"] is None:
            d["cg_restart"] = self.p
        return d

    @classmethod
    def field_names(cls):
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def from_dict(cls, data: dict, overrides: dict = None) -> "ExperimentConfig":
        """Build from a JSON-compatible dict; unknown keys are an error."""
        if not isinstance(data, dict):
            raise ConfigError("config document must be a JSON object")
        known = set(cls.field_names())
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        merged = dict(data)
        for key, val in (overrides or {}).items():
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
            if val is not None:
                merged[key] = val
        return cls(**merged)

    @classmethod
    def from_json_file(cls, path: str, overrides: dict = None) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data, overrides)


class _Checker:
    """Tiny per-field validator producing uniform ConfigError messages."""

    def __init__(self, cfg):
        self.cfg = cfg

    def _get(self, name):
        return getattr(self.cfg, name)

    def int_field(self, name, lo, optional=False):
        v = self._get(name)
        if v is None and optional:
            return
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{name} must be an integer")
        if lo is not None and v < lo:
            raise ConfigError(f"{name} must be >= {lo}")

    def float_field(self, name, lo=None, hi=None, strict_lo=False, optional=False):
        v = self._get(name)
        if v is None and optional:
            return
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{name} must be a number")
        if not math.isfinite(v):
            raise ConfigError(f"{name} must be finite")
        if lo is not None and (v <= lo if strict_lo else v < lo):
            op = ">" if strict_lo else ">="
            raise ConfigError(f"{name} must be {op} {lo}")
        if hi is not None and v > hi:
            raise ConfigError(f"{name} must be <= {hi}")

    def bool_field(self, name):
        if not isinstance(self._get(name), bool):
            raise ConfigError(f"{name} must be true or false")

    def choice(self, name, allowed):
        v = self._get(name)
        if v not in allowed:
            raise ConfigError(f"{name} must be one of {', '.join(allowed)}")
