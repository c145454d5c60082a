"""Command-line experiment runner.

Subcommands:
  synth     end-to-end synthetic benchmark: generate graphs, sample data,
            sweep the penalty grid, emit metrics, curves, traces, figures
  fit       fit one dataset from CSV and emit the factor, scores, edges
  eval      score a saved score matrix against ground truth (edge list or
            sensor coordinates plus a proximity kernel)
  defaults  print the full default configuration as JSON

Every flag mirrors a config key; a ``--config FILE`` JSON document is
loaded first and flags override it.  Exit codes: 0 success, 2 config
error, 3 data error, 4 solver failure.  Each run directory receives a
``manifest.json`` (command line, resolved config, seeds, versions,
input digests) sufficient to reproduce the run.
"""

import argparse
import json
import os
import platform
import sys

import numpy as np

from . import __version__, evaluation, io, optimizer, plots, synthetic
from .config import OUTPUT_ROOT_ENV, ExperimentConfig
from .errors import (
    ConfigError,
    DataError,
    DegenerateTruthError,
    DimensionMismatchError,
    LrccError,
)
from .model import ObjectiveConfig, SampleSet, assemble_precision

# graph seeds run base_seed..base_seed+trials-1; data draws are offset so
# the two streams never share a seed at benchmark trial counts
DATA_SEED_OFFSET = 1000

_INT_FIELDS = ("p", "n", "k", "trials", "base_seed", "max_iters",
               "max_backtracks", "cg_restart", "jobs")
_FLOAT_FIELDS = ("density", "kappa", "weight_min", "weight_max", "lam", "eps",
                 "tau", "grad_tol", "initial_step", "contraction",
                 "sufficient_decrease")
_BOOL_FIELDS = ("standardize", "deterministic")
_CHOICE_FIELDS = {"graph_model": synthetic.GRAPH_MODELS,
                  "score_kind": evaluation.SCORE_KINDS,
                  "init": evaluation.INIT_KINDS}
_STR_FIELDS = ("method", "output_dir")


def _parse_grid(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}") from None


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(parser):
    parser.add_argument("--config", metavar="FILE",
                        help="JSON config file; flags override its keys")
    grp = parser.add_argument_group("config keys (override the config file)")
    for name in _INT_FIELDS:
        grp.add_argument(_flag(name), type=int, default=None)
    for name in _FLOAT_FIELDS:
        grp.add_argument(_flag(name), type=float, default=None)
    for name in _BOOL_FIELDS:
        grp.add_argument(_flag(name), action=argparse.BooleanOptionalAction,
                         default=None)
    for name, choices in _CHOICE_FIELDS.items():
        grp.add_argument(_flag(name), choices=choices, default=None)
    for name in _STR_FIELDS:
        grp.add_argument(_flag(name), default=None)
    grp.add_argument("--lam-grid", type=_parse_grid, default=None,
                     metavar="L1,L2,...")


def _load_config(args) -> ExperimentConfig:
    overrides = {name: getattr(args, name, None)
                 for name in ExperimentConfig.field_names()}
    if getattr(args, "config", None):
        return ExperimentConfig.from_json_file(args.config, overrides)
    return ExperimentConfig.from_dict({}, overrides)


def _versions() -> dict:
    import matplotlib
    import scipy

    return {"python": platform.python_version(), "package": __version__,
            "numpy": np.__version__, "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__}


def _write_manifest(out_dir, argv, cfg, extra=None):
    doc = {"command": ["lrcc"] + list(argv), "config": cfg.resolved_dict(),
           "versions": _versions()}
    doc.update(extra or {})
    io.write_json(os.path.join(out_dir, "manifest.json"), doc)


def _prepare_out_dir(cfg, command, holder) -> str:
    out_dir = cfg.resolve_output_dir(command)
    os.makedirs(out_dir, exist_ok=True)
    holder["dir"] = out_dir
    return out_dir


def _solve_once(samples, cfg: ExperimentConfig, seed: int):
    ocfg = ObjectiveConfig(lam=cfg.lam, eps=cfg.eps, k=cfg.k)
    x0 = optimizer.spectral_init(samples, cfg.k) if cfg.init == "spectral" else None
    return optimizer.solve(samples, ocfg, cfg.solver_config(seed), x0=x0)


def _make_problem(cfg: ExperimentConfig):
    n = cfg.effective_n()
    density = cfg.effective_density()
    weight_range = (cfg.weight_min, cfg.weight_max)

    def make(seed: int):
        truth = synthetic.random_graph(cfg.p, cfg.graph_model, density,
                                       weight_range, seed=seed)
        theta = synthetic.precision_from_laplacian(synthetic.laplacian(truth),
                                                   cfg.kappa)
        samples = synthetic.sample_gaussian(theta, n, seed=seed + DATA_SEED_OFFSET)
        return truth, samples

    return make


def _cmd_synth(args, argv, holder) -> int:
    cfg = _load_config(args)
    out_dir = _prepare_out_dir(cfg, "synth", holder)
    make = _make_problem(cfg)
    grid = cfg.effective_lam_grid()
    best_lam, rows = evaluation.lambda_grid_search(
        make, grid, cfg.trials, cfg.k, eps=cfg.eps, scfg=cfg.solver_config(),
        kind=cfg.score_kind, base_seed=cfg.base_seed, init=cfg.init,
        jobs=cfg.effective_jobs())
    io.write_trials_csv(os.path.join(out_dir, "trials.csv"), rows, cfg.base_seed)
    io.write_grid_csv(os.path.join(out_dir, "grid.csv"), rows)

    # one extra pass at the selected penalty to capture curves and traces
    roc_dir = os.path.join(out_dir, "roc")
    trace_dir = os.path.join(out_dir, "traces")
    os.makedirs(roc_dir, exist_ok=True)
    os.makedirs(trace_dir, exist_ok=True)
    refit = ExperimentConfig.from_dict({**cfg.to_dict(), "lam": best_lam})
    curves, first_trace = [], None
    for t in range(cfg.trials):
        seed = cfg.base_seed + t
        truth, samples = make(seed)
        try:
            point, trace = _solve_once(samples, refit, seed)
        except LrccError:
            continue
        model = assemble_precision(point.w, point.sigma)
        curve = evaluation.roc(evaluation.edge_scores(model, cfg.score_kind), truth)
        io.write_roc_csv(os.path.join(roc_dir, f"trial{t:03d}.csv"), curve)
        trace.write_jsonl(os.path.join(trace_dir, f"trial{t:03d}.jsonl"))
        curves.append(curve)
        if first_trace is None:
            first_trace = trace

    best_row = next(r for r in rows if r.lam == best_lam)
    summary = {"best_lam": best_lam, "best_mean_auc": best_row.mean_auc,
               "rows": [{"lam": r.lam, "mean_auc": r.mean_auc,
                         "n_trials": r.n_trials, "n_failures": r.n_failures,
                         "aucs": r.aucs} for r in rows]}
    io.write_json(os.path.join(out_dir, "summary.json"), summary)
    plots.grid_figure(rows, best_lam, os.path.join(out_dir, "auc_vs_lambda.png"))
    if curves:
        plots.roc_figure(curves, os.path.join(out_dir, "roc.png"),
                         title=f"lam={best_lam:.4g}")
    if first_trace is not None:
        plots.convergence_figure(first_trace,
                                 os.path.join(out_dir, "convergence.png"))
    _write_manifest(out_dir, argv, cfg, {
        "seeds": list(range(cfg.base_seed, cfg.base_seed + cfg.trials)),
        "data_seed_offset": DATA_SEED_OFFSET})
    print(f"best lam {best_lam:.6g}  mean AUC {best_row.mean_auc:.4f}  -> {out_dir}")
    return 0


def _cmd_fit(args, argv, holder) -> int:
    cfg = _load_config(args)
    labels, x = io.read_matrix_csv(args.data)
    n, p = x.shape
    if cfg.k > p:
        raise ConfigError(f"k={cfg.k} exceeds the {p} data columns")
    if cfg.standardize:
        x = io.standardize_columns(x, labels)
    out_dir = _prepare_out_dir(cfg, "fit", holder)
    samples = SampleSet.from_data(x.T)
    point, trace = _solve_once(samples, cfg, cfg.base_seed)
    model = assemble_precision(point.w, point.sigma)
    scores = evaluation.edge_scores(model, cfg.score_kind)

    io.write_matrix_csv(os.path.join(out_dir, "w.csv"), point.w,
                        labels=[f"w{j}" for j in range(cfg.k)])
    io.write_vector_csv(os.path.join(out_dir, "sigma.csv"), point.sigma,
                        labels=labels, value_name="sigma")
    io.write_matrix_csv(os.path.join(out_dir, "scores.csv"), scores, labels=labels)
    edges = io.edges_above_threshold(scores, cfg.tau)
    io.write_edge_list(os.path.join(out_dir, "edges.csv"), edges, labels=labels)
    trace.write_jsonl(os.path.join(out_dir, "trace.jsonl"))
    plots.convergence_figure(trace, os.path.join(out_dir, "convergence.png"))
    _write_manifest(out_dir, argv, cfg, {
        "inputs": {args.data: io.sha256_of(args.data)},
        "n_rows": n, "n_columns": p, "standardized": cfg.standardize})
    print(f"fit {p} nodes from {n} rows; {len(edges)} edges at tau={cfg.tau}"
          f"  ({trace.termination})  -> {out_dir}")
    return 0


def _cmd_eval(args, argv, holder) -> int:
    cfg = _load_config(args)
    labels, scores = io.read_matrix_csv(args.scores)
    if scores.shape[0] != scores.shape[1]:
        raise DataError(f"score matrix must be square, got {scores.shape[0]} x "
                        f"{scores.shape[1]}")
    p = scores.shape[0]
    scores = 0.5 * (scores + scores.T)
    inputs = {args.scores: io.sha256_of(args.scores)}
    if args.truth:
        truth = io.topology_from_edges(io.read_edge_list(args.truth), p,
                                       labels=labels)
        inputs[args.truth] = io.sha256_of(args.truth)
    elif args.coords:
        layout = io.read_coordinates(args.coords)
        if layout.p != p:
            raise DimensionMismatchError(
                f"{layout.p} coordinates do not match {p} score columns")
        truth = synthetic.kernel_ground_truth(layout, gamma=args.gamma,
                                              beta=args.beta)
        inputs[args.coords] = io.sha256_of(args.coords)
    else:
        raise ConfigError("a ground-truth source is required: pass --truth "
                          "EDGELIST.csv, or --coords COORDS.csv with optional "
                          "--gamma/--beta kernel parameters")
    out_dir = _prepare_out_dir(cfg, "eval", holder)
    curve = evaluation.roc(scores, truth)
    io.write_roc_csv(os.path.join(out_dir, "roc.csv"), curve)
    io.write_json(os.path.join(out_dir, "summary.json"), {
        "auc": curve.auc, "p": p, "n_edges": truth.edge_count(),
        "n_pairs": p * (p - 1) // 2})
    plots.roc_figure(curve, os.path.join(out_dir, "roc.png"))
    _write_manifest(out_dir, argv, cfg, {"inputs": inputs,
                                         "gamma": args.gamma, "beta": args.beta})
    print(f"AUC {curve.auc:.4f} over {p} nodes  -> {out_dir}")
    return 0


def _cmd_defaults(args, argv, holder) -> int:
    cfg = ExperimentConfig()
    doc = cfg.resolved_dict() if args.resolved else cfg.to_dict()
    text = json.dumps(doc, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrcc",
        description="Sparse graph learning from a low-rank factored precision "
                    "matrix, with synthetic benchmarks and link-prediction "
                    "evaluation.",
        epilog=f"Default output root: ${OUTPUT_ROOT_ENV} (falls back to the "
               "working directory).")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("synth", help="run the synthetic benchmark sweep")
    _add_config_flags(ps)
    ps.set_defaults(func=_cmd_synth)

    pf = sub.add_parser("fit", help="fit a model to a CSV data matrix")
    pf.add_argument("data", help="CSV with a header row; rows are samples, "
                                 "columns are variables")
    _add_config_flags(pf)
    pf.set_defaults(func=_cmd_fit)

    pe = sub.add_parser("eval", help="score a saved score matrix against truth")
    pe.add_argument("scores", help="square score matrix CSV with header")
    pe.add_argument("--truth", metavar="FILE",
                    help="ground-truth edge list CSV (0-based)")
    pe.add_argument("--coords", metavar="FILE",
                    help="sensor coordinates CSV; truth built via the "
                         "proximity kernel")
    pe.add_argument("--gamma", type=float, default=5.0,
                    help="kernel bandwidth (default 5)")
    pe.add_argument("--beta", type=float, default=0.5,
                    help="kernel edge threshold (default 0.5)")
    _add_config_flags(pe)
    pe.set_defaults(func=_cmd_eval)

    pd = sub.add_parser("defaults", help="print the default config as JSON")
    pd.add_argument("--resolved", action="store_true",
                    help="fill in runtime-derived defaults")
    pd.add_argument("--output", metavar="FILE", help="write instead of printing")
    pd.set_defaults(func=_cmd_defaults)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    holder = {"dir": None}
    try:
        return args.func(args, argv, holder)
    except ConfigError as exc:
        return _emit_error(exc, 2, holder["dir"])
    except (DataError, DimensionMismatchError, DegenerateTruthError) as exc:
        return _emit_error(exc, 3, holder["dir"])
    except LrccError as exc:
        return _emit_error(exc, 4, holder["dir"])


def _emit_error(exc, code: int, out_dir) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    if out_dir is not None and os.path.isdir(out_dir):
        io.write_json(os.path.join(out_dir, "error.json"), record)
    return code


if __name__ == "__main__":
    sys.exit(main())
