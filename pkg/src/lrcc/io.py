"""CSV and JSON artifact readers/writers.

Dialect: comma separator, ``.`` decimal point, UTF-8, header row
required for matrices.  Edge lists are 0-based.  Floats are written
with ``repr`` (shortest round-trip form) so reruns with identical
inputs produce byte-identical files.
"""

import csv
import hashlib
import json
import math

import numpy as np

from .errors import DataError, DimensionMismatchError
from .synthetic import GraphTopology, SensorLayout


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _parse_float(text: str, row: int, col_name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(
            f"non-numeric value {text!r} in column {col_name!r}, row {row}") from None


def _open_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def read_matrix_csv(path):
    """Read a numeric matrix with a mandatory header row.

    Returns (column labels, float array with one row per data line).
    Ragged rows and non-numeric cells raise DataError naming the spot.
    """
    rows = _open_rows(path)
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    p = len(header)
    out = np.empty((len(rows) - 1, p))
    for r, fields in enumerate(rows[1:], start=2):
        if len(fields) != p:
            raise DataError(f"{path}: row {r} has {len(fields)} fields, expected {p}")
        for c, text in enumerate(fields):
            out[r - 2, c] = _parse_float(text.strip(), r, header[c])
    return header, out


def write_matrix_csv(path, m, labels=None):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if labels is None:
        labels = [f"c{j}" for j in range(m.shape[1])]
    if len(labels) != m.shape[1]:
        raise DimensionMismatchError("one label per column required")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(labels)
        for row in m:
            w.writerow([_fmt(v) for v in row])


def standardize_columns(x, labels=None):
    """Center each column and scale it to unit (population) variance.

    A column whose standard deviation is ~0 cannot be scaled; the error
    names it.
    """
    x = np.asarray(x, dtype=float)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    bad = np.nonzero(std <= 1e-12 * np.maximum(1.0, np.abs(mean)))[0]
    if bad.size:
        j = int(bad[0])
        name = labels[j] if labels is not None else f"column {j}"
        raise DataError(f"cannot standardize constant column {name!r} (zero variance)")
    return (x - mean) / std


def write_vector_csv(path, v, labels=None, value_name="value"):
    v = np.asarray(v, dtype=float).ravel()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "label", value_name])
        for i, val in enumerate(v):
            lab = labels[i] if labels is not None else str(i)
            w.writerow([i, lab, _fmt(val)])


def write_edge_list(path, edges, labels=None):
    """Write (i, j, weight) triples, 0-based, with optional label columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        head = ["source", "target", "weight"]
        if labels is not None:
            head += ["source_label", "target_label"]
        w.writerow(head)
        for i, j, weight in edges:
            row = [int(i), int(j), _fmt(weight)]
            if labels is not None:
                row += [labels[int(i)], labels[int(j)]]
            w.writerow(row)


def read_edge_list(path):
    """Read 0-based (source, target, weight) triples; weight defaults to 1."""
    rows = _open_rows(path)
    edges = []
    for r, fields in enumerate(rows, start=1):
        if not fields:
            continue
        try:
            i, j = int(fields[0]), int(fields[1])
        except (ValueError, IndexError):
            if r == 1:
                continue  # header row
            raise DataError(f"{path}: row {r} is not a 0-based edge triple") from None
        weight = _parse_float(fields[2].strip(), r, "weight") if len(fields) > 2 and \
            fields[2].strip() else 1.0
        edges.append((i, j, weight))
    return edges


def topology_from_edges(edges, p, labels=None) -> GraphTopology:
    """Binary graph on p nodes from an edge list (weights ignored)."""
    adj = np.zeros((p, p))
    for i, j, _ in edges:
        if not (0 <= i < p and 0 <= j < p):
            raise DataError(f"edge ({i}, {j}) is out of range for {p} nodes")
        if i == j:
            raise DataError(f"self-loop on node {i} is not allowed")
        adj[i, j] = adj[j, i] = 1.0
    return GraphTopology(adjacency=adj, labels=labels)


def edges_above_threshold(scores, tau):
    """Upper-triangle (i, j, score) triples with score >= tau, sorted by -score."""
    scores = np.asarray(scores, dtype=float)
    iu, ju = np.triu_indices(scores.shape[0], k=1)
    vals = scores[iu, ju]
    keep = vals >= tau
    # lexsort: last key is primary -> sort by -score, then source, then target
    order = np.lexsort((ju[keep], iu[keep], -vals[keep]))
    return [(int(iu[keep][o]), int(ju[keep][o]), float(vals[keep][o])) for o in order]


def read_coordinates(path) -> SensorLayout:
    """Read planar sensor coordinates: header plus (x, y) or (label, x, y) rows."""
    rows = _open_rows(path)
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one coordinate row")
    width = len(rows[0])
    if width not in (2, 3):
        raise DataError(f"{path}: expected 2 columns (x, y) or 3 (label, x, y), got {width}")
    labels, coords = [], []
    for r, fields in enumerate(rows[1:], start=2):
        if len(fields) != width:
            raise DataError(f"{path}: row {r} has {len(fields)} fields, expected {width}")
        if width == 3:
            labels.append(fields[0].strip())
            xy = fields[1:]
        else:
            labels.append(str(r - 2))
            xy = fields
        coords.append([_parse_float(xy[0].strip(), r, "x"),
                       _parse_float(xy[1].strip(), r, "y")])
    return SensorLayout(coords=np.asarray(coords), labels=labels)


def write_roc_csv(path, curve):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr", "threshold"])
        thresholds = curve.thresholds
        for idx, (fpr, tpr) in enumerate(curve.points):
            thr = thresholds[idx] if thresholds is not None else math.nan
            w.writerow([_fmt(fpr), _fmt(tpr), _fmt(thr)])


def write_grid_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lam", "mean_auc", "n_trials", "n_failures"])
        for row in rows:
            w.writerow([_fmt(row.lam), _fmt(row.mean_auc), row.n_trials, row.n_failures])


def write_trials_csv(path, rows, base_seed: int):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lam", "trial", "seed", "auc"])
        for row in rows:
            for t, auc in enumerate(row.aucs):
                w.writerow([_fmt(row.lam), t, base_seed + t, _fmt(auc)])


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
