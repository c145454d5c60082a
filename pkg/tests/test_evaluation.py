"""Edge scoring, ROC/AUC against a pairwise-ranking oracle, grid search."""

import numpy as np
import pytest

from lrcc import evaluation, optimizer, synthetic
from lrcc.errors import DegenerateTruthError, DimensionMismatchError, LrccError
from lrcc.model import assemble_precision
from lrcc.geometry import oblique

from util import rng


def random_truth(p, seed=0, prob=0.3):
    g = rng(seed)
    adj = np.zeros((p, p))
    iu, ju = np.triu_indices(p, k=1)
    hit = g.random(iu.size) < prob
    if not hit.any():
        hit[0] = True
    if hit.all():
        hit[-1] = False
    adj[iu[hit], ju[hit]] = 1.0
    return synthetic.GraphTopology(adjacency=adj + adj.T)


def mann_whitney_auc(scores, truth):
    """Tie-corrected pairwise ranking probability, O(P*N) enumeration."""
    iu, ju = np.triu_indices(truth.p, k=1)
    s = scores[iu, ju]
    y = truth.adjacency[iu, ju] > 0
    pos, neg = s[y], s[~y]
    greater = (pos[:, None] > neg[None, :]).sum()
    equal = (pos[:, None] == neg[None, :]).sum()
    return (greater + 0.5 * equal) / (len(pos) * len(neg))


# -- edge scores -------------------------------------------------------------

def test_identity_factor_scores_zero():
    m = assemble_precision(np.eye(5), np.ones(5))
    assert np.allclose(evaluation.edge_scores(m), 0.0)


def test_duplicate_rows_score_one():
    w = oblique.project_to_manifold(rng(0).standard_normal((6, 3)))
    w[3] = w[1]
    m = assemble_precision(w, np.ones(6))
    assert np.isclose(evaluation.edge_scores(m)[1, 3], 1.0, atol=1e-12)


def test_scores_scale_invariant():
    w = oblique.project_to_manifold(rng(1).standard_normal((7, 3)))
    sigma = rng(2).uniform(0.5, 2.0, 7)
    a = evaluation.edge_scores(assemble_precision(w, sigma))
    b = evaluation.edge_scores(assemble_precision(w, 2.0 * sigma))
    assert np.allclose(a, b, atol=1e-14)


def test_precision_scores_differ_and_follow_theta():
    w = oblique.project_to_manifold(rng(3).standard_normal((6, 2)))
    sigma = rng(4).uniform(0.5, 2.0, 6)
    m = assemble_precision(w, sigma)
    s = evaluation.edge_scores(m, kind="precision")
    theta = m.dense()
    off = ~np.eye(6, dtype=bool)
    assert np.allclose(s[off], np.abs(theta)[off], atol=1e-12)
    with pytest.raises(ValueError):
        evaluation.edge_scores(m, kind="nonsense")


# -- ROC / AUC ----------------------------------------------------------------

def test_perfect_scores_auc_one():
    truth = random_truth(8, seed=5)
    curve = evaluation.roc(truth.adjacency.astype(float), truth)
    assert curve.auc == 1.0
    assert np.allclose(curve.points[0], [0.0, 0.0])
    assert np.allclose(curve.points[-1], [1.0, 1.0])


def test_constant_scores_auc_half():
    truth = random_truth(9, seed=6)
    scores = np.full((9, 9), 0.7)
    np.fill_diagonal(scores, 0.0)
    assert np.isclose(evaluation.roc(scores, truth).auc, 0.5, atol=1e-15)


def test_degenerate_truth_rejected():
    empty = synthetic.GraphTopology(adjacency=np.zeros((4, 4)))
    with pytest.raises(DegenerateTruthError):
        evaluation.roc(np.ones((4, 4)), empty)


def test_score_shape_checked():
    truth = random_truth(6, seed=7)
    with pytest.raises(DimensionMismatchError):
        evaluation.roc(np.ones((5, 5)), truth)


@pytest.mark.parametrize("seed", range(10))
def test_auc_matches_pairwise_oracle(seed):
    g = rng(seed + 100)
    p = int(g.integers(6, 16))
    truth = random_truth(p, seed=seed + 200)
    scores = g.random((p, p))
    scores = 0.5 * (scores + scores.T)
    np.fill_diagonal(scores, 0.0)
    # quantize some values to force ties
    scores = np.round(scores, 1)
    auc = evaluation.roc(scores, truth).auc
    assert abs(auc - mann_whitney_auc(scores, truth)) < 1e-12


def test_roc_monotone_and_invariant_under_monotone_transform():
    truth = random_truth(10, seed=8)
    scores = rng(9).random((10, 10))
    scores = 0.5 * (scores + scores.T)
    np.fill_diagonal(scores, 0.0)
    curve = evaluation.roc(scores, truth)
    diffs = np.diff(curve.points, axis=0)
    assert np.all(diffs >= -1e-15)
    warped = np.exp(3.0 * scores) - 0.5
    assert np.isclose(evaluation.roc(warped, truth).auc, curve.auc, atol=1e-12)


# -- thresholding ----------------------------------------------------------

def test_threshold_extremes():
    scores = rng(10).random((6, 6))
    scores = 0.5 * (scores + scores.T)
    np.fill_diagonal(scores, 0.0)
    complete = evaluation.threshold_graph(scores, 0.0)
    assert complete.edge_count() == 15
    empty = evaluation.threshold_graph(scores, 1.0)
    assert empty.edge_count() == 0
    with pytest.raises(ValueError):
        evaluation.threshold_graph(scores, 1.5)


def test_threshold_monotone_subsets():
    scores = rng(11).random((8, 8))
    scores = 0.5 * (scores + scores.T)
    np.fill_diagonal(scores, 0.0)
    taus = np.sort(rng(12).random(6))
    masks = [evaluation.threshold_graph(scores, float(t)).edge_mask() for t in taus]
    for low, high in zip(masks, masks[1:]):
        assert np.all(low[high])  # every surviving edge was present earlier


# -- grid search ------------------------------------------------------------

def _tiny_problem(seed):
    truth = synthetic.random_graph(16, "barabasi-albert", 2 / 16, (2, 5), seed=seed)
    theta = synthetic.precision_from_laplacian(synthetic.laplacian(truth), 0.1)
    samples = synthetic.sample_gaussian(theta, 40, seed=seed + 1000)
    return truth, samples


def test_grid_single_point_returned():
    scfg = optimizer.SolverConfig(max_iters=40)
    best, rows = evaluation.lambda_grid_search(_tiny_problem, [0.02], trials=2,
                                               k=2, scfg=scfg)
    assert best == 0.02
    assert len(rows) == 1 and rows[0].n_trials == 2 and len(rows[0].aucs) == 2


def test_grid_bookkeeping_and_pairing():
    scfg = optimizer.SolverConfig(max_iters=30)
    best, rows = evaluation.lambda_grid_search(_tiny_problem, [0.5, 0.01], trials=3,
                                               k=2, scfg=scfg)
    assert [r.lam for r in rows] == [0.01, 0.5]  # sorted ascending
    for row in rows:
        assert len(row.aucs) == 3
        assert row.n_failures == 0
        assert np.isclose(row.mean_auc, np.mean(row.aucs))


def test_grid_huge_lambda_not_selected():
    # a huge penalty collapses the off-diagonals and the ranking signal
    scfg = optimizer.SolverConfig(max_iters=150)
    best, rows = evaluation.lambda_grid_search(_tiny_problem, [0.0, 1e4], trials=10,
                                               k=2, scfg=scfg)
    assert best == 0.0
    by_lam = {r.lam: r.mean_auc for r in rows}
    assert by_lam[0.0] > by_lam[1e4]


def test_grid_failures_disqualify(monkeypatch):
    calls = []

    def fake_fit(samples, truth, k, lam, eps, scfg, kind, init):
        calls.append(lam)
        if lam > 1.0:
            raise LrccError("boom")
        return 0.7

    monkeypatch.setattr(evaluation, "fit_and_score", fake_fit)
    best, rows = evaluation.lambda_grid_search(_tiny_problem, [2.0, 0.1], trials=4, k=2)
    assert best == 0.1
    failed = next(r for r in rows if r.lam == 2.0)
    assert failed.n_failures == 4
    assert failed.aucs == [None] * 4


def test_grid_all_disqualified_raises(monkeypatch):
    def always_fail(*args, **kwargs):
        raise LrccError("boom")

    monkeypatch.setattr(evaluation, "fit_and_score", always_fail)
    with pytest.raises(LrccError):
        evaluation.lambda_grid_search(_tiny_problem, [0.1, 0.2], trials=2, k=2)


def test_grid_tie_breaks_to_smaller(monkeypatch):
    monkeypatch.setattr(evaluation, "fit_and_score",
                        lambda *a, **k: 0.9)
    best, _ = evaluation.lambda_grid_search(_tiny_problem, [0.3, 0.01, 0.1],
                                            trials=2, k=2)
    assert best == 0.01


def test_grid_parallel_matches_sequential():
    scfg = optimizer.SolverConfig(max_iters=25)
    b1, r1 = evaluation.lambda_grid_search(_tiny_problem, [0.01, 0.2], trials=2,
                                           k=2, scfg=scfg, jobs=1)
    b2, r2 = evaluation.lambda_grid_search(_tiny_problem, [0.01, 0.2], trials=2,
                                           k=2, scfg=scfg, jobs=3)
    assert b1 == b2
    for a, b in zip(r1, r2):
        assert a.aucs == b.aucs


def test_grid_input_validation():
    with pytest.raises(ValueError):
        evaluation.lambda_grid_search(_tiny_problem, [], trials=2, k=2)
    with pytest.raises(ValueError):
        evaluation.lambda_grid_search(_tiny_problem, [0.1], trials=0, k=2)
