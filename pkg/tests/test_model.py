"""Objective, gradients, penalty tiling, and rank-k linear algebra."""

import numpy as np
import pytest

from lrcc import model as M
from lrcc.errors import DimensionMismatchError, RankDeficientError
from lrcc.geometry import oblique

from util import random_product_point, rng


def make_model(p, k, seed=0):
    x = random_product_point(p, k, seed=seed)
    return M.assemble_precision(x.w, x.sigma)


def dense_theta(m):
    return (m.sigma[:, None] * m.w) @ (m.sigma[:, None] * m.w).T


# -- configuration and containers ---------------------------------------

def test_objective_config_validation():
    M.ObjectiveConfig(lam=0.0, eps=1e-2, k=3)
    with pytest.raises(ValueError):
        M.ObjectiveConfig(lam=-1.0, eps=1e-2, k=3)
    with pytest.raises(ValueError):
        M.ObjectiveConfig(lam=0.1, eps=0.0, k=3)
    with pytest.raises(ValueError):
        M.ObjectiveConfig(lam=0.1, eps=1e-2, k=0)


def test_sample_set_paths_agree():
    x = rng(0).standard_normal((6, 40))
    a = M.SampleSet.from_data(x)
    b = M.SampleSet.from_covariance(x @ x.T / 40, 40)
    assert np.allclose(a.s, b.s, atol=1e-14)
    assert a.p == 6 and a.n == 40


def test_covariance_op_data_backed_matches_dense():
    x = rng(1).standard_normal((8, 30))
    dense = M.CovarianceOp(s=x @ x.T / 30)
    databacked = M.CovarianceOp(x=x, n=30)
    a = rng(2).standard_normal((8, 3))
    assert np.allclose(dense.matmat(a), databacked.matmat(a), atol=1e-12)
    assert np.allclose(dense.diag(), databacked.diag(), atol=1e-12)
    assert np.isclose(dense.trace(), databacked.trace(), atol=1e-12)
    assert np.isclose(dense.quad_form(a), databacked.quad_form(a), atol=1e-10)
    assert np.allclose(databacked.dense(), dense.dense(), atol=1e-12)


def test_assemble_precision_shape_check():
    with pytest.raises(DimensionMismatchError):
        M.assemble_precision(np.ones((4, 2)), np.ones(3))


# -- precision matrix structure ------------------------------------------

def test_dense_matches_factored_form():
    m = make_model(10, 3, seed=3)
    assert np.allclose(m.dense(), dense_theta(m), atol=1e-13)


def test_diagonal_is_sigma_squared():
    # unit factor rows pin the diagonal to the squared scales
    m = make_model(12, 4, seed=4)
    assert np.allclose(np.diag(m.dense()), m.sigma**2, rtol=1e-12)


def test_conditional_correlation_formula():
    m = make_model(8, 3, seed=5)
    th = m.dense()
    for q, l in [(0, 1), (2, 7), (5, 3)]:
        expected = -th[q, l] / np.sqrt(th[q, q] * th[l, l])
        assert np.isclose(M.conditional_correlation(m, q, l), expected, atol=1e-12)
    with pytest.raises(ValueError):
        M.conditional_correlation(m, 2, 2)
    with pytest.raises(IndexError):
        M.conditional_correlation(m, 0, 99)


# -- penalty -----------------------------------------------------------

def test_log_cosh_stable_and_quadratic_near_zero():
    big = M._log_cosh(np.array([1e8, -1e8]))
    assert np.all(np.isfinite(big))
    # log cosh u -> |u| - log 2 for large |u|
    assert np.allclose(big, 1e8 - np.log(2.0), rtol=1e-12)
    small = M._log_cosh(np.array([1e-4]))
    assert np.isclose(small[0], 0.5 * 1e-8, rtol=1e-6)


def _dense_penalty(theta, eps):
    off = theta[~np.eye(theta.shape[0], dtype=bool)]
    return float(np.sum(eps * np.log(np.cosh(off / eps))))


@pytest.mark.parametrize("tile", [3, 7, 512])
def test_penalty_value_tiled_matches_dense(tile):
    m = make_model(23, 4, seed=6)
    eps = 1e-2
    expected = _dense_penalty(dense_theta(m), eps)
    assert np.isclose(M.penalty_value(m, eps, tile=tile), expected, rtol=1e-12)


def test_penalty_gradient_matches_dense_tanh():
    m = make_model(15, 3, seed=7)
    eps = 5e-2
    g = M.penalty_gradient(m, eps)
    expected = np.tanh(dense_theta(m) / eps)
    np.fill_diagonal(expected, 0.0)
    assert np.allclose(g, expected, atol=1e-13)
    assert np.allclose(np.diag(g), 0.0)


@pytest.mark.parametrize("tile", [4, 9, 512])
def test_penalty_matmat_matches_dense(tile):
    m = make_model(21, 3, seed=8)
    eps = 2e-2
    b = rng(9).standard_normal((21, 5))
    expected = M.penalty_gradient(m, eps) @ b
    assert np.allclose(M.penalty_gradient_matmat(m, eps, b, tile=tile),
                       expected, atol=1e-12)


@pytest.mark.parametrize("tile", [5, 512])
def test_fused_penalty_sweep_matches_separate_paths(tile):
    m = make_model(19, 4, seed=10)
    eps = 1e-2
    b = rng(11).standard_normal((19, 4))
    total, out = M._penalty_value_and_matmat(m, eps, b, tile=tile)
    assert np.isclose(total, M.penalty_value(m, eps), rtol=1e-12)
    assert np.allclose(out, M.penalty_gradient(m, eps) @ b, atol=1e-12)


# -- rank-k linear algebra ------------------------------------------------

def test_logdet_matches_eigenvalue_oracle():
    for seed in range(20):
        g = rng(seed)
        p = int(g.integers(4, 13))
        k = int(g.integers(2, min(p, 6) + 1))
        m = make_model(p, k, seed=seed + 100)
        ev = np.linalg.eigvalsh(dense_theta(m))[-k:]
        assert np.isclose(M.logdet_k(m), float(np.sum(np.log(ev))), atol=1e-10)


def test_logdet_rank_deficient_raises():
    # duplicate factor columns make the k x k gram singular
    w = oblique.project_to_manifold(rng(12).standard_normal((8, 2)))
    w3 = np.column_stack([w[:, 0], w[:, 1], w[:, 1]]) / np.sqrt(
        1.0 + w[:, 1, None] ** 2)
    m = M.assemble_precision(oblique.project_to_manifold(w3), np.ones(8))
    with pytest.raises(RankDeficientError):
        M.logdet_k(m)


def test_pseudo_inverse_matches_svd_and_penrose():
    for seed in range(20):
        g = rng(seed + 300)
        p = int(g.integers(4, 13))
        k = int(g.integers(2, min(p, 6) + 1))
        m = make_model(p, k, seed=seed + 400)
        theta = dense_theta(m)
        dagger = M.pseudo_inverse(m)
        assert np.allclose(dagger, np.linalg.pinv(theta), atol=1e-9)
        # the four defining conditions
        assert np.allclose(theta @ dagger @ theta, theta, atol=1e-9)
        assert np.allclose(dagger @ theta @ dagger, dagger, atol=1e-9)
        assert np.allclose((theta @ dagger).T, theta @ dagger, atol=1e-9)
        assert np.allclose((dagger @ theta).T, dagger @ theta, atol=1e-9)


def test_pseudo_inverse_factor_consistency():
    m = make_model(9, 3, seed=13)
    b = M.pseudo_inverse_factor(m)
    assert np.allclose(b @ b.T, M.pseudo_inverse(m), atol=1e-11)


# -- objective and gradients ----------------------------------------------

def objective_dense_oracle(m, s, cfg):
    theta = dense_theta(m)
    ev = np.linalg.eigvalsh(theta)[-cfg.k:]
    val = 0.5 * float(np.sum(theta * s)) - 0.5 * float(np.sum(np.log(ev)))
    return val + cfg.lam * _dense_penalty(theta, cfg.eps)


@pytest.mark.parametrize("lam", [0.0, 0.1])
def test_objective_matches_dense_oracle(lam):
    m = make_model(11, 3, seed=14)
    s = np.cov(rng(15).standard_normal((11, 60)))
    cfg = M.ObjectiveConfig(lam=lam, eps=1e-2, k=3)
    got = M.objective_value(m.w, m.sigma, M.SampleSet.from_covariance(s, 60), cfg)
    assert np.isclose(got, objective_dense_oracle(m, s, cfg), rtol=1e-12)


def test_objective_rank_deficient_is_infinite():
    w = np.ones((6, 2)) / np.sqrt(2)  # identical rows -> gram rank 1
    cfg = M.ObjectiveConfig(lam=0.0, eps=1e-2, k=2)
    s = np.eye(6)
    val = M.objective_value(w, np.ones(6), M.SampleSet.from_covariance(s, 10), cfg)
    assert np.isinf(val) and val > 0


def test_objective_invariant_under_rotation():
    from util import random_orthogonal

    m = make_model(10, 3, seed=16)
    s = np.cov(rng(17).standard_normal((10, 50)))
    cfg = M.ObjectiveConfig(lam=0.1, eps=1e-2, k=3)
    samples = M.SampleSet.from_covariance(s, 50)
    v1 = M.objective_value(m.w, m.sigma, samples, cfg)
    v2 = M.objective_value(m.w @ random_orthogonal(3, seed=18), m.sigma, samples, cfg)
    assert np.isclose(v1, v2, rtol=1e-12)


def test_grad_theta_symmetric_and_lam_zero_form():
    m = make_model(9, 3, seed=19)
    s = np.cov(rng(20).standard_normal((9, 50)))
    samples = M.SampleSet.from_covariance(s, 50)
    g = M.euclidean_grad_theta(m, samples, M.ObjectiveConfig(lam=0.0, eps=1e-2, k=3))
    assert np.allclose(g, g.T, atol=1e-12)
    assert np.allclose(g, 0.5 * (s - M.pseudo_inverse(m)), atol=1e-11)


def _ambient_fd_grads(m, samples, cfg, h=1e-6):
    """Central differences of the objective in raw (W, sigma) coordinates."""
    gw = np.zeros_like(m.w)
    for i in range(m.p):
        for j in range(m.k):
            wp, wm = m.w.copy(), m.w.copy()
            wp[i, j] += h
            wm[i, j] -= h
            gw[i, j] = (M.objective_value(wp, m.sigma, samples, cfg)
                        - M.objective_value(wm, m.sigma, samples, cfg)) / (2 * h)
    gs = np.zeros_like(m.sigma)
    for i in range(m.p):
        sp, sm = m.sigma.copy(), m.sigma.copy()
        sp[i] += h
        sm[i] -= h
        gs[i] = (M.objective_value(m.w, sp, samples, cfg)
                 - M.objective_value(m.w, sm, samples, cfg)) / (2 * h)
    return gw, gs


@pytest.mark.parametrize("lam", [0.0, 0.1])
def test_euclidean_grads_match_finite_differences(lam):
    m = make_model(7, 3, seed=21)
    s = np.cov(rng(22).standard_normal((7, 40)))
    samples = M.SampleSet.from_covariance(s, 40)
    cfg = M.ObjectiveConfig(lam=lam, eps=1e-2, k=3)
    cov = M.as_covariance(samples)
    _, eg_w, eg_sigma = M.value_and_euclidean_grads(m, cov, cfg)
    fd_w, fd_sigma = _ambient_fd_grads(m, samples, cfg)
    assert np.allclose(eg_w, fd_w, rtol=1e-5, atol=1e-7)
    assert np.allclose(eg_sigma, fd_sigma, rtol=1e-5, atol=1e-7)


def test_fused_path_matches_chain_rule():
    m = make_model(14, 4, seed=23)
    s = np.cov(rng(24).standard_normal((14, 70)))
    samples = M.SampleSet.from_covariance(s, 70)
    cfg = M.ObjectiveConfig(lam=0.05, eps=1e-2, k=4)
    cov = M.as_covariance(samples)
    val, eg_w, eg_sigma = M.value_and_euclidean_grads(m, cov, cfg)
    g_theta = M.euclidean_grad_theta(m, samples, cfg)
    cw, cs = M.chain_rule_grads(m.w, m.sigma, g_theta)
    assert np.isclose(val, M.objective_from_model(m, cov, cfg), rtol=1e-12)
    assert np.allclose(eg_w, cw, atol=1e-12)
    assert np.allclose(eg_sigma, cs, atol=1e-12)


def test_value_and_grads_data_backed_matches_dense_covariance():
    x = rng(25).standard_normal((10, 45))
    m = make_model(10, 3, seed=26)
    cfg = M.ObjectiveConfig(lam=0.02, eps=1e-2, k=3)
    v1, gw1, gs1 = M.value_and_euclidean_grads(m, M.CovarianceOp(x=x, n=45), cfg)
    v2, gw2, gs2 = M.value_and_euclidean_grads(
        m, M.CovarianceOp(s=x @ x.T / 45), cfg)
    assert np.isclose(v1, v2, rtol=1e-12)
    assert np.allclose(gw1, gw2, atol=1e-12)
    assert np.allclose(gs1, gs2, atol=1e-12)
