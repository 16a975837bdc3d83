import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motifgl.baselines import glasso_estimator, pinv_estimator, run_baseline
from motifgl.generators import GraphModel, empirical_covariance, generate, sample_gmrf
from motifgl.graph import laplacian
from motifgl.solver import SolverConfig, solve


def test_pinv_examples():
    np.testing.assert_allclose(pinv_estimator(np.eye(4)), np.eye(4), atol=1e-15)
    L = laplacian(generate(GraphModel("small_world", {"n": 12, "neighbors": 4, "p_rw": 0.2}, seed=1)))
    np.testing.assert_allclose(pinv_estimator(pinv_estimator(L)), L, atol=1e-10)
    x = np.array([1.0, -2.0, 0.5, 3.0])
    np.testing.assert_allclose(pinv_estimator(np.outer(x, x)), np.outer(x, x) / np.dot(x, x) ** 2, atol=1e-14)
    assert np.array_equal(run_baseline("pinv", L, extras={"alpha": 9, "config": None}), pinv_estimator(L))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8), rank=st.integers(1, 8))
def test_pinv_involutive(seed, n, rank):
    X = np.random.default_rng(seed).standard_normal((n, min(rank, n)))
    A = X @ X.T
    assert np.abs(pinv_estimator(pinv_estimator(A)) - A).max() <= 1e-8 * max(1.0, np.abs(A).max())


def _spd(n, seed):
    X = np.random.default_rng(seed).standard_normal((n, 4 * n))
    return X @ X.T / (4 * n)


def test_glasso_limits():
    C = _spd(5, 0)
    res = glasso_estimator(C, 0.0)
    np.testing.assert_allclose(res.precision, np.linalg.inv(C), rtol=1e-10)
    # scale C so every off-diagonal is far below alpha: fully penalized
    big = glasso_estimator(C, 50.0)
    np.testing.assert_allclose(big.precision, np.diag(1 / np.diag(C)), atol=1e-8)
    with pytest.raises(ValueError):
        glasso_estimator(C, -1.0)


def test_glasso_unconverged_is_flagged():
    C = _spd(12, 3)
    res = glasso_estimator(C, 0.01, max_iters=1, tol=1e-14)
    assert res.converged is False


def _glasso_2x2_oracle(C, alpha):
    # for fixed off-diagonal t the diagonal has a closed form; scan t densely, then refine
    c11, c22, c12 = C[0, 0], C[1, 1], C[0, 1]

    def profile(t):
        D = (1 + np.sqrt(1 + 4 * c11 * c22 * t * t)) / (2 * c11 * c22)
        a, b = c22 * D, c11 * D
        return c11 * a + c22 * b + 2 * c12 * t - np.log(a * b - t * t) + 2 * alpha * np.abs(t), a, b

    lo, hi = -10.0, 10.0
    for _ in range(6):
        t = np.linspace(lo, hi, 20001)
        k = int(np.argmin(profile(t)[0]))
        w = (hi - lo) / 20000
        lo, hi = t[k] - 2 * w, t[k] + 2 * w
    t0 = t[k]
    _, a, b = profile(t0)
    return np.array([[a, t0], [t0, b]])


@pytest.mark.parametrize("alpha", [0.0, 0.05, 0.2, 0.6])
def test_glasso_2x2_grid(alpha):
    C = np.array([[1.3, 0.5], [0.5, 0.8]])
    est = glasso_estimator(C, alpha, max_iters=2000, tol=1e-12).precision
    np.testing.assert_allclose(est, _glasso_2x2_oracle(C, alpha), atol=1e-4)


def test_glasso_pd_and_symmetric():
    for seed in range(5):
        L = laplacian(generate(GraphModel("small_world", {"n": 15, "neighbors": 4, "p_rw": 0.1}, seed=seed)))
        C = empirical_covariance(sample_gmrf(L, 200, seed=seed + 50))
        res = glasso_estimator(C + 1e-3 * np.eye(15), 0.01)
        if res.converged:
            assert np.array_equal(res.precision, res.precision.T)
            assert np.linalg.eigvalsh(res.precision).min() > 0


def test_solver_backed_baselines():
    L = laplacian(generate(GraphModel("lattice", {"n": 10, "neighbors": 4})))
    C = empirical_covariance(sample_gmrf(L, 100, seed=1))
    cfg = SolverConfig(mode="unconstrained", beta=3.0, max_iters=50)
    np.testing.assert_array_equal(run_baseline("unc", C, extras={"config": cfg}), solve(C, cfg=cfg).S)
    S = run_baseline("tr_fixed", C, extras={"config": cfg})
    assert np.trace(S) == pytest.approx(10.0, abs=1e-6)
    S = run_baseline("tr_fixed", C, extras={"config": cfg, "value": 3.5})
    assert np.trace(S) == pytest.approx(3.5, abs=1e-6)
    with pytest.raises(ValueError):
        run_baseline("sgl", C)
