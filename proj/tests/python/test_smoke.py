import numpy as np
import pytest

import sgl


def test_turlach_shapes_and_gradient():
    X, y = sgl.turlach(n=30, p=10, seed=3)
    assert X.shape == (30, 10) and y.shape == (30,)
    g = sgl.turlach_gradient(np.full(10, 0.5))
    np.testing.assert_allclose(g, [0, 1, 1, 1, 1, 0, 0, 0, 0, 0], atol=1e-15)


def test_zero_solution_at_lambda_max():
    X, y = sgl.turlach(n=40, seed=5)
    lmax = sgl.regression_lambda_max(X, y)
    out = sgl.fit_regression(X, y, lam=1.001 * lmax)
    assert not out["C_tilde"].any()
    assert out["selected"] == []
    out = sgl.fit_regression(X, y, lam=0.5 * lmax)
    assert len(out["selected"]) > 0
    assert out["gradients"].shape == (10, 40)


def test_objective_trace_monotone():
    X, y = sgl.turlach(n=40, seed=6)
    out = sgl.fit_regression(X, y, lam=0.05 * sgl.regression_lambda_max(X, y))
    trace = np.array(out["report"]["objective_trace"])
    assert out["report"]["converged"]
    assert np.all(np.diff(trace) <= 1e-12)


def test_selection_matches_nonzero_rows():
    X, y = sgl.turlach(n=40, seed=7)
    C = sgl.fit_regression(X, y, lam=0.1 * sgl.regression_lambda_max(X, y))["C_tilde"]
    assert sgl.select(C) == [j for j in range(C.shape[0]) if np.any(C[j] != 0)]
    S = sgl.segcm(C)
    np.testing.assert_allclose(S, S.T, atol=1e-12)
    vals, dirs = sgl.edr_directions(C)
    np.testing.assert_allclose(S @ dirs, dirs * vals, atol=1e-8 * np.abs(S).max())


def test_two_spheres_classification():
    X, y = sgl.two_spheres(0.5, n=40, p=6, seed=2)
    assert set(np.unique(y)) == {-1.0, 1.0}
    out = sgl.fit_classification(X, y, lambda2=0.01)
    f = sgl.decision(X, out["alpha"], X)
    assert np.mean(np.where(f > 0, 1.0, -1.0) == y) >= 0.9


def test_lasso_cardinality():
    X, y = sgl.turlach(n=100, seed=1)
    beta, _ = sgl.lasso(X, y, cardinality=5)
    assert np.count_nonzero(beta) == 5


def test_invalid_input_raises():
    X, y = sgl.turlach(n=20, seed=1)
    with pytest.raises(ValueError):
        sgl.fit_regression(X, y, lam=0.1, weights="nearest")
    with pytest.raises(ValueError):
        sgl.fit_classification(X, y, lambda2=0.1)
