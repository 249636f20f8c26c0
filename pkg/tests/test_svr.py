import json

import numpy as np
import pytest

from convperf.metrics import mse
from convperf.regressors import (
    ConvergenceError,
    fit_linear,
    fit_svr,
    model_from_json,
    model_to_json,
    resolve_gamma,
)


def recover_betas(X, model):
    """Expand stored support-vector weights back to one beta per row."""
    p = model.params
    beta = np.zeros(X.shape[0])
    k = 0
    for i in range(X.shape[0]):
        if k < p.sv_beta.shape[0] and np.array_equal(X[i], p.sv_x[k]):
            beta[i] = p.sv_beta[k]
            k += 1
    assert k == p.sv_beta.shape[0]
    return beta


def kkt_gap(X, y, model, C, eps):
    """Independent restatement of the dual optimality conditions.

    Each beta sign pins the offset to an interval; at optimality the
    largest lower end cannot exceed the smallest upper end by more than
    the solver tolerance, and the stored intercept sits in between.
    """
    beta = recover_betas(X, model)
    f = model.predict_prepared(X)
    F = y - (f - model.params.intercept)
    slack = 1e-9 * max(1.0, C)
    lo = np.empty_like(F)
    hi = np.empty_like(F)
    for i, b in enumerate(beta):
        if b >= C - slack:
            lo[i], hi[i] = -np.inf, F[i] - eps
        elif b > slack:
            lo[i], hi[i] = F[i] - eps, F[i] - eps
        elif b <= -C + slack:
            lo[i], hi[i] = F[i] + eps, np.inf
        elif b < -slack:
            lo[i], hi[i] = F[i] + eps, F[i] + eps
        else:
            lo[i], hi[i] = F[i] - eps, F[i] + eps
    assert np.abs(beta).max() <= C + slack
    assert abs(beta.sum()) < 1e-8 * max(1.0, C)
    return float(lo.max() - hi.min()), float(lo.max()), float(hi.min())


def sine_data():
    x = np.linspace(0.0, 2.0 * np.pi, 30, endpoint=False)
    return x[:, None], np.sin(x)


def test_constant_target_empty_support():
    X = np.arange(10.0)[:, None]
    y = np.full(10, 3.5)
    model = fit_svr(X, y, C=1.0, epsilon=0.1)
    assert model.params.sv_beta.shape[0] == 0
    assert abs(model.params.intercept - 3.5) < 1e-12
    assert np.allclose(model.predict_prepared([[100.0]]), [3.5])


def test_kkt_conditions_sine():
    X, y = sine_data()
    C, eps, tol = 10.0, 0.05, 1e-3
    model = fit_svr(X, y, C=C, epsilon=eps, gamma=1.0, tol=tol)
    gap, lo_max, hi_min = kkt_gap(X, y, model, C, eps)
    assert gap <= tol + 1e-6
    assert lo_max - tol - 1e-6 <= model.params.intercept <= hi_min + tol + 1e-6


def test_kkt_conditions_two_features():
    rng = np.random.default_rng(300)
    X = rng.normal(size=(40, 2))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2
    C, eps, tol = 5.0, 0.1, 1e-3
    model = fit_svr(X, y, C=C, epsilon=eps, tol=tol)
    gap, lo_max, hi_min = kkt_gap(X, y, model, C, eps)
    assert gap <= tol + 1e-6
    assert lo_max - tol - 1e-6 <= model.params.intercept <= hi_min + tol + 1e-6


def test_inside_tube_points_have_zero_beta():
    X, y = sine_data()
    eps, tol = 0.05, 1e-3
    model = fit_svr(X, y, C=10.0, epsilon=eps, gamma=1.0, tol=tol)
    beta = recover_betas(X, model)
    resid = np.abs(y - model.predict_prepared(X))
    inside = resid < eps - tol
    assert inside.any()
    # smo can leave sub-machine-epsilon dust on cleared coefficients
    assert np.all(np.abs(beta[inside]) < 1e-10)


def test_free_support_vectors_sit_on_tube():
    X, y = sine_data()
    C, eps, tol = 10.0, 0.05, 1e-3
    model = fit_svr(X, y, C=C, epsilon=eps, gamma=1.0, tol=tol)
    beta = recover_betas(X, model)
    resid = np.abs(y - model.predict_prepared(X))
    free = (np.abs(beta) > 1e-8) & (np.abs(beta) < C - 1e-8)
    assert free.any()
    assert np.abs(resid[free] - eps).max() <= tol + 1e-6


def test_beats_linear_fit_on_sine():
    X, y = sine_data()
    svr = fit_svr(X, y, C=10.0, epsilon=0.05, gamma=1.0)
    lin = fit_linear(X, y)
    assert mse(svr.predict_prepared(X), y) < mse(lin.predict_prepared(X), y) / 10.0


def test_resolve_gamma():
    X = np.array([[0.0, 0.0], [2.0, 4.0]])
    # column variances 1 and 4, mean 2.5, d=2
    assert abs(resolve_gamma(X, "scale") - 1.0 / 5.0) < 1e-12
    assert resolve_gamma(np.ones((3, 2)), "scale") == 1.0
    assert resolve_gamma(X, 0.5) == 0.5
    with pytest.raises(ValueError, match="gamma"):
        resolve_gamma(X, -1.0)
    with pytest.raises(ValueError, match="gamma"):
        resolve_gamma(X, 0.0)


def test_iteration_budget_error():
    X, y = sine_data()
    with pytest.raises(ConvergenceError, match="iteration budget"):
        fit_svr(X, y, C=10.0, epsilon=0.05, gamma=1.0, max_iter=1)


def test_deterministic():
    X, y = sine_data()
    a = fit_svr(X, y, C=10.0, epsilon=0.05, gamma=1.0)
    b = fit_svr(X, y, C=10.0, epsilon=0.05, gamma=1.0)
    assert a.params.intercept == b.params.intercept
    assert np.array_equal(a.params.sv_beta, b.params.sv_beta)


def test_validation_errors():
    X = np.ones((4, 2))
    y = np.arange(4.0)
    with pytest.raises(ValueError, match="C must be positive"):
        fit_svr(X, y, C=0.0)
    with pytest.raises(ValueError, match="epsilon"):
        fit_svr(X, y, epsilon=-0.1)
    with pytest.raises(ValueError, match="at least 2 rows"):
        fit_svr(np.ones((1, 2)), np.ones(1))
    with pytest.raises(ValueError, match="\\(n, d\\)"):
        fit_svr(np.ones(4), y)


def test_serialization_round_trip():
    X, y = sine_data()
    model = fit_svr(X, y, C=10.0, epsilon=0.05, gamma=1.0)
    back = model_from_json(json.loads(json.dumps(model_to_json(model))))
    assert back.params.gamma == 1.0
    grid = np.linspace(-1.0, 7.0, 25)[:, None]
    assert np.allclose(
        back.predict_prepared(grid), model.predict_prepared(grid), atol=1e-12
    )


def test_serialization_round_trip_empty_support():
    X = np.arange(6.0)[:, None]
    model = fit_svr(X, np.zeros(6), C=1.0, epsilon=0.1)
    back = model_from_json(json.loads(json.dumps(model_to_json(model))))
    assert back.params.sv_x.shape == (0, 0)
    assert np.allclose(back.predict_prepared([[5.0], [9.0]]), [0.0, 0.0])
