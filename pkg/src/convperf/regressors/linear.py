"""Linear family: ordinary least squares, ridge, and lasso.

All three fit an unpenalized intercept by centering.  OLS goes through a
QR factorization (not the normal equations, which the test oracles use
independently); ridge solves the shifted normal system in closed form;
lasso runs cyclic coordinate descent with soft thresholding to a
stationarity tolerance on coefficient change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ModelSpec, TrainedModel, register_family

OLS = "ols"
RIDGE = "ridge"
LASSO = "lasso"


class SingularSystemError(ValueError):
    """Raised when the OLS normal system is singular."""


@dataclass(frozen=True)
class LinearParams:
    coef: np.ndarray
    intercept: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef + self.intercept


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def _fit_ols(Xc: np.ndarray, yc: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(Xc)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= diag.max() * 1e-12 or diag.max() == 0.0:
        raise SingularSystemError(
            "singular least-squares system (collinear or constant features); "
            "use ridge with a small regularization instead"
        )
    return np.linalg.solve(R, Q.T @ yc)


def _fit_ridge(Xc: np.ndarray, yc: np.ndarray, lam: float) -> np.ndarray:
    d = Xc.shape[1]
    return np.linalg.solve(Xc.T @ Xc + lam * np.eye(d), Xc.T @ yc)


def _fit_lasso(
    Xc: np.ndarray,
    yc: np.ndarray,
    lam: float,
    tol: float,
    max_sweeps: int,
) -> np.ndarray:
    n, d = Xc.shape
    col_sq = np.einsum("ij,ij->j", Xc, Xc)
    beta = np.zeros(d)
    resid = yc.copy()
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            rho = Xc[:, j] @ resid + col_sq[j] * beta[j]
            # Penalty is lam * |beta|_1 on the squared-error sum, so the
            # soft threshold is lam / 2.
            new = _soft_threshold(rho, lam / 2.0) / col_sq[j]
            delta = new - beta[j]
            if delta != 0.0:
                resid -= Xc[:, j] * delta
                beta[j] = new
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            return beta
    raise RuntimeError(
        f"lasso coordinate descent did not reach tolerance {tol} "
        f"in {max_sweeps} sweeps"
    )


def fit_linear(
    X: np.ndarray,
    y: np.ndarray,
    family: str = OLS,
    lam: float = 0.0,
    tol: float = 1e-8,
    max_sweeps: int = 100_000,
) -> TrainedModel:
    """Fit one of the linear family members.

    ``lam`` is the ridge/lasso regularization weight (ignored for OLS).
    OLS requires more rows than columns and raises
    :class:`SingularSystemError` on rank-deficient inputs.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) and y must be (n,)")
    if np.isnan(X).any() or np.isnan(y).any():
        raise ValueError("NaN in training data")
    if lam < 0:
        raise ValueError(f"regularization must be >= 0, got {lam}")
    if family == OLS and X.shape[0] <= X.shape[1]:
        raise ValueError(
            f"ols needs more rows than columns, got {X.shape[0]}x{X.shape[1]}"
        )

    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean

    if family == OLS:
        beta = _fit_ols(Xc, yc)
    elif family == RIDGE:
        beta = _fit_ridge(Xc, yc, lam)
    elif family == LASSO:
        beta = _fit_lasso(Xc, yc, lam, tol, max_sweeps)
    else:
        raise ValueError(f"unknown linear family: {family!r}")

    intercept = y_mean - float(x_mean @ beta)
    spec = ModelSpec(family=family, hyperparameters={"lambda": lam})
    return TrainedModel(spec=spec, params=LinearParams(beta, intercept))


register_family(
    OLS,
    lambda p: {"coef": p.coef.tolist(), "intercept": p.intercept},
    lambda o: LinearParams(np.array(o["coef"], dtype=float), float(o["intercept"])),
)
register_family(
    RIDGE,
    lambda p: {"coef": p.coef.tolist(), "intercept": p.intercept},
    lambda o: LinearParams(np.array(o["coef"], dtype=float), float(o["intercept"])),
)
register_family(
    LASSO,
    lambda p: {"coef": p.coef.tolist(), "intercept": p.intercept},
    lambda o: LinearParams(np.array(o["coef"], dtype=float), float(o["intercept"])),
)
