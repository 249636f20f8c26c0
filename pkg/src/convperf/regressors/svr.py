"""Epsilon-insensitive support vector regression with an RBF kernel.

The dual is solved by sequential minimal optimization over the
difference variables beta_i = alpha_i - alpha_i*, which live in the box
[-C, C] and sum to zero:

    maximize  -1/2 sum_ij beta_i beta_j K_ij
              - eps * sum_i |beta_i| + sum_i y_i beta_i

Working pairs come from the maximal-violation rule: each point's KKT
conditions pin the offset b to an interval, and the pair is the point
with the largest lower end against the point with the smallest upper
end.  The gap between those two ends is the convergence measure.  A
pair step maximizes the dual exactly along the feasible segment, which
is piecewise quadratic with breakpoints where either variable crosses
zero.  Kernel rows are computed lazily and cached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ModelSpec, TrainedModel, register_family

SVR = "svr"


class ConvergenceError(RuntimeError):
    """SMO ran out of iterations before the KKT gap closed."""


@dataclass(frozen=True)
class SvrParams:
    sv_x: np.ndarray
    sv_beta: np.ndarray
    intercept: float
    gamma: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.sv_beta.shape[0] == 0:
            return np.full(X.shape[0], self.intercept)
        sq = (
            (X * X).sum(axis=1)[:, None]
            + (self.sv_x * self.sv_x).sum(axis=1)[None, :]
            - 2.0 * X @ self.sv_x.T
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0)) @ self.sv_beta + self.intercept


def resolve_gamma(X: np.ndarray, gamma) -> float:
    """Turn the "scale" shorthand into a number: 1 / (d * mean column variance)."""
    if gamma == "scale":
        mv = float(X.var(axis=0).mean())
        if mv <= 0.0:
            return 1.0
        return 1.0 / (X.shape[1] * mv)
    g = float(gamma)
    if g <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return g


def _b_intervals(beta, F, eps, C):
    """Allowed-b interval [lo, hi] for every point given its beta sign."""
    tol = 1e-12 * max(1.0, C)
    at_up = beta >= C - tol
    at_lo = beta <= -C + tol
    pos = beta > tol
    neg = beta < -tol
    lo = np.where(
        pos,
        np.where(at_up, -np.inf, F - eps),
        np.where(neg, F + eps, F - eps),
    )
    hi = np.where(
        pos,
        F - eps,
        np.where(neg, np.where(at_lo, np.inf, F + eps), F + eps),
    )
    return lo, hi


def _pair_step(beta_i, beta_j, F_i, F_j, eta, eps, C):
    """Best new beta_i along the sum-preserving segment, or None."""
    s = beta_i + beta_j
    t_min = max(-C, s - C)
    t_max = min(C, s + C)
    if t_max - t_min <= 0.0:
        return None
    cuts = [t_min, t_max]
    for br in (0.0, s):
        if t_min < br < t_max:
            cuts.append(br)
    cuts = sorted(set(cuts))
    candidates = set(cuts)
    if eta > 0.0:
        for a, b in zip(cuts[:-1], cuts[1:]):
            mid = (a + b) / 2.0
            sig_i = 1.0 if mid > 0 else (-1.0 if mid < 0 else 0.0)
            rem = s - mid
            sig_j = 1.0 if rem > 0 else (-1.0 if rem < 0 else 0.0)
            t_star = beta_i + (F_i - F_j - eps * (sig_i - sig_j)) / eta
            if a <= t_star <= b:
                candidates.add(t_star)

    base = abs(beta_i) + abs(beta_j)
    best_t = None
    best_gain = 0.0
    for t in candidates:
        delta = t - beta_i
        gain = (
            delta * (F_i - F_j)
            - 0.5 * eta * delta * delta
            - eps * (abs(t) + abs(s - t) - base)
        )
        if gain > best_gain:
            best_gain = gain
            best_t = t
    return best_t


def fit_svr(
    X: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    epsilon: float = 0.1,
    gamma="scale",
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> TrainedModel:
    """Fit RBF support vector regression by SMO.

    Raises :class:`ConvergenceError` with the final KKT gap if the
    budget runs out.  Only points with nonzero beta are stored.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) and y must be (n,)")
    n = y.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 rows, got {n}")
    if C <= 0.0:
        raise ValueError(f"C must be positive, got {C}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    g = resolve_gamma(X, gamma)
    if max_iter is None:
        max_iter = max(20_000, 200 * n)

    cache: dict[int, np.ndarray] = {}

    def krow(i: int) -> np.ndarray:
        row = cache.get(i)
        if row is None:
            sq = ((X - X[i]) ** 2).sum(axis=1)
            row = np.exp(-g * sq)
            cache[i] = row
        return row

    beta = np.zeros(n)
    G = np.zeros(n)  # G_i = sum_j beta_j K_ij
    viol = np.inf
    for _ in range(max_iter):
        F = y - G
        lo, hi = _b_intervals(beta, F, epsilon, C)
        i = int(np.argmax(lo))
        j = int(np.argmin(hi))
        viol = lo[i] - hi[j]
        if viol <= tol:
            break
        row_i = krow(i)
        row_j = krow(j)
        eta = row_i[i] + row_j[j] - 2.0 * row_i[j]
        t = _pair_step(beta[i], beta[j], F[i], F[j], max(eta, 0.0), epsilon, C)
        if t is None:
            break
        delta = t - beta[i]
        beta[i] = t
        beta[j] -= delta
        G += delta * (row_i - row_j)
    else:
        raise ConvergenceError(
            f"SMO hit the iteration budget ({max_iter}) with KKT gap "
            f"{viol:.3e} > tol {tol:g}; raise max_iter or loosen tol"
        )
    if viol > tol:
        raise ConvergenceError(
            f"SMO stalled with KKT gap {viol:.3e} > tol {tol:g}"
        )

    F = y - G
    lo, hi = _b_intervals(beta, F, epsilon, C)
    b_lo = float(lo.max())
    b_hi = float(hi.min())
    if not np.isfinite(b_lo) and not np.isfinite(b_hi):
        b = 0.0
    elif not np.isfinite(b_lo):
        b = b_hi
    elif not np.isfinite(b_hi):
        b = b_lo
    else:
        b = (b_lo + b_hi) / 2.0

    keep = beta != 0.0
    spec = ModelSpec(
        family=SVR,
        hyperparameters={"C": C, "epsilon": epsilon, "gamma": g, "tol": tol},
    )
    params = SvrParams(
        sv_x=X[keep].copy(), sv_beta=beta[keep].copy(), intercept=b, gamma=g
    )
    return TrainedModel(spec=spec, params=params)


register_family(
    SVR,
    lambda p: {
        "sv_x": p.sv_x.tolist(),
        "sv_beta": p.sv_beta.tolist(),
        "intercept": p.intercept,
        "gamma": p.gamma,
    },
    lambda o: SvrParams(
        sv_x=(
            np.array(o["sv_x"], dtype=float)
            if o["sv_beta"]
            else np.zeros((0, 0))
        ),
        sv_beta=np.array(o["sv_beta"], dtype=float),
        intercept=float(o["intercept"]),
        gamma=float(o["gamma"]),
    ),
)
