"""Epsilon-insensitive support vector regression solved in the dual by
SMO-style coordinate ascent with maximal-violating-pair working-set selection.

For sample weights alpha+/alpha- in [0, C] the dual minimizes

    1/2 (a+ - a-)' K (a+ - a-) + eps * sum(a+ + a-) - y' (a+ - a-)

subject to sum(a+ - a-) = 0. The solver tracks c = a+ - a- and u = K c; the
per-sample violation scores are (y - u) -/+ eps for the two blocks, and the
optimality gap is the spread between the most-up-movable and most-down-movable
score. Convergence means every dual variable satisfies the eps-insensitive
KKT conditions within ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, NoConvergence

DEFAULT_C = 3791.0
DEFAULT_EPSILON = 0.012


@dataclass
class SVRConfig:
    C: float = DEFAULT_C
    epsilon: float = DEFAULT_EPSILON
    gamma: float | None = None      # None: 1 / (n_features * mean feature variance)
    tol: float = 1e-3
    max_iter: int | None = None     # None: max(200_000, 200 * n)

    def __post_init__(self):
        if self.C <= 0:
            raise InvalidConfig("regularization constant C must be > 0")
        if self.epsilon < 0:
            raise InvalidConfig("error margin epsilon must be >= 0")
        if self.gamma is not None and self.gamma <= 0:
            raise InvalidConfig("kernel bandwidth gamma must be > 0")


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> np.ndarray:
    """k(a, b) = exp(-gamma * ||a - b||^2) for all row pairs."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    sq = (np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :]
          - 2.0 * x @ y.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def default_gamma(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    var = float(x.var())
    if var <= 0:
        var = 1.0
    return 1.0 / (x.shape[1] * var)


@dataclass
class SMOSolution:
    coef: np.ndarray        # dual coefficients c = a+ - a-, one per sample
    bias: float
    iterations: int
    kkt_gap: float


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, epsilon: float,
              tol: float = 1e-3, max_iter: int | None = None) -> SMOSolution:
    """Solve one scalar epsilon-SVR dual over a precomputed kernel matrix."""
    n = y.shape[0]
    if max_iter is None:
        max_iter = max(200_000, 200 * n)
    alpha_p = np.zeros(n)
    alpha_m = np.zeros(n)
    u = np.zeros(n)                   # u = K (a+ - a-)
    diag = np.diag(K).copy()

    it = 0
    gap = np.inf
    m_val = m_low = 0.0
    while it < max_iter:
        if it % 8192 == 8191:
            u = K @ (alpha_p - alpha_m)   # kill incremental-update drift
        r = y - u
        score_p = r - epsilon         # block of a+ variables
        score_m = r + epsilon         # block of a-

        up_p = np.where(alpha_p < C, score_p, -np.inf)
        up_m = np.where(alpha_m > 0, score_m, -np.inf)
        low_p = np.where(alpha_p > 0, score_p, np.inf)
        low_m = np.where(alpha_m < C, score_m, np.inf)

        i_p, i_m = int(np.argmax(up_p)), int(np.argmax(up_m))
        use_plus_i = up_p[i_p] >= up_m[i_m]
        i = i_p if use_plus_i else i_m
        m_val = up_p[i_p] if use_plus_i else up_m[i_m]
        m_low = min(low_p.min(), low_m.min())

        gap = m_val - m_low
        if gap <= tol:
            break

        # second-order partner choice: maximize the analytic objective
        # decrease b^2 / (2 eta) among movable-down candidates below m_val
        eta_row = np.maximum(diag[i] + diag - 2.0 * K[i], 1e-12)
        gain_p = np.where(low_p < m_val, (m_val - low_p) ** 2 / eta_row, -np.inf)
        gain_m = np.where(low_m < m_val, (m_val - low_m) ** 2 / eta_row, -np.inf)
        j_p, j_m = int(np.argmax(gain_p)), int(np.argmax(gain_m))
        use_plus_j = gain_p[j_p] >= gain_m[j_m]
        j = j_p if use_plus_j else j_m
        j_score = low_p[j] if use_plus_j else low_m[j]

        step = (m_val - j_score) / eta_row[j]
        # box limits: the i-side coefficient moves up, the j-side moves down
        step = min(step, (C - alpha_p[i]) if use_plus_i else alpha_m[i])
        step = min(step, alpha_p[j] if use_plus_j else (C - alpha_m[j]))

        if use_plus_i:
            alpha_p[i] += step
        else:
            alpha_m[i] -= step
        if use_plus_j:
            alpha_p[j] -= step
        else:
            alpha_m[j] += step
        u += step * (K[:, i] - K[:, j])
        it += 1

    if gap > tol:
        raise NoConvergence(
            f"SMO failed to reach KKT tolerance {tol} in {max_iter} iterations (gap {gap:.3g})")
    bias = 0.5 * (m_val + m_low) if np.isfinite(m_val) and np.isfinite(m_low) else 0.0
    return SMOSolution(coef=alpha_p - alpha_m, bias=float(bias),
                       iterations=it, kkt_gap=float(max(gap, 0.0)))


def kkt_violation(K: np.ndarray, y: np.ndarray, coef: np.ndarray,
                  C: float, epsilon: float) -> float:
    """Optimality gap of a dual coefficient vector (0 means exact KKT).

    Reconstructs the tightest feasible split a+ = max(c, 0), a- = max(-c, 0)
    and returns m - M over the movable index sets.
    """
    alpha_p = np.maximum(coef, 0.0)
    alpha_m = np.maximum(-coef, 0.0)
    r = y - K @ coef
    score_p = r - epsilon
    score_m = r + epsilon
    up = np.concatenate([np.where(alpha_p < C, score_p, -np.inf),
                         np.where(alpha_m > 0, score_m, -np.inf)])
    low = np.concatenate([np.where(alpha_p > 0, score_p, np.inf),
                          np.where(alpha_m < C, score_m, np.inf)])
    return float(up.max() - low.min())


@dataclass
class SVRFit:
    """One trained scalar SVR over standardized inputs."""

    support_x: np.ndarray
    support_coef: np.ndarray
    bias: float
    gamma: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.support_x.shape[0] == 0:
            return np.full(x.shape[0], self.bias)
        return rbf_kernel(x, self.support_x, self.gamma) @ self.support_coef + self.bias


def fit_multi_output(x: np.ndarray, y: np.ndarray, cfg: SVRConfig) -> list[SVRFit]:
    """Independent scalar SVR per output dimension over a shared kernel."""
    x = np.asarray(x, dtype=np.float64)
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    gamma = cfg.gamma if cfg.gamma is not None else default_gamma(x)
    K = rbf_kernel(x, x, gamma)
    fits = []
    for d in range(y.shape[1]):
        sol = smo_solve(K, y[:, d], cfg.C, cfg.epsilon, cfg.tol, cfg.max_iter)
        keep = np.abs(sol.coef) > 1e-12
        fits.append(SVRFit(support_x=x[keep].copy(), support_coef=sol.coef[keep].copy(),
                           bias=sol.bias, gamma=gamma))
    return fits
