"""L2-penalized logistic regression fitted by monotone gradient descent."""

from __future__ import annotations

import numpy as np


def _linear(Z: np.ndarray, coef: np.ndarray, intercept: float) -> np.ndarray:
    # column-by-column accumulation: the score of a row never depends on which
    # other rows share the batch, so batched and row-wise predictions agree bitwise
    out = np.full(Z.shape[0], intercept, dtype=np.float64)
    for j in range(Z.shape[1]):
        out += Z[:, j] * coef[j]
    return out


def _objective(Z, y, w, lam):
    """Mean negative log-likelihood + lam/2 ||coef||^2 and its gradient."""
    s = _linear(Z, w[1:], w[0])
    # log(1 + e^s) - y s, computed stably
    nll = np.mean(np.logaddexp(0.0, s) - y * s)
    p = 0.5 * (1.0 + np.tanh(0.5 * s))
    r = (p - y) / y.size
    grad = np.empty_like(w)
    grad[0] = r.sum()
    grad[1:] = Z.T @ r + lam * w[1:]
    return nll + 0.5 * lam * float(w[1:] @ w[1:]), grad


def fit_logistic(Z: np.ndarray, y: np.ndarray, lam: float, max_iter: int, tol: float):
    """Barzilai-Borwein steps safeguarded by an Armijo backtracking test.

    Every accepted step decreases the objective, so the returned loss trace is
    non-increasing. Stops once the gradient max-norm drops below ``tol``.
    Returns ``(weights, loss_trace, converged)``; ``weights[0]`` is the intercept.
    """
    y = y.astype(np.float64)
    w = np.zeros(Z.shape[1] + 1)
    f, g = _objective(Z, y, w, lam)
    trace = [f]
    step = 1.0
    converged = bool(np.max(np.abs(g)) < tol)
    for _ in range(max_iter):
        if converged:
            break
        gg = float(g @ g)
        while True:
            w_new = w - step * g
            f_new, g_new = _objective(Z, y, w_new, lam)
            if f_new <= f - 1e-4 * step * gg:
                break
            step *= 0.5
            if step < 1e-12:
                return w, trace, False
        s_vec = w_new - w
        d_vec = g_new - g
        sd = float(s_vec @ d_vec)
        step = float(s_vec @ s_vec) / sd if sd > 0 else step * 2.0
        step = min(max(step, 1e-8), 1e6)
        w, f, g = w_new, f_new, g_new
        trace.append(f)
        converged = bool(np.max(np.abs(g)) < tol)
    return w, trace, converged
