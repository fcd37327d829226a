"""Quasi-Newton (BFGS) minimization with finite-difference gradients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    converged: bool
    message: str


def central_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * step)
    return g


def bfgs(
    fun: Callable[[np.ndarray], float],
    x0,
    gtol: float = 1e-6,
    max_iter: int = 500,
    fd_step: float = 1e-5,
    armijo: float = 1e-4,
    max_backtracks: int = 50,
) -> OptimizeResult:
    """Minimize ``fun`` with BFGS inverse-Hessian updates.

    Backtracking line search enforces the sufficient-decrease (Armijo)
    condition; curvature pairs with ``y.s <= 0`` are skipped so the inverse
    Hessian stays positive definite. Convergence is declared when the
    infinity norm of the gradient drops below ``gtol``.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    f = fun(x)
    if not np.isfinite(f):
        return OptimizeResult(x, f, np.full(n, np.nan), 0, False, "non-finite objective at start")
    g = central_gradient(fun, x, fd_step)
    H = np.eye(n)
    fresh = True
    for it in range(max_iter):
        if np.max(np.abs(g)) < gtol:
            return OptimizeResult(x, f, g, it, True, "gradient below tolerance")
        p = -H @ g
        slope = float(g @ p)
        if slope >= 0:
            H = np.eye(n)
            p, slope = -g, -float(g @ g)
        t = 1.0
        for _ in range(max_backtracks):
            x_new = x + t * p
            f_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f + armijo * t * slope:
                break
            t *= 0.5
        else:
            if fresh:
                return OptimizeResult(x, f, g, it, False, "line search failed")
            H = np.eye(n)
            fresh = True
            continue
        g_new = central_gradient(fun, x_new, fd_step)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if fresh:
                H = np.eye(n) * sy / float(y @ y)
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
            fresh = False
        x, f, g = x_new, f_new, g_new
    converged = bool(np.max(np.abs(g)) < gtol)
    return OptimizeResult(x, f, g, max_iter, converged, "iteration limit reached")
