"""Augmented Dickey-Fuller and KPSS tests.

ADF p-values use MacKinnon's (1994) approximate asymptotic distribution for the
constant-only regression (one I(1) series). KPSS p-values are interpolated in
the Kwiatkowski et al. (1992) critical-value table and clipped to [0.01, 0.10].
"""
from __future__ import annotations

import numpy as np
from scipy.stats import norm

from ..errors import DegenerateError, InsufficientDataError
from .result import TestResult

# MacKinnon (1994), tau statistic, regression with constant, N = 1.
_TAU_MAX, _TAU_MIN, _TAU_STAR = 2.74, -18.83, -1.61
_TAU_SMALLP = np.array([2.1659, 1.4412, 3.8269e-2])
_TAU_LARGEP = np.array([1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2])

# Kwiatkowski et al. (1992), Table 1: upper-tail critical values.
_KPSS_PVALS = np.array([0.10, 0.05, 0.025, 0.01])
_KPSS_CRIT = {
    "ct": np.array([0.119, 0.146, 0.176, 0.216]),
    "c": np.array([0.347, 0.463, 0.574, 0.739]),
}


def adf_p_value(stat: float) -> float:
    if stat > _TAU_MAX:
        return 1.0
    if stat < _TAU_MIN:
        return 0.0
    coef = _TAU_SMALLP if stat <= _TAU_STAR else _TAU_LARGEP
    return float(norm.cdf(np.polyval(coef[::-1], stat)))


def default_adf_lags(n: int) -> int:
    return int(np.floor(12.0 * (n / 100.0) ** 0.25))


def _ols(y: np.ndarray, X: np.ndarray):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return coef, resid


def _adf_design(x: np.ndarray, lags: int, start: int):
    """Rows ``t = start .. n-1`` of the ADF regression with ``lags`` lagged differences."""
    dx = np.diff(x)
    # dx[t-1] = x[t] - x[t-1]
    y = dx[start - 1:]
    cols = [np.ones_like(y), x[start - 1:-1]]
    for i in range(1, lags + 1):
        cols.append(dx[start - 1 - i:dx.size - i])
    return y, np.column_stack(cols)


def adf_test(series, max_lags: int | None = None) -> TestResult:
    """ADF unit-root test with a constant; lag order chosen by AIC.

    Statistic is the t-ratio of the lagged level. Null: unit root.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    max_lags = default_adf_lags(n) if max_lags is None else int(max_lags)
    if n < 25 + max_lags:
        raise InsufficientDataError(f"ADF needs {25 + max_lags} points, got {n}")
    if np.ptp(x) == 0:
        raise DegenerateError("ADF on a constant series")

    start = max_lags + 1
    best_aic, best_k = np.inf, 0
    for k in range(max_lags + 1):
        y, X = _adf_design(x, k, start)
        _, resid = _ols(y, X)
        rss = float(resid @ resid)
        aic = y.size * np.log(rss / y.size) + 2 * X.shape[1]
        if aic < best_aic:
            best_aic, best_k = aic, k

    y, X = _adf_design(x, best_k, best_k + 1)
    coef, resid = _ols(y, X)
    dof = y.size - X.shape[1]
    sigma2 = float(resid @ resid) / dof
    if sigma2 <= 0:
        raise DegenerateError("ADF regression has zero residual variance")
    cov = sigma2 * np.linalg.inv(X.T @ X)
    stat = float(coef[1] / np.sqrt(cov[1, 1]))
    return TestResult(
        "adf", stat, adf_p_value(stat),
        {"lags": best_k, "max_lags": max_lags, "nobs": int(y.size), "regression": "c", "autolag": "aic"},
    )


def default_kpss_bandwidth(n: int) -> int:
    return int(np.floor(4.0 * (n / 100.0) ** 0.25))


def kpss_test(series, bandwidth: int | None = None, regression: str = "ct") -> TestResult:
    """KPSS test; null: (trend-)stationarity. Bartlett-window long-run variance."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 25:
        raise InsufficientDataError(f"KPSS needs 25 points, got {n}")
    if np.ptp(x) == 0:
        raise DegenerateError("KPSS on a constant series")
    if regression not in _KPSS_CRIT:
        raise ValueError(f"regression must be 'c' or 'ct', got {regression!r}")
    bandwidth = default_kpss_bandwidth(n) if bandwidth is None else int(bandwidth)

    if regression == "ct":
        X = np.column_stack([np.ones(n), np.arange(1, n + 1, dtype=float)])
        _, e = _ols(x, X)
    else:
        e = x - x.mean()
    s2 = float(e @ e) / n
    for lag in range(1, bandwidth + 1):
        s2 += 2.0 * (1.0 - lag / (bandwidth + 1.0)) * float(e[lag:] @ e[:-lag]) / n
    if s2 <= 0:
        raise DegenerateError("KPSS long-run variance is not positive")
    partial = np.cumsum(e)
    stat = float(partial @ partial) / (n * n * s2)
    crit = _KPSS_CRIT[regression]
    p = float(np.interp(stat, crit, _KPSS_PVALS))
    return TestResult("kpss", stat, p, {"bandwidth": bandwidth, "regression": regression, "p_clipped_to": [0.01, 0.10]})
