"""Fitting the QRSE model to binned return samples by KL minimization."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    AlignmentError,
    DegenerateError,
    GridCoverageError,
    InsufficientDataError,
    ParameterError,
)
from .model import (
    DEFAULT_INIT,
    ModelDistribution,
    QrseParams,
    ReturnGrid,
    delta,
    log_marginal_mass,
    marginal_density,
    model_moments,
    trading_frequencies,
)
from .optimize import bfgs

log = logging.getLogger(__name__)

MIN_WINDOW_OBS = 500
EMPTY_BIN_COUNT = 0.5
# Log-reparameterized T and S are confined here; beyond it the objective is +inf.
LOG_BOUND = 15.0


class SkipWindow(InsufficientDataError):
    """Window has too few observations to be fitted."""


@dataclass(frozen=True)
class EmpiricalHist:
    grid: ReturnGrid
    mass: np.ndarray
    n_obs: int
    sample_mean: float
    sample_sd: float
    window: tuple | None = None


def window_grid(sample, n: int = 801, widen: float = 0.10) -> ReturnGrid:
    """Grid over the sample range, widened by ``widen`` of the range (half per side)."""
    x = np.asarray(sample, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    pad = 0.5 * widen * (hi - lo) if hi > lo else 1.0
    return ReturnGrid.uniform(lo - pad, hi + pad, n)


def bin_empirical(sample, grid: ReturnGrid, min_obs: int = MIN_WINDOW_OBS, window=None) -> EmpiricalHist:
    """Assign each observation to its nearest grid node and normalize."""
    x = np.asarray(sample, dtype=float).ravel()
    x = x[~np.isnan(x)]
    if x.size == 0 or x.size < min_obs:
        raise SkipWindow(f"window has {x.size} observations, need {min_obs}")
    idx = np.rint((x - grid.lo) / grid.step).astype(np.int64)
    if idx.min() < 0 or idx.max() >= grid.n:
        raise GridCoverageError(
            f"sample range [{x.min():.4g}, {x.max():.4g}] outside grid [{grid.lo:.4g}, {grid.hi:.4g}]"
        )
    counts = np.bincount(idx, minlength=grid.n).astype(float)
    mass = counts / x.size
    mass.flags.writeable = False
    return EmpiricalHist(grid, mass, int(x.size), float(x.mean()), float(x.std()), window)


def empty_bin_floor(hist: EmpiricalHist, floor: float | None = None) -> float:
    """Mass substituted for empty empirical bins inside the log.

    Defaults to half an observation, ``0.5 / n_obs``. Much smaller floors make
    every unobserved tail bin cost ~``ln(1/floor)`` nats per unit of model
    mass, which drags fitted tails inward on fine grids.
    """
    return EMPTY_BIN_COUNT / hist.n_obs if floor is None else float(floor)


def floored_log_mass(hist_mass: np.ndarray, floor: float) -> np.ndarray:
    """Log of the empirical masses with empty bins set to ``floor``, renormalized.

    Renormalizing keeps the floored histogram a distribution, so the
    divergence stays non-negative; it only shifts the objective by a constant.
    """
    filled = np.where(hist_mass > 0, hist_mass, floor)
    return np.log(filled) - np.log(filled.sum())


def kl_from_log_mass(log_model: np.ndarray, hist_mass: np.ndarray, floor: float,
                     reverse: bool = False) -> float:
    if reverse:
        occupied = hist_mass > 0
        p = hist_mass[occupied]
        return float(np.sum(p * (np.log(p) - log_model[occupied])))
    model = np.exp(log_model)
    return float(np.sum(model * (log_model - floored_log_mass(hist_mass, floor))))


def kl_divergence(model: ModelDistribution, hist: EmpiricalHist, reverse: bool = False,
                  floor: float | None = None) -> float:
    """``D[model || empirical]`` in nats (``reverse=True`` gives ``D[empirical || model]``).

    Empty empirical bins are replaced by :func:`empty_bin_floor` (and the
    histogram renormalized); model bins with zero mass contribute nothing.
    Rounding can produce values of order -1e-16; those are clipped to 0.
    """
    if not model.grid.same_as(hist.grid):
        raise AlignmentError("model and histogram are defined on different grids")
    with np.errstate(divide="ignore"):
        log_model = np.log(model.marginal)
    if reverse:
        return kl_from_log_mass(log_model, hist.mass, 0.0, reverse=True)
    p = model.marginal
    pos = p > 0
    log_emp = floored_log_mass(hist.mass, empty_bin_floor(hist, floor))
    return max(float(np.sum(p[pos] * (log_model[pos] - log_emp[pos]))), 0.0)


def soofi_id(kl: float) -> float:
    """Information distinguishability ``1 - exp(-kl)``."""
    if kl < 0 or not np.isfinite(kl):
        raise ParameterError(f"KL divergence must be finite and >= 0, got {kl}")
    return float(-np.expm1(-kl))


@dataclass(frozen=True)
class QrseFit:
    params: QrseParams
    kl: float
    soofi_id: float
    zeta: float
    delta: float
    f_buy: float
    model_mean: float
    model_sd: float
    empirical_mean: float
    empirical_sd: float
    converged: bool
    iterations: int

    def row(self) -> dict:
        out = asdict(self)
        out.pop("params")
        out.update(mu=self.params.mu, T=self.params.temp, alpha=self.params.alpha, S=self.params.scale)
        return out


def _to_z(params: QrseParams) -> np.ndarray:
    return np.array([params.mu, np.log(params.temp), params.alpha, np.log(params.scale)])


def _from_z(z) -> QrseParams:
    return QrseParams(float(z[0]), float(np.exp(z[1])), float(z[2]), float(np.exp(z[3])))


def make_objective(hist: EmpiricalHist, reverse: bool = False, floor: float | None = None):
    """KL objective over ``(mu, log T, alpha, log S)``."""
    grid, mass = hist.grid, hist.mass
    fl = empty_bin_floor(hist, floor)

    def objective(z) -> float:
        if abs(z[1]) > LOG_BOUND or abs(z[3]) > LOG_BOUND:
            return np.inf
        params = _from_z(z)
        return kl_from_log_mass(log_marginal_mass(grid, params), mass, fl, reverse)

    return objective


def describe_fit(params: QrseParams, hist: EmpiricalHist, converged: bool, iterations: int,
                 reverse: bool = False, floor: float | None = None) -> QrseFit:
    dist = marginal_density(hist.grid, params, check_coverage=False)
    kl = kl_divergence(dist, hist, reverse=reverse, floor=floor)
    moments = model_moments(dist)
    return QrseFit(
        params=params,
        kl=kl,
        soofi_id=soofi_id(kl),
        zeta=params.zeta,
        delta=delta(dist, params),
        f_buy=trading_frequencies(dist)[0],
        model_mean=moments.mean,
        model_sd=moments.stdev,
        empirical_mean=hist.sample_mean,
        empirical_sd=hist.sample_sd,
        converged=converged,
        iterations=iterations,
    )


def fit_qrse(
    hist: EmpiricalHist,
    init: QrseParams = DEFAULT_INIT,
    gtol: float = 1e-6,
    max_iter: int = 500,
    fd_step: float = 1e-5,
    reverse: bool = False,
    floor: float | None = None,
) -> QrseFit:
    """Estimate ``(mu, T, alpha, S)`` by minimizing the KL divergence with BFGS.

    ``T`` and ``S`` are optimized on the log scale. A non-converged fit is
    still returned, flagged with ``converged=False``; the returned parameters
    never score worse than ``init``.

    Raises
    ------
    DegenerateError
        If the histogram occupies a single bin.
    """
    if np.count_nonzero(hist.mass) < 2:
        raise DegenerateError("histogram has a single occupied bin")
    objective = make_objective(hist, reverse, floor)
    z0 = _to_z(init)
    res = bfgs(objective, z0, gtol=gtol, max_iter=max_iter, fd_step=fd_step)
    z, iters, converged = res.x, res.iterations, res.converged
    if not res.fun <= objective(z0):
        z, converged = z0, False
    return describe_fit(_from_z(z), hist, converged, iters, reverse, floor)
