"""QRSE model evaluation: logit action probabilities, the maximum-entropy
kernel on a return grid, and quantities derived from the normalized model.

All returns are in %/day. Action-probability sign convention::

    p_buy  = 1 / (1 + exp((r - mu) / T))
    p_sell = 1 / (1 + exp(-(r - mu) / T))

so agents sell above their valuation ``mu`` and buy below it, and
``p_sell - p_buy = tanh((r - mu) / (2T))``. The literature also states the
log-odds with the opposite sign; that only swaps the buy/sell labels and
leaves the marginal return distribution unchanged.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .errors import GridCoverageError, ParameterError
from .summary import SummaryStats, weighted_summary

LN2 = float(np.log(2.0))

# Test hook: added to the unnormalized log kernel. Must stay 0.0 in real use;
# the selftest negative control perturbs it to prove the identity checks bite.
_KERNEL_OFFSET = 0.0

# Fraction of the grid range, on each side, that must be essentially empty.
TAIL_FRACTION = 0.025
TAIL_MASS_LIMIT = 1e-6


@dataclass(frozen=True)
class QrseParams:
    """Model parameters ``theta = (mu, T, alpha, S)`` in %/day."""

    mu: float
    temp: float
    alpha: float
    scale: float

    def __post_init__(self):
        for name in ("mu", "temp", "alpha", "scale"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.temp <= 0:
            raise ParameterError(f"temp must be > 0, got {self.temp}")
        if self.scale <= 0:
            raise ParameterError(f"scale must be > 0, got {self.scale}")

    @property
    def zeta(self) -> float:
        return self.mu - self.alpha

    @property
    def beta(self) -> float:
        return 1.0 / self.temp

    @property
    def gamma(self) -> float:
        return 1.0 / self.scale

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.temp, self.alpha, self.scale])

    @classmethod
    def from_array(cls, values) -> "QrseParams":
        mu, temp, alpha, scale = (float(v) for v in values)
        return cls(mu, temp, alpha, scale)

    def shifted(self, c: float) -> "QrseParams":
        return QrseParams(self.mu + c, self.temp, self.alpha + c, self.scale)


DEFAULT_INIT = QrseParams(mu=0.0, temp=1.0, alpha=0.0, scale=1.0)


@dataclass(frozen=True)
class ReturnGrid:
    """Equally spaced return nodes with trapezoid quadrature weights."""

    lo: float
    hi: float
    n: int
    points: np.ndarray = field(repr=False, compare=False)
    weights: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int = 801) -> "ReturnGrid":
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
            raise ParameterError(f"grid bounds must satisfy lo < hi, got ({lo}, {hi})")
        if n < 51 or n % 2 == 0:
            raise ParameterError(f"grid size must be odd and >= 51, got {n}")
        points = np.linspace(lo, hi, n)
        step = (hi - lo) / (n - 1)
        weights = np.full(n, step)
        weights[0] = weights[-1] = step / 2
        points.flags.writeable = False
        weights.flags.writeable = False
        return cls(float(lo), float(hi), int(n), points, weights)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def same_as(self, other: "ReturnGrid") -> bool:
        return self.n == other.n and np.isclose(self.lo, other.lo) and np.isclose(self.hi, other.hi)


def default_grid(params: QrseParams, n: int = 801) -> ReturnGrid:
    """A grid wide enough to hold essentially all of the model's mass.

    Tails decay like ``exp(-|r - alpha| / S)``; when ``T`` is large the body is
    close to Gaussian with variance ``2 T S``.
    """
    half = max(40.0 * params.scale, 10.0 * np.sqrt(2.0 * params.temp * params.scale))
    center = 0.5 * (params.mu + params.alpha)
    half += 0.5 * abs(params.mu - params.alpha)
    return ReturnGrid.uniform(center - half, center + half, n)


def conditional_action_prob(r, params: QrseParams):
    """Return ``(p_buy, p_sell)`` at return(s) ``r``."""
    x = (np.asarray(r, dtype=float) - params.mu) / params.temp
    return expit(-x), expit(x)


def action_difference(r, params: QrseParams):
    """``p_sell - p_buy``, i.e. ``tanh((r - mu) / (2T))``."""
    return np.tanh((np.asarray(r, dtype=float) - params.mu) / (2.0 * params.temp))


def binary_entropy(r, params: QrseParams):
    """Entropy (nats) of the buy/sell choice at return ``r``.

    Uses ``-ln p_sell = softplus(-x)`` and ``-ln p_buy = softplus(x)`` so the
    saturated regime never evaluates ``0 * log(0)``.
    """
    x = (np.asarray(r, dtype=float) - params.mu) / params.temp
    return expit(x) * np.logaddexp(0.0, -x) + expit(-x) * np.logaddexp(0.0, x)


def kernel_log_density(r, params: QrseParams):
    """Unnormalized log density of the maximum-entropy marginal."""
    r = np.asarray(r, dtype=float)
    feedback = action_difference(r, params) * (r - params.alpha) / params.scale
    return binary_entropy(r, params) - feedback + _KERNEL_OFFSET


def log_marginal_mass(grid: ReturnGrid, params: QrseParams) -> np.ndarray:
    """Log of the normalized probability mass at each grid node."""
    logw = kernel_log_density(grid.points, params) + np.log(grid.weights)
    return logw - logsumexp(logw)


@dataclass(frozen=True)
class ModelDistribution:
    """Discrete QRSE distribution on a grid: marginal and joint action masses."""

    grid: ReturnGrid
    marginal: np.ndarray
    joint_buy: np.ndarray
    joint_sell: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,marginal,joint_buy,joint_sell\n")
        for row in zip(self.grid.points, self.marginal, self.joint_buy, self.joint_sell):
            buf.write(",".join(f"{v:.12g}" for v in row) + "\n")
        return buf.getvalue()


def tail_masses(grid: ReturnGrid, mass: np.ndarray) -> tuple[float, float]:
    """Mass in the outer ``TAIL_FRACTION`` of the grid range on each side."""
    width = TAIL_FRACTION * (grid.hi - grid.lo)
    left = float(mass[grid.points <= grid.lo + width].sum())
    right = float(mass[grid.points >= grid.hi - width].sum())
    return left, right


def marginal_density(
    grid: ReturnGrid, params: QrseParams, check_coverage: bool = True
) -> ModelDistribution:
    """Normalize the kernel on ``grid`` and split it into buy/sell joint masses.

    Raises
    ------
    GridCoverageError
        If ``check_coverage`` and either tail region of the grid carries more
        than ``TAIL_MASS_LIMIT`` of the mass.
    """
    marginal = np.exp(log_marginal_mass(grid, params))
    if check_coverage:
        left, right = tail_masses(grid, marginal)
        if max(left, right) > TAIL_MASS_LIMIT:
            raise GridCoverageError(
                f"grid [{grid.lo:.4g}, {grid.hi:.4g}] too narrow for {params}: "
                f"tail masses {left:.3g} / {right:.3g}"
            )
    p_buy, p_sell = conditional_action_prob(grid.points, params)
    for arr in (marginal, p_buy, p_sell):
        arr.flags.writeable = False
    return ModelDistribution(grid, marginal, p_buy * marginal, p_sell * marginal)


def trading_frequencies(dist: ModelDistribution) -> tuple[float, float]:
    return float(dist.joint_buy.sum()), float(dist.joint_sell.sum())


def delta(dist: ModelDistribution, params: QrseParams) -> float:
    """Realized value of the feedback constraint under ``dist``."""
    r = dist.grid.points
    return float(np.sum(action_difference(r, params) * (r - params.alpha) * dist.marginal))


def zeta(params: QrseParams) -> float:
    return params.mu - params.alpha


def model_moments(dist: ModelDistribution) -> SummaryStats:
    return weighted_summary(dist.grid.points, dist.marginal)
