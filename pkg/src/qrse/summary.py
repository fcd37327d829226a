"""Moment summaries for pooled samples and discrete distributions.

Conventions: population (biased) variance, skewness and kurtosis; kurtosis is
non-excess, so a Gaussian scores 3.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InsufficientDataError

MOMENT_CONVENTION = "population moments; kurtosis non-excess (Gaussian = 3)"


@dataclass(frozen=True)
class SummaryStats:
    min: float
    mean: float
    median: float
    stdev: float
    skew: float
    kurt: float
    max: float
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


def _standardized_moments(x: np.ndarray, w: np.ndarray | None = None):
    if w is None:
        w = np.full(x.shape, 1.0 / x.size)
    mean = float(np.sum(w * x))
    d = x - mean
    var = float(np.sum(w * d * d))
    if var <= 0.0:
        return mean, 0.0, 0.0, float("nan")
    sd = float(np.sqrt(var))
    z = d / sd  # standardize first: sd**3 can underflow for tiny spreads
    skew = float(np.sum(w * z**3))
    kurt = float(np.sum(w * z**4))
    return mean, sd, skew, kurt


def sample_summary(values) -> SummaryStats:
    """Summary statistics of a flat sample, ignoring NaNs."""
    x = np.asarray(values, dtype=float).ravel()
    x = x[~np.isnan(x)]
    if x.size < 4:
        raise InsufficientDataError(f"need at least 4 observations, got {x.size}")
    mean, sd, skew, kurt = _standardized_moments(x)
    return SummaryStats(
        min=float(x.min()),
        mean=mean,
        median=float(np.median(x)),
        stdev=sd,
        skew=skew,
        kurt=kurt,
        max=float(x.max()),
        n=int(x.size),
    )


def weighted_summary(points: np.ndarray, mass: np.ndarray) -> SummaryStats:
    """Moments of a discrete distribution putting ``mass[i]`` on ``points[i]``.

    ``min``/``max`` are the smallest and largest points carrying positive mass
    and ``median`` is the first point where the cumulative mass reaches 1/2.
    """
    mass = np.asarray(mass, dtype=float)
    points = np.asarray(points, dtype=float)
    mass = mass / mass.sum()
    mean, sd, skew, kurt = _standardized_moments(points, mass)
    support = points[mass > 0]
    cdf = np.cumsum(mass)
    median = float(points[np.searchsorted(cdf, 0.5)])
    return SummaryStats(
        min=float(support.min()),
        mean=mean,
        median=median,
        stdev=sd,
        skew=skew,
        kurt=kurt,
        max=float(support.max()),
        n=int(points.size),
    )
