"""Quantal Response Statistical Equilibrium fitting for cross-sectional return distributions."""

__version__ = "0.1.0"

from .errors import QrseError  # noqa: E402
from .fit import EmpiricalHist, QrseFit, bin_empirical, fit_qrse, kl_divergence, soofi_id  # noqa: E402
from .model import (  # noqa: E402
    DEFAULT_INIT,
    ModelDistribution,
    QrseParams,
    ReturnGrid,
    marginal_density,
)

__all__ = [
    "__version__", "QrseError", "EmpiricalHist", "QrseFit", "bin_empirical", "fit_qrse",
    "kl_divergence", "soofi_id", "DEFAULT_INIT", "ModelDistribution", "QrseParams", "ReturnGrid",
    "marginal_density",
]
