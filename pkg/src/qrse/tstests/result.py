from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TestResult:
    """Outcome of one hypothesis test on one series or window."""

    __test__ = False  # keep pytest from collecting this class

    test: str
    statistic: float
    p_value: float
    config: dict = field(default_factory=dict)
    window: tuple | None = None

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


def surrogate_p_value(observed: float, surrogates: np.ndarray) -> float:
    """Add-one Monte Carlo p-value: ``(1 + #{s >= observed}) / (1 + M)``."""
    exceed = int(np.count_nonzero(np.asarray(surrogates) >= observed))
    return (1 + exceed) / (1 + len(surrogates))
