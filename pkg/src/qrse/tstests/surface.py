"""Rolling-window p-value surfaces for any test in the battery."""
from __future__ import annotations

import inspect
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..errors import QrseError
from .irreversibility import clustering_irreversibility_test, dfk_test, hvg_degree_test, ramsey_rothman_test
from .result import TestResult
from .stationarity import adf_test, kpss_test

TESTS = {
    "adf": adf_test,
    "kpss": kpss_test,
    "ramsey_rothman": ramsey_rothman_test,
    "dfk": dfk_test,
    "hvg_degree": hvg_degree_test,
    "hvg_clustering": clustering_irreversibility_test,
}


def run_test(name: str, series, seed: int = 0, **params) -> TestResult:
    """Run test ``name``; ``seed`` is forwarded only to tests that draw surrogates."""
    try:
        fn = TESTS[name]
    except KeyError:
        raise QrseError(f"unknown test {name!r}; choose from {sorted(TESTS)}") from None
    if "seed" in inspect.signature(fn).parameters:
        params["seed"] = seed
    return fn(series, **params)


@dataclass(frozen=True)
class TestSurface:
    __test__ = False

    test: str
    window_sizes: list
    window_ends: np.ndarray          # index of the last observation in each column
    cells: list                      # cells[i][j]: TestResult or None when infeasible

    def p_values(self) -> np.ndarray:
        return np.array([[np.nan if c is None else c.p_value for c in row] for row in self.cells])

    def statistics(self) -> np.ndarray:
        return np.array([[np.nan if c is None else c.statistic for c in row] for row in self.cells])


def _cell(name, series, params, seed, w, e):
    start = e - w + 1
    if start < 0:
        return None
    try:
        res = run_test(name, series[start:e + 1], seed=seed, **params)
    except QrseError:
        return None
    return TestResult(res.test, res.statistic, res.p_value, res.config, (start, e))


def rolling_test_surface(series, test: str, window_sizes, stride: int = 1, seed: int = 0,
                         params: dict | None = None, map_fn=map) -> TestSurface:
    """Run ``test`` over every window size and window end on a common stride lattice.

    Window ends run from ``min(window_sizes) - 1`` to the last index in steps of
    ``stride``. Cells whose window does not fit, or whose test raises a
    package error (too little data, degenerate input), are ``None``. Every
    cell uses the same ``seed``. ``map_fn`` may be an executor's ``map``.
    """
    x = np.asarray(series, dtype=float)
    sizes = sorted(int(w) for w in window_sizes)
    if not sizes or sizes[-1] > x.size:
        raise QrseError(f"largest window {sizes[-1] if sizes else None} exceeds series length {x.size}")
    if stride < 1:
        raise QrseError("stride must be >= 1")
    ends = np.arange(sizes[0] - 1, x.size, stride)
    jobs = [(w, int(e)) for w in sizes for e in ends]
    fn = partial(_cell, test, x, dict(params or {}), seed)
    flat = list(map_fn(fn, [j[0] for j in jobs], [j[1] for j in jobs]))
    cells = [flat[i * len(ends):(i + 1) * len(ends)] for i in range(len(sizes))]
    return TestSurface(test, sizes, ends, cells)


def write_surface_csv(surface: TestSurface, fh, dates=None) -> None:
    """``test,window_size,window_end,statistic,p_value``; infeasible cells are left blank."""
    fh.write("test,window_size,window_end,statistic,p_value\n")
    for w, row in zip(surface.window_sizes, surface.cells):
        for e, cell in zip(surface.window_ends, row):
            end = dates[e] if dates is not None else e
            if cell is None:
                fh.write(f"{surface.test},{w},{end},,\n")
            else:
                fh.write(f"{surface.test},{w},{end},{cell.statistic:.12g},{cell.p_value:.12g}\n")
