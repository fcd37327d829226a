"""Stationarity and time-irreversibility test battery."""
from .hvg import HvgGraph, hvg_build, hvg_degrees, hvg_edges, iid_degree_law
from .irreversibility import (
    bicovariance_difference,
    clustering_irreversibility_test,
    degree_chi_square,
    dfk_test,
    hvg_degree_test,
    ramsey_rothman_test,
    stationary_bootstrap_indices,
    symbolize,
)
from .result import TestResult, surrogate_p_value
from .stationarity import adf_p_value, adf_test, default_adf_lags, default_kpss_bandwidth, kpss_test
from .surface import TESTS, TestSurface, rolling_test_surface, run_test, write_surface_csv

__all__ = [
    "HvgGraph", "hvg_build", "hvg_degrees", "hvg_edges", "iid_degree_law",
    "bicovariance_difference", "clustering_irreversibility_test", "degree_chi_square", "dfk_test",
    "hvg_degree_test", "ramsey_rothman_test", "stationary_bootstrap_indices", "symbolize",
    "TestResult", "surrogate_p_value",
    "adf_p_value", "adf_test", "default_adf_lags", "default_kpss_bandwidth", "kpss_test",
    "TESTS", "TestSurface", "rolling_test_surface", "run_test", "write_surface_csv",
]
