"""Time-irreversibility tests: Ramsey-Rothman, DFK symbolic, HVG degree law
and time-directed HVG clustering.

Every surrogate-based test draws from ``np.random.default_rng(seed)`` and
reports add-one Monte Carlo p-values, so results are a deterministic function
of ``(series, config, seed)``.
"""
from __future__ import annotations

import numpy as np
from scipy.stats import ks_2samp

from ..errors import InsufficientDataError, ParameterError
from .hvg import hvg_build, hvg_degrees, iid_degree_law
from .result import TestResult, surrogate_p_value

DEFAULT_SURROGATES = 500


def _standardize(x: np.ndarray) -> np.ndarray:
    sd = x.std(axis=-1, keepdims=True)
    sd = np.where(sd > 0, sd, 1.0)
    return (x - x.mean(axis=-1, keepdims=True)) / sd


def bicovariance_difference(x, k: int) -> np.ndarray:
    """``mean(z_t^2 z_{t-k}) - mean(z_t z_{t-k}^2)`` of the standardized series.

    Works along the last axis, so a stack of resampled series is handled in
    one call.
    """
    z = _standardize(np.asarray(x, dtype=float))
    now, lagged = z[..., k:], z[..., :-k]
    return np.mean(now * now * lagged - now * lagged * lagged, axis=-1)


def stationary_bootstrap_indices(n: int, replicates: int, mean_block: float,
                                 rng: np.random.Generator) -> np.ndarray:
    """Politis-Romano stationary bootstrap indices, shape ``(replicates, n)``.

    Blocks start at uniform positions, have geometric lengths with the given
    mean, and wrap around the end of the series.
    """
    new_block = rng.random((replicates, n)) < 1.0 / mean_block
    new_block[:, 0] = True
    starts = rng.integers(0, n, size=(replicates, n))
    pos = np.arange(n)
    last_start = np.maximum.accumulate(np.where(new_block, pos, 0), axis=1)
    origin = np.take_along_axis(starts, last_start, axis=1)
    return (origin + pos - last_start) % n


def ramsey_rothman_test(series, k: int = 1, n_boot: int = DEFAULT_SURROGATES, seed: int = 0,
                        mean_block: float | None = None) -> TestResult:
    """Symmetric-bicovariance test at lag ``k``.

    Statistic: ``B(k) = E[z_t^2 z_{t-k}] - E[z_t z_{t-k}^2]``, zero for a
    time-reversible process. The null distribution comes from a stationary
    bootstrap (mean block ``n^(1/3)``) centred on the observed value; the
    p-value counts replicates with ``|B* - B| >= |B|``.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if k < 1:
        raise ParameterError(f"lag k must be >= 1, got {k}")
    if k >= n / 4:
        raise ParameterError(f"lag k={k} must be below n/4={n / 4:g}")
    if n < 50 + k:
        raise InsufficientDataError(f"Ramsey-Rothman needs {50 + k} points, got {n}")
    block = n ** (1.0 / 3.0) if mean_block is None else float(mean_block)
    stat = float(bicovariance_difference(x, k))
    rng = np.random.default_rng(seed)
    idx = stationary_bootstrap_indices(n, n_boot, block, rng)
    boot = bicovariance_difference(x[idx], k)
    p = surrogate_p_value(abs(stat), np.abs(boot - stat))
    return TestResult("ramsey_rothman", stat, p,
                      {"k": k, "surrogates": n_boot, "seed": seed, "mean_block": block})


def symbolize(x, n_symbols: int, method: str = "quantile") -> np.ndarray:
    """Map values to ``0 .. n_symbols-1`` by equiprobable (or equal-width) bins."""
    x = np.asarray(x, dtype=float)
    if method == "quantile":
        edges = np.quantile(x, np.arange(1, n_symbols) / n_symbols)
    elif method == "width":
        edges = np.linspace(x.min(), x.max(), n_symbols + 1)[1:-1]
    else:
        raise ParameterError(f"unknown symbolization {method!r}")
    return np.searchsorted(edges, x, side="right")


def _word_codes(symbols: np.ndarray, n_symbols: int, word_len: int) -> np.ndarray:
    m = symbols.shape[-1] - word_len + 1
    codes = np.zeros(symbols.shape[:-1] + (m,), dtype=np.int64)
    for j in range(word_len):
        codes = codes * n_symbols + symbols[..., j:j + m]
    return codes


def _dfk_statistic(symbols: np.ndarray, n_symbols: int, word_len: int) -> np.ndarray:
    """Forward-vs-reversed word-count discrepancy for each row of ``symbols``."""
    symbols = np.atleast_2d(symbols)
    rows = symbols.shape[0]
    n_words = n_symbols ** word_len
    offset = np.arange(rows)[:, None] * n_words

    def counts(s):
        codes = _word_codes(s, n_symbols, word_len) + offset
        return np.bincount(codes.ravel(), minlength=rows * n_words).reshape(rows, n_words).astype(float)

    fwd = counts(symbols)
    rev = counts(symbols[:, ::-1])
    total = fwd + rev
    diff2 = (fwd - rev) ** 2
    return np.sum(np.divide(diff2, total, out=np.zeros_like(total), where=total > 0), axis=1)


def dfk_test(series, n_symbols: int, word_len: int, n_surrogates: int = DEFAULT_SURROGATES,
             seed: int = 0, method: str = "quantile") -> TestResult:
    """Symbolic (Daw-Finney-Kennel) irreversibility test.

    Word frequencies of the symbolized series are compared with those of its
    time reversal, ``sum_w (F(w) - R(w))^2 / (F(w) + R(w))``. Random shuffles
    of the symbol sequence provide the null distribution.
    """
    x = np.asarray(series, dtype=float)
    if n_symbols < 2 or word_len < 2:
        raise ParameterError("need n_symbols >= 2 and word_len >= 2")
    need = 10 * n_symbols ** word_len
    if x.size < need:
        raise InsufficientDataError(f"DFK with n={n_symbols}, L={word_len} needs {need} points, got {x.size}")
    sym = symbolize(x, n_symbols, method)
    stat = float(_dfk_statistic(sym, n_symbols, word_len)[0])
    rng = np.random.default_rng(seed)
    shuffled = rng.permuted(np.tile(sym, (n_surrogates, 1)), axis=1)
    null = _dfk_statistic(shuffled, n_symbols, word_len)
    return TestResult("dfk", stat, surrogate_p_value(stat, null),
                      {"n_symbols": n_symbols, "word_len": word_len, "surrogates": n_surrogates,
                       "seed": seed, "symbolization": method})


def degree_chi_square(degrees: np.ndarray, min_expected: float = 5.0) -> float:
    """Chi-square distance between interior-node degrees and the i.i.d. law.

    Classes ``k = 2 .. K`` keep expected counts of at least ``min_expected``;
    everything above ``K`` is pooled into one tail class.
    """
    d = np.asarray(degrees)[1:-1]
    n = d.size
    k_max = 2
    while n * iid_degree_law(k_max + 1) >= min_expected:
        k_max += 1
    ks = np.arange(2, k_max + 1)
    expected = n * iid_degree_law(ks)
    tail_expected = n * (2.0 / 3.0) ** (k_max - 1)
    counts = np.bincount(np.minimum(d, k_max + 1), minlength=k_max + 2)
    observed = counts[2:k_max + 1]
    tail = counts[k_max + 1] + counts[:2].sum()  # degrees < 2 cannot occur in the interior
    return float(np.sum((observed - expected) ** 2 / expected) + (tail - tail_expected) ** 2 / tail_expected)


def hvg_degree_test(series, n_surrogates: int = DEFAULT_SURROGATES, seed: int = 0) -> TestResult:
    """Compare the HVG degree distribution with ``(1/3)(2/3)^(k-2)``.

    The observed chi-square distance is ranked among i.i.d. shuffles of the
    series; a small p-value flags non-random structure.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 500:
        raise InsufficientDataError(f"HVG degree test needs 500 points, got {x.size}")
    stat = degree_chi_square(hvg_degrees(x))
    rng = np.random.default_rng(seed)
    null = np.array([degree_chi_square(hvg_degrees(rng.permutation(x))) for _ in range(n_surrogates)])
    return TestResult("hvg_degree", stat, surrogate_p_value(stat, null),
                      {"surrogates": n_surrogates, "seed": seed})


def clustering_irreversibility_test(series) -> TestResult:
    """KS comparison of retarded vs advanced local clustering on the HVG.

    The degree-based KS comparison is reported in the config for reference.
    No surrogates are needed: the p-value is the asymptotic KS p-value.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 500:
        raise InsufficientDataError(f"clustering test needs 500 points, got {x.size}")
    g = hvg_build(x)
    clus = ks_2samp(g.retarded_clustering, g.advanced_clustering, method="asymp")
    deg = ks_2samp(g.in_degree, g.out_degree, method="asymp")
    return TestResult("hvg_clustering", float(clus.statistic), float(clus.pvalue),
                      {"degree_ks": float(deg.statistic), "degree_p_value": float(deg.pvalue)})
