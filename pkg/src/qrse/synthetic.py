"""Synthetic data: exact draws from the QRSE marginal and test series."""
from __future__ import annotations

import numpy as np

from .model import QrseParams, default_grid, log_marginal_mass


def sample_model(params: QrseParams, size: int, rng: np.random.Generator, n_fine: int = 40001) -> np.ndarray:
    """Draw returns from the continuous QRSE marginal by inverse-CDF sampling.

    The density is tabulated on a fine grid and the CDF is integrated with the
    trapezoid rule, so the draws are piecewise-linear-CDF approximations.
    """
    grid = default_grid(params, n_fine)
    dens = np.exp(log_marginal_mass(grid, params)) / grid.weights
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * grid.step)])
    cdf /= cdf[-1]
    return np.interp(rng.random(size), cdf, grid.points)


FIXTURE_PARAMS = QrseParams(mu=0.3, temp=1.05, alpha=-0.16, scale=1.69)


def synthetic_panel(n_assets: int = 30, n_dates: int = 400, params: QrseParams = FIXTURE_PARAMS,
                    seed: int = 0, start: str = "2020-01-01"):
    """A stationary price panel whose daily %-log-returns are i.i.d. model draws.

    Returns ``(dates, assets, close, mcap, index_level)``. The index is a noisy
    but strictly increasing series, so every post-warmup date is bull.
    """
    rng = np.random.default_rng(seed)
    dates = np.arange(np.datetime64(start), np.datetime64(start) + n_dates).astype("datetime64[D]")
    assets = [f"A{i:03d}" for i in range(n_assets)]
    r = sample_model(params, n_assets * (n_dates - 1), rng).reshape(n_assets, n_dates - 1)
    log_p = np.log(100.0) + np.concatenate([np.zeros((n_assets, 1)), np.cumsum(r / 100.0, axis=1)], axis=1)
    close = np.exp(log_p)
    shares = rng.uniform(1e6, 1e8, size=(n_assets, 1))
    mcap = close * shares
    steps = 0.05 + 0.5 * np.abs(rng.normal(size=n_dates - 1))
    index_level = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(steps / 100.0)]))
    return dates, assets, close, mcap, index_level


def write_synthetic_fixture(directory, **kwargs) -> dict:
    """Write ``prices.csv``, ``index.csv`` and ``config.yaml`` into ``directory``."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dates, assets, close, mcap, level = synthetic_panel(**kwargs)
    with open(directory / "prices.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date,asset,close,mcap\n")
        for t, d in enumerate(dates):
            for i, a in enumerate(assets):
                fh.write(f"{d},{a},{close[i, t]:.10g},{mcap[i, t]:.10g}\n")
    with open(directory / "index.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date,level\n")
        for d, v in zip(dates, level):
            fh.write(f"{d},{v:.10g}\n")
    (directory / "config.yaml").write_text(FIXTURE_CONFIG, encoding="utf-8")
    return {"prices": directory / "prices.csv", "index": directory / "index.csv",
            "config": directory / "config.yaml"}


FIXTURE_CONFIG = """\
input:
  prices: prices.csv
  index: index.csv
fit:
  window_days: 80
  stride: 10
  grid_n: 101      # ~2400 returns per window: coarse bins avoid empty-bin bias
tests:
  window_sizes: [60, 100]
  stride: 40
  battery:
    - {test: adf}
    - {test: kpss}
    - {test: ramsey_rothman, k: 1, n_boot: 200}
    - {test: dfk, n_symbols: 2, word_len: 2, n_surrogates: 200}
seed: 0
out_dir: out
"""
