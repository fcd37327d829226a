"""End-to-end pipeline behind the ``ingest`` and ``analyze`` subcommands."""
from __future__ import annotations

import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .config import PipelineConfig
from .errors import InsufficientDataError, QrseError, SchemaError
from .ingest import (
    PricePanel,
    compute_log_returns,
    load_price_panel,
    pooled_summary,
    read_returns_csv,
    truncate_returns,
    write_returns_csv,
)
from .regimes import (
    IndexSeries,
    cap_weighted_index,
    classify_regimes,
    write_regimes_csv,
    write_spans_csv,
)
from .rolling import format_summary_table, rolling_fit, summarize_fits, write_fits_csv, write_summary_csv
from .summary import MOMENT_CONVENTION
from .tstests import rolling_test_surface, write_surface_csv

log = logging.getLogger(__name__)


class NoSuccessfulFits(QrseError):
    """Every rolling window failed or was skipped."""


def _header(cfg: PipelineConfig) -> str:
    return f"# qrse {__version__} config_hash={cfg.config_hash()}\n"


def _write_text(path: Path, cfg: PipelineConfig, writer) -> None:
    buf = io.StringIO()
    buf.write(_header(cfg))
    writer(buf)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def _write_json(path: Path, cfg: PipelineConfig, payload: dict) -> None:
    payload = {"config_hash": cfg.config_hash(), **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=False, default=str) + "\n", encoding="utf-8",
                    newline="\n")


def _out_dir(cfg: PipelineConfig) -> Path:
    out = cfg.resolve(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def read_index_csv(path) -> IndexSeries:
    df = pd.read_csv(path, comment="#", dtype={"date": str}, float_precision="round_trip")
    for col in ("date", "level"):
        if col not in df.columns:
            raise SchemaError(f"{Path(path).name}: missing required column '{col}'")
    dates = pd.to_datetime(df["date"], format="%Y-%m-%d").values.astype("datetime64[D]")
    if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
        raise SchemaError(f"{Path(path).name}: dates must be strictly increasing")
    return IndexSeries(dates, df["level"].to_numpy(dtype=float))


def _equal_weight_index(panel: PricePanel) -> IndexSeries:
    ones = np.where(np.isnan(panel.close), np.nan, 1.0)
    return cap_weighted_index(PricePanel(panel.assets, panel.dates, panel.close, ones))


def build_index(cfg: PipelineConfig, panel: PricePanel) -> tuple[IndexSeries, str]:
    source = cfg.regimes.index_source
    if source in ("auto", "file") and cfg.input.index:
        return read_index_csv(cfg.resolve(cfg.input.index)), "file"
    if source == "file":
        raise SchemaError("regimes.index_source is 'file' but input.index is not set")
    if source in ("auto", "mcap") and panel.mcap is not None:
        return cap_weighted_index(panel), "mcap"
    if source == "mcap":
        raise SchemaError("regimes.index_source is 'mcap' but the price file has no mcap column")
    return _equal_weight_index(panel), "equal"


def cmd_ingest(cfg: PipelineConfig) -> dict:
    """Load prices, compute and truncate returns, persist them with a load report."""
    out = _out_dir(cfg)
    panel = load_price_panel(cfg.resolve(cfg.input.prices), wide=cfg.input.wide)
    returns = truncate_returns(compute_log_returns(panel), cfg.ingest.k_sd, cfg.ingest.per_asset)
    index, source = build_index(cfg, panel)
    trunc = returns.truncation.as_dict()
    report = {
        **panel.report.as_dict(),
        "n_assets": len(panel.assets),
        "n_dates": len(panel.dates),
        "returns_present": returns.count,
        "truncated": returns.truncation.removed,
        "retained_fraction": trunc["retained_fraction"],
        "truncation": trunc,
        "index_source": source,
        "moment_convention": MOMENT_CONVENTION,
        "pooled_summary": pooled_summary(returns).as_dict() if returns.count >= 4 else None,
    }
    _write_text(out / "returns.csv", cfg, lambda fh: write_returns_csv(returns, fh))
    _write_text(out / "index.csv", cfg, lambda fh: _write_index(index, fh))
    _write_json(out / "load_report.json", cfg, report)
    log.info("ingest: %d returns kept (%.4f%%)", returns.count, 100 * trunc["retained_fraction"])
    return report


def _write_index(index: IndexSeries, fh) -> None:
    fh.write("date,level\n")
    for d, v in zip(index.dates, index.level):
        fh.write(f"{d},{v:.17g}\n")


@contextmanager
def worker_pool(jobs: int):
    """``map``-like callable: builtin ``map`` for one job, a process pool otherwise."""
    if jobs <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield pool.map


def _test_series(cfg: PipelineConfig, index: IndexSeries) -> np.ndarray:
    if cfg.tests.series == "index_level":
        return index.level
    return 100.0 * np.diff(np.log(index.level))


def cmd_analyze(cfg: PipelineConfig) -> dict:
    """Regimes, rolling fits, summary table and test surfaces from ingested artifacts."""
    out = _out_dir(cfg)
    returns_path, index_path = out / "returns.csv", out / "index.csv"
    if not returns_path.exists() or not index_path.exists():
        raise InsufficientDataError(f"run 'ingest' first: {returns_path} / {index_path} not found")
    returns = read_returns_csv(returns_path)
    index = read_index_csv(index_path)
    r = cfg.regimes
    regimes = classify_regimes(index, r.short_span, r.long_span, r.ema_seed)
    f = cfg.fit
    fit_kwargs = {
        "gtol": f.gtol, "max_iter": f.max_iter, "fd_step": f.fd_step,
        "reverse": f.kl_direction == "empirical", "floor": f.empty_bin_floor,
    }
    with worker_pool(cfg.jobs) as pmap:
        series = rolling_fit(returns, regimes, f.window_days, f.stride, grid_n=f.grid_n, widen=f.grid_widen,
                             min_obs=f.min_obs, chunk_size=f.chunk_size or None, map_fn=pmap, **fit_kwargs)
        surfaces = []
        if cfg.tests.enabled:
            x = _test_series(cfg, index)
            x_dates = index.dates if cfg.tests.series == "index_level" else index.dates[1:]
            sizes = [w for w in cfg.tests.window_sizes if w <= x.size]
            for entry in cfg.tests.battery:
                params = {k: v for k, v in entry.items() if k != "test"}
                if sizes:
                    surfaces.append(rolling_test_surface(x, entry["test"], sizes, cfg.tests.stride,
                                                         cfg.seed, params, map_fn=pmap))

    _write_text(out / "regimes.csv", cfg, lambda fh: write_regimes_csv(regimes, fh))
    _write_text(out / "spans.csv", cfg, lambda fh: write_spans_csv(regimes, fh))
    _write_text(out / "fits.csv", cfg, lambda fh: write_fits_csv(series, fh))
    if surfaces:
        def write_all(fh):
            fh.write("test,window_size,window_end,statistic,p_value\n")
            for s in surfaces:
                body = io.StringIO()
                write_surface_csv(s, body, x_dates)
                fh.write(body.getvalue().split("\n", 1)[1])
        _write_text(out / "surfaces.csv", cfg, write_all)

    n_ok = sum(1 for w in series.fits if w.fit.converged)
    summary = summarize_fits(series) if series.fits else None
    if summary is not None:
        _write_text(out / "summary.csv", cfg, lambda fh: write_summary_csv(summary, fh))
        _write_text(out / "summary.txt", cfg, lambda fh: fh.write(format_summary_table(summary)))
    manifest = {
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.output_settings(),
        "n_windows_fitted": len(series.fits),
        "n_converged": n_ok,
        "n_skipped": len(series.skipped),
        "skipped": [[str(d), reason] for d, reason in series.skipped],
        "regime_metadata": {"ema_seed": r.ema_seed, "tie_rule": "ties keep previous label; first tie is bull",
                            "warmup_dates": r.long_span},
        "moment_convention": MOMENT_CONVENTION,
        "significance": cfg.tests.significance,
        "files": sorted(p.name for p in out.iterdir() if p.name != "manifest.json"),
    }
    _write_json(out / "manifest.json", cfg, manifest)
    if not series.fits:
        raise NoSuccessfulFits("no window could be fitted; see manifest.json for reasons")
    return manifest
