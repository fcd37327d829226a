"""Price panel loading, log returns, outlier truncation and pooled summaries."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataValueError, InsufficientDataError, SchemaError
from .summary import SummaryStats, sample_summary

log = logging.getLogger(__name__)

DATE_FORMAT = "%Y-%m-%d"


@dataclass(frozen=True)
class LoadReport:
    rows_read: int = 0
    missing: int = 0
    unparseable: int = 0

    def as_dict(self) -> dict:
        return {"rows_read": self.rows_read, "missing": self.missing, "unparseable": self.unparseable}


@dataclass(frozen=True)
class PricePanel:
    """Closing prices (and optional market caps), shape ``(n_assets, n_dates)``.

    Missing entries are NaN.
    """

    assets: list
    dates: np.ndarray
    close: np.ndarray
    mcap: np.ndarray | None = None
    report: LoadReport = field(default_factory=LoadReport)

    def __post_init__(self):
        _check_dates(self.dates)
        if self.close.shape != (len(self.assets), len(self.dates)):
            raise SchemaError(f"close has shape {self.close.shape}, expected {(len(self.assets), len(self.dates))}")
        _check_positive(self.close, "close")
        if self.mcap is not None:
            if self.mcap.shape != self.close.shape:
                raise SchemaError("close and mcap matrices must have the same shape")
            _check_positive(self.mcap, "mcap")

    @property
    def shape(self) -> tuple[int, int]:
        return self.close.shape


def _check_dates(dates: np.ndarray) -> None:
    if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
        raise SchemaError("dates must be strictly increasing without duplicates")


def _check_positive(values: np.ndarray, name: str) -> None:
    bad = np.argwhere(~np.isnan(values) & (values <= 0))
    if bad.size:
        i, t = bad[0]
        raise DataValueError(f"non-positive {name} {values[i, t]!r} at asset {i}, date index {t}")


def _parse_dates(col: pd.Series) -> np.ndarray:
    try:
        parsed = pd.to_datetime(col, format=DATE_FORMAT)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"column 'date' is not YYYY-MM-DD: {exc}") from None
    return parsed.values.astype("datetime64[D]")


def _to_numeric(col: pd.Series) -> tuple[np.ndarray, int, int]:
    """Coerce a string column; returns values, blank count, unparseable count."""
    text = col.fillna("").astype(str).str.strip()
    blank = text == ""
    values = pd.to_numeric(text.where(~blank), errors="coerce").to_numpy(dtype=float)
    unparseable = int((np.isnan(values) & ~blank.to_numpy()).sum())
    return values, int(blank.sum()), unparseable


def _check_row_positive(values: np.ndarray, name: str) -> None:
    bad = np.flatnonzero(~np.isnan(values) & (values <= 0))
    if bad.size:
        # +2: one header line, one-based rows
        raise DataValueError(f"non-positive {name} {values[bad[0]]!r} in data row {bad[0]} (file line {bad[0] + 2})")


def load_price_panel(path, wide: bool = False) -> PricePanel:
    """Read a price CSV in long form (``date,asset,close[,mcap]``) or wide form
    (``date,<asset>,<asset>,...``).

    Blank or unparseable price cells become missing entries and are counted in
    ``panel.report``; (date, asset) pairs absent from a long-form file are
    missing as well but not counted.

    Raises
    ------
    SchemaError
        Missing ``date``/``asset``/``close`` column, malformed dates or
        duplicated (date, asset) rows.
    DataValueError
        A price or market cap that is zero or negative.
    """
    path = Path(path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    df.columns = [c.strip() for c in df.columns]
    if "date" not in df.columns:
        raise SchemaError(f"{path.name}: missing required column 'date'")
    if wide:
        return _load_wide(df, path)
    for col in ("asset", "close"):
        if col not in df.columns:
            raise SchemaError(f"{path.name}: missing required column '{col}'")
    dates = _parse_dates(df["date"])
    assets = df["asset"].str.strip()
    if (assets == "").any():
        raise SchemaError(f"{path.name}: empty value in column 'asset'")
    dup = pd.DataFrame({"d": dates, "a": assets}).duplicated()
    if dup.any():
        row = int(np.flatnonzero(dup.to_numpy())[0])
        raise SchemaError(f"{path.name}: duplicated date row for asset {assets.iloc[row]!r} at {df['date'].iloc[row]}")
    close, blank_c, bad_c = _to_numeric(df["close"])
    _check_row_positive(close, "close")
    mcap = None
    if "mcap" in df.columns:
        mcap, _, _ = _to_numeric(df["mcap"])
        _check_row_positive(mcap, "mcap")

    uniq_dates = np.unique(dates)
    uniq_assets = sorted(assets.unique())
    ti = np.searchsorted(uniq_dates, dates)
    ai = np.searchsorted(np.array(uniq_assets), assets.to_numpy())
    close_m = np.full((len(uniq_assets), uniq_dates.size), np.nan)
    close_m[ai, ti] = close
    mcap_m = None
    if mcap is not None:
        mcap_m = np.full_like(close_m, np.nan)
        mcap_m[ai, ti] = mcap
    report = LoadReport(rows_read=len(df), missing=blank_c + bad_c, unparseable=bad_c)
    log.info("loaded %s: %d rows, %d assets, %d dates", path.name, len(df), len(uniq_assets), uniq_dates.size)
    return PricePanel(uniq_assets, uniq_dates, close_m, mcap_m, report)


def _load_wide(df: pd.DataFrame, path: Path) -> PricePanel:
    dates = _parse_dates(df["date"])
    if np.unique(dates).size != dates.size:
        raise SchemaError(f"{path.name}: duplicated date row")
    order = np.argsort(dates, kind="stable")
    assets = [c for c in df.columns if c != "date"]
    if not assets:
        raise SchemaError(f"{path.name}: no asset columns")
    cols, missing, bad = [], 0, 0
    for a in assets:
        values, blank, unparseable = _to_numeric(df[a])
        _check_row_positive(values, f"close for {a}")
        cols.append(values[order])
        missing += blank + unparseable
        bad += unparseable
    report = LoadReport(rows_read=len(df), missing=missing, unparseable=bad)
    return PricePanel(assets, dates[order], np.vstack(cols), None, report)


@dataclass(frozen=True)
class TruncationRecord:
    """How a return panel was truncated.

    ``mean`` and ``sd`` describe the pooled sample before any truncation, so
    re-applying the same rule removes nothing further.
    """

    k_sd: float | None = None
    mean: float | None = None
    sd: float | None = None
    removed: int = 0
    per_asset: bool = False
    original_count: int = 0

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["retained_fraction"] = (
            1.0 if self.original_count == 0 else (self.original_count - self.removed) / self.original_count
        )
        return out


@dataclass(frozen=True)
class ReturnPanel:
    """Log returns in %/day, shape ``(n_assets, n_dates)``; NaN where missing."""

    assets: list
    dates: np.ndarray
    returns: np.ndarray
    truncation: TruncationRecord = field(default_factory=TruncationRecord)

    def pooled(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Present returns of all assets within date indices ``[start, stop)``."""
        block = self.returns[:, start:stop]
        return block[~np.isnan(block)]

    @property
    def count(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.returns)))


def compute_log_returns(panel: PricePanel) -> ReturnPanel:
    """``100 * ln(close[t] / close[t-1])``; missing if either price is missing."""
    if len(panel.dates) < 2:
        raise InsufficientDataError("need at least 2 dates to compute returns")
    with np.errstate(invalid="ignore"):
        r = 100.0 * np.diff(np.log(panel.close), axis=1)
    return ReturnPanel(list(panel.assets), panel.dates[1:].copy(), r)


def truncate_returns(panel: ReturnPanel, k_sd: float = 8.0, per_asset: bool = False) -> ReturnPanel:
    """Drop returns more than ``k_sd`` standard deviations from the mean.

    Mean and (population) standard deviation come from the pooled panel, or
    from each asset's own series with ``per_asset=True``. They are computed
    once, on the untruncated sample; when the panel was already truncated the
    recorded moments are reused, which makes the operation idempotent.
    """
    if not k_sd > 0:
        raise DataValueError(f"k_sd must be positive, got {k_sd}")
    rec = panel.truncation
    r = panel.returns
    already = rec.k_sd is not None
    if not already and panel.count < 2:
        raise InsufficientDataError("need at least 2 present returns to truncate")
    if already and rec.per_asset != per_asset:
        raise DataValueError("panel was truncated with a different pooling mode")

    if per_asset:
        if already:
            mean, sd = np.asarray(rec.mean)[:, None], np.asarray(rec.sd)[:, None]
        else:
            with np.errstate(invalid="ignore"):
                mean = np.nanmean(r, axis=1, keepdims=True)
                sd = np.nanstd(r, axis=1, keepdims=True)
    else:
        if already:
            mean, sd = rec.mean, rec.sd
        else:
            pooled = panel.pooled()
            mean, sd = float(pooled.mean()), float(pooled.std())

    with np.errstate(invalid="ignore"):
        outlier = np.abs(r - mean) > k_sd * sd
    outlier &= ~np.isnan(r)
    removed = int(outlier.sum())
    out = np.where(outlier, np.nan, r)
    if per_asset:
        mean_rec, sd_rec = tuple(np.ravel(mean).tolist()), tuple(np.ravel(sd).tolist())
    else:
        mean_rec, sd_rec = float(mean), float(sd)
    record = TruncationRecord(
        k_sd=float(k_sd),
        mean=mean_rec,
        sd=sd_rec,
        removed=rec.removed + removed,
        per_asset=per_asset,
        original_count=rec.original_count if already else panel.count,
    )
    if removed:
        log.info("truncated %d returns beyond %g sd", removed, k_sd)
    return replace(panel, returns=out, truncation=record)


def pooled_summary(panel: ReturnPanel) -> SummaryStats:
    """Pooled summary statistics over every present return (population moments)."""
    return sample_summary(panel.pooled())


def read_returns_csv(path) -> ReturnPanel:
    """Inverse of :func:`write_returns_csv` (comment lines are skipped)."""
    df = pd.read_csv(path, comment="#", dtype={"asset": str}, float_precision="round_trip")
    dates = np.unique(df["date"].to_numpy().astype("datetime64[D]"))
    assets = sorted(df["asset"].unique())
    r = np.full((len(assets), dates.size), np.nan)
    ti = np.searchsorted(dates, df["date"].to_numpy().astype("datetime64[D]"))
    ai = np.searchsorted(np.array(assets), df["asset"].to_numpy())
    r[ai, ti] = df["log_return"].to_numpy(dtype=float)
    return ReturnPanel(assets, dates, r)


def write_returns_csv(panel: ReturnPanel, fh) -> None:
    """Long-form ``date,asset,log_return``; missing returns are blank cells."""
    fh.write("date,asset,log_return\n")
    for t, d in enumerate(panel.dates):
        for i, a in enumerate(panel.assets):
            v = panel.returns[i, t]
            fh.write(f"{d},{a},{'' if np.isnan(v) else format(v, '.17g')}\n")
