"""Rolling-window QRSE estimation and regime-conditional summaries."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fit import MIN_WINDOW_OBS, QrseFit, SkipWindow, bin_empirical, fit_qrse, window_grid
from .ingest import ReturnPanel
from .model import DEFAULT_INIT
from .regimes import WARMUP, RegimeSeries

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("ID", "mu", "T", "alpha", "S", "r_bar", "zeta", "delta")
FIT_CSV_COLUMNS = ("window_end", "regime", "converged", "ID", "mu", "T", "alpha", "S", "r_bar",
                   "sigma_r", "zeta", "delta", "f_buy", "kl", "iterations")


@dataclass(frozen=True)
class WindowFit:
    window_start: object
    window_end: object
    fit: QrseFit
    regime: str

    def values(self) -> dict:
        f = self.fit
        return {
            "ID": f.soofi_id, "mu": f.params.mu, "T": f.params.temp, "alpha": f.params.alpha,
            "S": f.params.scale, "r_bar": f.empirical_mean, "sigma_r": f.empirical_sd,
            "zeta": f.zeta, "delta": f.delta, "f_buy": f.f_buy, "kl": f.kl,
        }


@dataclass
class FitSeries:
    fits: list = field(default_factory=list)
    window_days: int = 0
    stride: int = 1
    skipped: list = field(default_factory=list)   # (window_end, reason)

    def __len__(self) -> int:
        return len(self.fits)


def window_ends(n_dates: int, window_days: int, stride: int) -> np.ndarray:
    """Indices of window end dates: ``window_days - 1``, then every ``stride`` dates."""
    if n_dates < window_days:
        return np.array([], dtype=int)
    return np.arange(window_days - 1, n_dates, stride)


def _regime_for(regimes: RegimeSeries | None, start_date, end_date) -> str:
    if regimes is None:
        return "all"
    first = regimes.label_at(start_date)
    last = regimes.label_at(end_date)
    if first is None or last is None:
        return "unlabelled"
    if first == WARMUP or last == WARMUP:
        return WARMUP
    return last


def _fit_chunk(panel: ReturnPanel, regimes, window_days: int, ends, grid_n: int, widen: float,
               min_obs: int, fit_kwargs: dict):
    """Fit consecutive windows, warm-starting each from the previous optimum."""
    fits, skipped = [], []
    init = DEFAULT_INIT
    for e in ends:
        start = e - window_days + 1
        end_date = panel.dates[e]
        sample = panel.pooled(start, e + 1)
        try:
            if sample.size < min_obs:
                raise SkipWindow(f"window has {sample.size} observations, need {min_obs}")
            grid = window_grid(sample, grid_n, widen)
            hist = bin_empirical(sample, grid, min_obs, window=(panel.dates[start], end_date))
            fit = fit_qrse(hist, init=init, **fit_kwargs)
            if not fit.converged and init is not DEFAULT_INIT:
                retry = fit_qrse(hist, init=DEFAULT_INIT, **fit_kwargs)
                if retry.converged or retry.kl < fit.kl:
                    fit = retry
        except SkipWindow as exc:
            skipped.append((end_date, str(exc)))
            continue
        except Exception as exc:  # noqa: BLE001 - one bad window must not sink the run
            skipped.append((end_date, f"{type(exc).__name__}: {exc}"))
            continue
        init = fit.params if fit.converged else DEFAULT_INIT
        fits.append(WindowFit(panel.dates[start], end_date, fit,
                              _regime_for(regimes, panel.dates[start], end_date)))
    return fits, skipped


def _run_chunk(job):
    return _fit_chunk(*job)


def rolling_fit(
    panel: ReturnPanel,
    regimes: RegimeSeries | None,
    window_days: int,
    stride: int = 1,
    grid_n: int = 801,
    widen: float = 0.10,
    min_obs: int = MIN_WINDOW_OBS,
    chunk_size: int | None = None,
    map_fn=map,
    **fit_kwargs,
) -> FitSeries:
    """Fit the model to the pooled cross-section of every rolling window.

    Windows are split into contiguous chunks of ``chunk_size`` (default: one
    chunk). Inside a chunk each fit starts from the previous window's optimum;
    every chunk starts from the default initial point, so the result depends on
    ``chunk_size`` but not on how chunks are scheduled by ``map_fn``.

    A window whose start or end date falls in the regime warmup period is
    labelled ``warmup``; otherwise it carries the label of its end date.
    """
    if window_days < 1 or stride < 1:
        raise ValueError("window_days and stride must be >= 1")
    ends = window_ends(len(panel.dates), window_days, stride)
    series = FitSeries(window_days=window_days, stride=stride)
    if ends.size == 0:
        log.warning("panel has %d dates, shorter than the %d-day window", len(panel.dates), window_days)
        series.skipped.append((None, f"panel shorter than window ({len(panel.dates)} < {window_days})"))
        return series
    size = ends.size if not chunk_size else int(chunk_size)
    chunks = [ends[i:i + size] for i in range(0, ends.size, size)]
    jobs = [(panel, regimes, window_days, c, grid_n, widen, min_obs, fit_kwargs) for c in chunks]
    for fits, skipped in map_fn(_run_chunk, jobs):
        series.fits.extend(fits)
        series.skipped.extend(skipped)
    for end, reason in series.skipped:
        log.info("skipped window ending %s: %s", end, reason)
    return series


@dataclass(frozen=True)
class SummaryRow:
    regime: str
    n_fits: int
    mean: dict
    sd: dict


@dataclass
class FitSummary:
    rows: list
    notes: list


def summarize_fits(series: FitSeries, regimes_order=("bull", "bear")) -> FitSummary:
    """Per-regime mean and (population) sd of the headline estimates.

    Only converged fits count; ``warmup`` windows are excluded. Regimes with no
    converged fit are omitted and mentioned in ``notes``.
    """
    if not series.fits:
        raise ValueError("no fits to summarize")
    labels = {f.regime for f in series.fits if f.regime != WARMUP}
    ordered = [r for r in regimes_order if r in labels] + sorted(labels - set(regimes_order))
    rows, notes = [], []
    for label in ordered:
        vals = [f.values() for f in series.fits if f.regime == label and f.fit.converged]
        if not vals:
            notes.append(f"regime {label!r}: no converged fits, row omitted")
            continue
        table = {c: np.array([v[c] for v in vals]) for c in SUMMARY_COLUMNS}
        rows.append(SummaryRow(label, len(vals),
                               {c: float(a.mean()) for c, a in table.items()},
                               {c: float(a.std()) for c, a in table.items()}))
    return FitSummary(rows, notes)


def write_fits_csv(series: FitSeries, fh) -> None:
    fh.write(",".join(FIT_CSV_COLUMNS) + "\n")
    for wf in series.fits:
        v = wf.values()
        cells = [str(wf.window_end), wf.regime, str(int(wf.fit.converged))]
        cells += [f"{v[c]:.10g}" for c in FIT_CSV_COLUMNS[3:-1]]
        cells.append(str(wf.fit.iterations))
        fh.write(",".join(cells) + "\n")


def write_summary_csv(summary: FitSummary, fh) -> None:
    cols = ["regime", "n_fits"] + [f"{c}_{s}" for c in SUMMARY_COLUMNS for s in ("mean", "sd")]
    fh.write(",".join(cols) + "\n")
    for row in summary.rows:
        cells = [row.regime, str(row.n_fits)]
        for c in SUMMARY_COLUMNS:
            cells += [f"{row.mean[c]:.6g}", f"{row.sd[c]:.6g}"]
        fh.write(",".join(cells) + "\n")


def format_summary_table(summary: FitSummary) -> str:
    """Aligned text: one line of means per regime, standard deviations below in parentheses."""
    width = 10
    head = f"{'regime':<8}{'n':>5}" + "".join(f"{c:>{width}}" for c in SUMMARY_COLUMNS)
    lines = [head, "-" * len(head)]
    for row in summary.rows:
        lines.append(f"{row.regime:<8}{row.n_fits:>5}" + "".join(f"{row.mean[c]:>{width}.4f}" for c in SUMMARY_COLUMNS))
        lines.append(f"{'':<13}" + "".join(f"{'(' + format(row.sd[c], '.4f') + ')':>{width}}" for c in SUMMARY_COLUMNS))
    lines += [f"note: {n}" for n in summary.notes]
    return "\n".join(lines) + "\n"
