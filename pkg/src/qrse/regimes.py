"""Capitalization-weighted index construction and EMA-crossover regimes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GapError, InsufficientDataError, ParameterError, SchemaError
from .ingest import PricePanel

BULL, BEAR, WARMUP = "bull", "bear", "warmup"


@dataclass(frozen=True)
class IndexSeries:
    dates: np.ndarray
    level: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.level):
            raise SchemaError("index dates and levels differ in length")
        if np.any(~(self.level > 0)):
            raise ParameterError("index levels must be positive")


@dataclass(frozen=True)
class RegimeSeries:
    dates: np.ndarray
    labels: np.ndarray
    spans: list

    def label_at(self, date) -> str | None:
        i = np.searchsorted(self.dates, date)
        if i < len(self.dates) and self.dates[i] == date:
            return str(self.labels[i])
        return None


def ema(series, span: int, seed: str = "first") -> np.ndarray:
    """Exponential moving average with smoothing ``2 / (span + 1)``.

    ``seed="first"`` starts the recursion at ``x[0]``. ``seed="sma"`` starts it
    at the mean of the first ``span`` points, placed at index ``span - 1``;
    earlier outputs are NaN.
    """
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise InsufficientDataError("ema of an empty series")
    if span < 1:
        raise ParameterError(f"span must be >= 1, got {span}")
    lam = 2.0 / (span + 1.0)
    out = np.empty_like(x)
    if seed == "first":
        start, prev = 0, x[0]
    elif seed == "sma":
        if x.size < span:
            raise InsufficientDataError(f"sma seed needs {span} points, got {x.size}")
        out[: span - 1] = np.nan
        start, prev = span - 1, x[:span].mean()
    else:
        raise ParameterError(f"unknown ema seed {seed!r}")
    out[start] = prev
    for t in range(start + 1, x.size):
        prev = lam * x[t] + (1.0 - lam) * prev
        out[t] = prev
    return out


def cap_weighted_index(panel: PricePanel, base: float = 100.0) -> IndexSeries:
    """Index whose daily simple return is the mcap-weighted average of asset
    simple returns, weights taken from the previous day's market caps.

    Raises
    ------
    GapError
        If on some date no asset has close and mcap at ``t-1`` and close at ``t``.
    """
    if panel.mcap is None:
        raise SchemaError("cap-weighted index needs market capitalizations")
    if len(panel.dates) < 2:
        raise InsufficientDataError("index needs at least 2 dates")
    close, mcap = panel.close, panel.mcap
    level = np.empty(len(panel.dates))
    level[0] = base
    for t in range(1, len(panel.dates)):
        ok = ~np.isnan(close[:, t - 1]) & ~np.isnan(close[:, t]) & ~np.isnan(mcap[:, t - 1])
        if not ok.any():
            raise GapError(f"no asset with complete data for {panel.dates[t - 1]} -> {panel.dates[t]}")
        w = mcap[ok, t - 1] / mcap[ok, t - 1].sum()
        simple = close[ok, t] / close[ok, t - 1] - 1.0
        level[t] = level[t - 1] * (1.0 + float(w @ simple))
    return IndexSeries(panel.dates.copy(), level)


def spans_from_labels(dates, labels) -> list:
    """Maximal runs of equal labels as ``(start_date, end_date, label)``."""
    spans = []
    start = 0
    for t in range(1, len(labels) + 1):
        if t == len(labels) or labels[t] != labels[start]:
            spans.append((dates[start], dates[t - 1], str(labels[start])))
            start = t
    return spans


def labels_from_spans(dates, spans) -> np.ndarray:
    labels = np.empty(len(dates), dtype=object)
    for start, end, label in spans:
        labels[(dates >= start) & (dates <= end)] = label
    return labels


def classify_regimes(index: IndexSeries, short_span: int = 50, long_span: int = 200,
                     seed: str = "first") -> RegimeSeries:
    """Label each date bull (short EMA above long EMA) or bear (below).

    The first ``long_span`` dates are ``warmup``. Exact ties keep the previous
    label; a tie on the first labelled date counts as bull. Levels are divided
    by the first level before smoothing so the labels do not depend on the
    index base.
    """
    n = len(index.level)
    if n <= long_span:
        raise InsufficientDataError(f"index has {n} dates, need more than {long_span}")
    x = index.level / index.level[0]
    fast = ema(x, short_span, seed)
    slow = ema(x, long_span, seed)
    labels = np.empty(n, dtype=object)
    labels[:long_span] = WARMUP
    prev = BULL
    for t in range(long_span, n):
        if fast[t] > slow[t]:
            prev = BULL
        elif fast[t] < slow[t]:
            prev = BEAR
        labels[t] = prev
    return RegimeSeries(index.dates.copy(), labels, spans_from_labels(index.dates, labels))


def write_regimes_csv(regimes: RegimeSeries, fh) -> None:
    fh.write("date,label\n")
    for d, lab in zip(regimes.dates, regimes.labels):
        fh.write(f"{d},{lab}\n")


def write_spans_csv(regimes: RegimeSeries, fh) -> None:
    fh.write("start,end,label\n")
    for start, end, lab in regimes.spans:
        fh.write(f"{start},{end},{lab}\n")
