import io

import numpy as np
import pytest

from qrse.fit import QrseFit, bin_empirical, fit_qrse, window_grid
from qrse.ingest import ReturnPanel
from qrse.model import QrseParams
from qrse.regimes import IndexSeries, classify_regimes
from qrse.rolling import (
    FitSeries,
    WindowFit,
    format_summary_table,
    rolling_fit,
    summarize_fits,
    window_ends,
    write_fits_csv,
    write_summary_csv,
)
from qrse.synthetic import FIXTURE_PARAMS, sample_model


def synthetic_returns(n_assets=25, n_dates=200, seed=0):
    r = sample_model(FIXTURE_PARAMS, n_assets * n_dates, np.random.default_rng(seed)).reshape(n_assets, n_dates)
    dates = np.arange(np.datetime64("2020-01-01"), np.datetime64("2020-01-01") + n_dates)
    return ReturnPanel([f"A{i}" for i in range(n_assets)], dates, r)


def fake_fit(zeta=0.0, converged=True):
    p = QrseParams(zeta, 1.0, 0.0, 1.0)
    return QrseFit(p, 0.01, 1 - np.exp(-0.01), zeta, 0.5, 0.5, 0.0, 1.0, 0.0, 1.0, converged, 10)


@pytest.fixture(scope="module")
def panel():
    return synthetic_returns()


def test_window_end_arithmetic():
    for n, w, s in [(200, 40, 40), (200, 40, 7), (100, 100, 3), (99, 100, 1)]:
        ends = window_ends(n, w, s)
        assert len(ends) == (0 if n < w else (n - w) // s + 1)


def test_non_overlapping_count(panel):
    series = rolling_fit(panel, None, 40, stride=40)
    assert len(series) == (200 - 40) // 40 + 1
    ends = [f.window_end for f in series.fits]
    assert np.all(np.diff(np.array(ends)).astype(int) == 40)
    assert all(f.regime == "all" for f in series.fits)


def test_stationary_panel_is_stable(panel):
    series = rolling_fit(panel, None, 40, stride=40)
    theta = np.array([f.fit.params.as_array() for f in series.fits])
    # bootstrap sd of a single window fit
    x = panel.pooled(0, 40)
    rng = np.random.default_rng(1)
    boot = []
    for _ in range(30):
        xb = rng.choice(x, x.size)
        boot.append(fit_qrse(bin_empirical(xb, window_grid(xb))).params.as_array())
    assert np.all(theta.std(axis=0) < 3 * np.std(boot, axis=0))


def test_short_panel(panel, caplog):
    short = ReturnPanel(panel.assets, panel.dates[:10], panel.returns[:, :10])
    series = rolling_fit(short, None, 40)
    assert len(series) == 0 and "shorter than" in series.skipped[0][1]


def test_undersized_windows_skipped(panel):
    series = rolling_fit(panel, None, 10, stride=50)      # 250 obs per window
    assert len(series) == 0 and len(series.skipped) == 4
    assert "observations" in series.skipped[0][1]


def test_chunking_and_map(panel):
    a = rolling_fit(panel, None, 40, stride=20, chunk_size=3)
    b = rolling_fit(panel, None, 40, stride=20, chunk_size=3, map_fn=lambda f, jobs: [f(j) for j in jobs])
    assert [w.fit for w in a.fits] == [w.fit for w in b.fits]


def test_regime_labels(panel):
    dates = np.arange(np.datetime64("2019-06-01"), np.datetime64("2020-08-01"))
    idx = IndexSeries(dates, 1.001 ** np.arange(dates.size))
    reg = classify_regimes(idx)
    series = rolling_fit(panel, reg, 40, stride=40)
    first_bull = reg.dates[200]
    for f in series.fits:
        assert f.regime == ("bull" if f.window_start >= first_bull else "warmup")


class TestSummary:
    def series(self, fits, regime="bull"):
        d = np.datetime64("2020-01-01")
        return FitSeries([WindowFit(d, d + i, f, regime) for i, f in enumerate(fits)], 10, 1)

    def test_identical(self):
        s = summarize_fits(self.series([fake_fit(0.5)] * 4))
        assert all(v == 0 for v in s.rows[0].sd.values())

    def test_two_fits(self):
        row = summarize_fits(self.series([fake_fit(0.0), fake_fit(2.0)])).rows[0]
        assert row.mean["zeta"] == 1.0 and row.sd["zeta"] == 1.0

    def test_nonconverged_regime_omitted(self):
        d = np.datetime64("2020-01-01")
        fits = [WindowFit(d, d, fake_fit(0.1), "bull"), WindowFit(d, d + 1, fake_fit(0.1, False), "bear"),
                WindowFit(d, d + 2, fake_fit(0.1), "warmup")]
        s = summarize_fits(FitSeries(fits, 10, 1))
        assert [r.regime for r in s.rows] == ["bull"]
        assert "bear" in s.notes[0]
        assert "note:" in format_summary_table(s)

    def test_writers(self):
        s = self.series([fake_fit(0.0), fake_fit(2.0)])
        buf = io.StringIO()
        write_fits_csv(s, buf)
        head = buf.getvalue().splitlines()[0]
        assert head.startswith("window_end,regime,converged,ID,mu,T,alpha,S,r_bar")
        buf = io.StringIO()
        write_summary_csv(summarize_fits(s), buf)
        assert buf.getvalue().splitlines()[1].startswith("bull,2,")
