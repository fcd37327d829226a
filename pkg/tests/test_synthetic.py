import numpy as np
import pytest

from qrse.model import QrseParams, default_grid, marginal_density, model_moments
from qrse.summary import sample_summary
from qrse.synthetic import FIXTURE_PARAMS, sample_model, synthetic_panel


@pytest.mark.parametrize("th", [FIXTURE_PARAMS, QrseParams(2.0, 1.0, 0.0, 1.0)])
def test_sample_moments(th):
    n = 400_000
    x = sample_model(th, n, np.random.default_rng(0))
    m = model_moments(marginal_density(default_grid(th), th))
    s = sample_summary(x)
    assert abs(s.mean - m.mean) < 4 * m.stdev / np.sqrt(n)
    assert s.stdev == pytest.approx(m.stdev, rel=0.01)
    assert s.skew == pytest.approx(m.skew, abs=0.05)


def test_panel_shape_and_monotone_index():
    dates, assets, close, mcap, level = synthetic_panel(n_assets=4, n_dates=50, seed=1)
    assert close.shape == mcap.shape == (4, 50) and len(dates) == 50 and len(assets) == 4
    assert np.all(np.diff(level) > 0) and np.all(close > 0)


def test_seeded():
    a = synthetic_panel(n_assets=2, n_dates=20, seed=5)
    b = synthetic_panel(n_assets=2, n_dates=20, seed=5)
    np.testing.assert_array_equal(a[2], b[2])
