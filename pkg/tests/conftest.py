import numpy as np
import pytest

from qrse.ingest import PricePanel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_panel(close, mcap=None, start="2021-01-04"):
    close = np.atleast_2d(np.asarray(close, dtype=float))
    dates = np.arange(np.datetime64(start), np.datetime64(start) + close.shape[1]).astype("datetime64[D]")
    assets = [f"X{i}" for i in range(close.shape[0])]
    mcap = None if mcap is None else np.atleast_2d(np.asarray(mcap, dtype=float))
    return PricePanel(assets, dates, close, mcap)


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path
