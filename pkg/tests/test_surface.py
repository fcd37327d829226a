import io
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from qrse.errors import QrseError
from qrse.tstests import TESTS, rolling_test_surface, run_test, write_surface_csv


def test_full_window_matches_direct():
    x = np.random.default_rng(0).normal(size=300)
    surf = rolling_test_surface(x, "ramsey_rothman", [300], seed=4, params={"n_boot": 50})
    assert surf.p_values().shape == (1, 1)
    direct = run_test("ramsey_rothman", x, seed=4, n_boot=50)
    assert surf.cells[0][0].statistic == direct.statistic and surf.cells[0][0].p_value == direct.p_value


def test_infeasible_cells_missing():
    x = np.random.default_rng(1).normal(size=200)
    surf = rolling_test_surface(x, "adf", [20, 100], stride=10)
    p = surf.p_values()
    assert np.isnan(p[0]).all()          # 20 points is below the ADF minimum
    assert np.isnan(p[1][:8]).all() and np.isfinite(p[1][8:]).all()


def test_white_noise_p_values_uniform():
    means = []
    for seed in range(200):
        x = np.random.default_rng(seed).normal(size=400)
        surf = rolling_test_surface(x, "ramsey_rothman", [100, 200], stride=100, seed=seed,
                                    params={"n_boot": 49})
        means.append(np.nanmean(surf.p_values()))
    assert 0.4 <= np.mean(means) <= 0.6


def test_map_fn_does_not_change_result():
    x = np.random.default_rng(2).normal(size=300)
    a = rolling_test_surface(x, "dfk", [150, 300], stride=50, params={"n_symbols": 2, "word_len": 2,
                                                                        "n_surrogates": 20})
    with ThreadPoolExecutor(2) as pool:
        b = rolling_test_surface(x, "dfk", [150, 300], stride=50, map_fn=pool.map,
                                 params={"n_symbols": 2, "word_len": 2, "n_surrogates": 20})
    np.testing.assert_array_equal(a.p_values(), b.p_values())


def test_unknown_test_and_bad_window():
    with pytest.raises(QrseError):
        run_test("nope", np.zeros(10))
    with pytest.raises(QrseError):
        rolling_test_surface(np.zeros(10), "adf", [20])
    assert set(TESTS) == {"adf", "kpss", "ramsey_rothman", "dfk", "hvg_degree", "hvg_clustering"}


def test_csv():
    x = np.random.default_rng(3).normal(size=120)
    surf = rolling_test_surface(x, "kpss", [60, 120], stride=30)
    buf = io.StringIO()
    write_surface_csv(surf, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "test,window_size,window_end,statistic,p_value"
    assert len(lines) == 1 + 2 * len(surf.window_ends)
    assert lines[-1].startswith("kpss,120,119,")
