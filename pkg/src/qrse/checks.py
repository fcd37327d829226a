"""Embedded acceptance checks, shared by ``qrse selftest`` and the test suite.

Each check returns a :class:`CheckResult`; none of them raise on failure.
Randomized checks draw everything from ``numpy.random.default_rng(seed)`` so a
given seed always reproduces the same report.
"""
from __future__ import annotations

import filecmp
import shutil
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import model as _model
from .errors import QrseError
from .fit import EmpiricalHist, bin_empirical, fit_qrse, kl_divergence, soofi_id, window_grid
from .model import (
    QrseParams,
    ReturnGrid,
    conditional_action_prob,
    default_grid,
    kernel_log_density,
    marginal_density,
    model_moments,
)
from .regimes import IndexSeries, classify_regimes
from .synthetic import sample_model
from .tstests import (
    adf_test,
    clustering_irreversibility_test,
    dfk_test,
    hvg_degree_test,
    hvg_degrees,
    iid_degree_law,
    kpss_test,
    ramsey_rothman_test,
)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    limit: float

    @property
    def in_time(self) -> bool:
        return self.seconds <= self.limit

    def line(self) -> str:
        status = "PASS" if self.passed and self.in_time else "FAIL"
        timing = f"{self.seconds:.2f}s/{self.limit:g}s"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({timing})"


def _random_params(rng: np.random.Generator, size: int) -> list[QrseParams]:
    return [
        QrseParams(rng.uniform(-2, 2), rng.uniform(0.1, 5), rng.uniform(-2, 2), rng.uniform(0.1, 5))
        for _ in range(size)
    ]


def check_identities(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_sum = worst_diff = worst_kernel = 0.0
    for th in _random_params(rng, 100):
        r = rng.uniform(-20, 20, size=100)
        p_buy, p_sell = conditional_action_prob(r, th)
        worst_sum = max(worst_sum, np.max(np.abs(p_buy + p_sell - 1.0)))
        worst_diff = max(worst_diff, np.max(np.abs(p_sell - p_buy - np.tanh((r - th.mu) / (2 * th.temp)))))
        # independent kernel: plain -p ln p entropy, fine away from saturation
        x = np.clip((r - th.mu) / th.temp, -30, 30)
        pb, ps = 1.0 / (1.0 + np.exp(x)), 1.0 / (1.0 + np.exp(-x))
        h = -(pb * np.log(pb) + ps * np.log(ps))
        rr = th.mu + th.temp * x
        ref = h - (ps - pb) * (rr - th.alpha) / th.scale
        worst_kernel = max(worst_kernel, np.max(np.abs(kernel_log_density(rr, th) - ref)))
    ok = worst_sum <= 1e-12 and worst_diff <= 1e-12 and worst_kernel <= 1e-9
    return ok, f"max |sum-1|={worst_sum:.1e}, |diff-tanh|={worst_diff:.1e}, |kernel-ref|={worst_kernel:.1e}"


def check_normalization(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_mass = worst_skew = 0.0
    for th in _random_params(rng, 100):
        dist = marginal_density(default_grid(th), th)
        worst_mass = max(worst_mass, abs(dist.marginal.sum() - 1.0))
        sym = QrseParams(th.mu, th.temp, th.mu, th.scale)
        worst_skew = max(worst_skew, abs(model_moments(marginal_density(default_grid(sym), sym)).skew))
    ok = worst_mass <= 1e-10 and worst_skew < 1e-8
    return ok, f"max |mass-1|={worst_mass:.1e}, max |skew| at mu=alpha: {worst_skew:.1e}"


def check_limit_shapes(seed: int = 0) -> tuple[bool, str]:
    kurt = {}
    for temp in (1e-3, 1e3):
        th = QrseParams(0.0, temp, 0.0, 1.0)
        kurt[temp] = model_moments(marginal_density(default_grid(th, 2001), th)).kurt
    ok = 5.5 <= kurt[1e-3] <= 6.5 and 2.9 <= kurt[1e3] <= 3.1
    return ok, f"kurtosis T=1e-3: {kurt[1e-3]:.4f}, T=1e3: {kurt[1e3]:.4f}"


def check_sign_law(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(200):
        temp, scale = rng.uniform(0.1, 5), rng.uniform(0.1, 5)
        zeta = 0.0
        while zeta == 0.0:
            zeta = rng.uniform(-3 * temp, 3 * temp)
        alpha = rng.uniform(-2, 2)
        th = QrseParams(alpha + zeta, temp, alpha, scale)
        skew = model_moments(marginal_density(default_grid(th), th)).skew
        bad += int(np.sign(skew) != -np.sign(zeta))
    return bad == 0, f"{bad}/200 sign violations"


def recovery_study(seed: int = 0, windows: int = 50, size: int = 100_000):
    """Fit ``windows`` synthetic samples drawn at random ``theta*``.

    Returns ``(relative_errors, soofi_ids)`` with one row per window.
    """
    rng = np.random.default_rng(seed)
    errors, ids = [], []
    for _ in range(windows):
        th = QrseParams(rng.uniform(-2, 2), rng.uniform(0.5, 5), rng.uniform(-2, 2), rng.uniform(0.5, 5))
        x = sample_model(th, size, rng)
        fit = fit_qrse(bin_empirical(x, window_grid(x)))
        errors.append(np.abs(fit.params.as_array() - th.as_array()) / np.abs(th.as_array()))
        ids.append(fit.soofi_id)
    return np.array(errors), np.array(ids)


def check_recovery(seed: int = 0) -> tuple[bool, str]:
    errors, ids = recovery_study(seed)
    med = np.median(errors, axis=0)
    ok = bool(np.all(med < 0.05) and np.all(ids < 0.01))
    labels = ("mu", "T", "alpha", "S")
    parts = ", ".join(f"{k}={v:.4f}" for k, v in zip(labels, med))
    return ok, f"median rel. error {parts}; max ID={ids.max():.4f}"


def check_kl_contracts(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    grid = ReturnGrid.uniform(-30, 30, 801)
    th = QrseParams(0.2, 1.0, -0.1, 1.5)
    f = marginal_density(grid, th)
    self_kl = kl_divergence(f, EmpiricalHist(grid, f.marginal.copy(), 10**6, 0.0, 1.0))
    worst = np.inf
    for i in range(1000):
        a = QrseParams(rng.uniform(-2, 2), rng.uniform(0.3, 3), rng.uniform(-2, 2), rng.uniform(0.3, 3))
        model = marginal_density(grid, a, check_coverage=False)
        n_obs = int(rng.integers(500, 10**5))
        if i % 2:
            mass = rng.dirichlet(np.full(grid.n, 0.3))
        else:  # near pair: a histogram drawn from the model itself
            mass = rng.multinomial(n_obs, model.marginal / model.marginal.sum()) / n_obs
        hist = EmpiricalHist(grid, mass, n_obs, 0.0, 1.0)
        worst = min(worst, kl_divergence(model, hist), kl_divergence(model, hist, reverse=True))
    half = soofi_id(np.log(2.0))
    ok = abs(self_kl) <= 1e-12 and worst >= 0.0 and abs(half - 0.5) <= 1e-12
    return ok, f"D(f,f)={self_kl:.1e}, min D over 1e3 pairs={worst:.3g}, ID(ln 2)-0.5={half - 0.5:.1e}"


def check_hvg_law(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    n = 100_000
    deg = hvg_degrees(rng.random(n))[1:-1]
    ks = np.array([2, 3, 4])
    p_hat = np.array([(deg == k).mean() for k in ks])
    p = iid_degree_law(ks)
    z = np.abs(p_hat - p) / np.sqrt(p * (1 - p) / deg.size)
    parts = ", ".join(f"P({k})={v:.4f}" for k, v in zip(ks, p_hat))
    return bool(np.all(z <= 3)), f"{parts}; max z={z.max():.2f}"


IRREVERSIBILITY_TESTS = {
    "ramsey_rothman": lambda x, s: ramsey_rothman_test(x, k=1, seed=s),
    "dfk": lambda x, s: dfk_test(x, n_symbols=3, word_len=3, seed=s),
    "hvg_degree": lambda x, s: hvg_degree_test(x, seed=s),
    "hvg_clustering": lambda x, s: clustering_irreversibility_test(x),
}


def sawtooth(n: int, period: int = 25, noise: float = 0.05, seed: int = 0) -> np.ndarray:
    """Slow linear rise, instant drop: a strongly time-irreversible series."""
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    return (t % period) / period + noise * rng.normal(size=n)


def check_test_size(seed: int = 0, n_series: int = 200, n: int = 2000) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    series = [rng.normal(size=n) for _ in range(n_series)]
    saw = sawtooth(n, seed=seed)
    ok, parts = True, []
    for name, test in IRREVERSIBILITY_TESTS.items():
        rate = np.mean([test(x, seed + i).p_value < 0.05 for i, x in enumerate(series)])
        p_saw = test(saw, seed).p_value
        ok &= 0.02 <= rate <= 0.09 and p_saw < 0.01
        parts.append(f"{name} size={rate:.3f} sawtooth p={p_saw:.3g}")
    return bool(ok), "; ".join(parts)


def check_stationarity(seed: int = 0) -> tuple[bool, str]:
    # KPSS p-values are clipped to the table range, so the bounds are read as
    # "p >= 0.10" and "p <= 0.01".
    rng = np.random.default_rng(seed)
    noise = rng.normal(size=10_000)
    walk = np.cumsum(rng.normal(size=10_000))
    res = {
        "adf_noise": adf_test(noise), "adf_walk": adf_test(walk),
        "kpss_noise": kpss_test(noise), "kpss_walk": kpss_test(walk),
    }
    p = {k: v.p_value for k, v in res.items()}
    ok = p["adf_noise"] < 0.01 and p["adf_walk"] > 0.10 and p["kpss_noise"] >= 0.10 and p["kpss_walk"] <= 0.01
    return ok, ", ".join(f"{k} stat={v.statistic:.3g} p={v.p_value:.3g}" for k, v in res.items())


def check_regimes(seed: int = 0) -> tuple[bool, str]:
    dates = np.arange(np.datetime64("2000-01-01"), np.datetime64("2000-01-01") + 600)
    up = IndexSeries(dates, 100.0 * 1.001 ** np.arange(600))
    down = IndexSeries(dates, 100.0 * 0.999 ** np.arange(600))
    lab_up = classify_regimes(up).labels[200:]
    lab_down = classify_regimes(down).labels[200:]
    scaled = classify_regimes(IndexSeries(dates, 37.5 * up.level)).labels
    bumpy = IndexSeries(dates, 100.0 * np.exp(np.cumsum(np.random.default_rng(seed).normal(0, 0.02, 600))))
    invariant = np.array_equal(classify_regimes(up).labels, scaled) and np.array_equal(
        classify_regimes(bumpy).labels, classify_regimes(IndexSeries(dates, 1e-3 * bumpy.level)).labels
    )
    ok = bool(np.all(lab_up == "bull") and np.all(lab_down == "bear") and invariant)
    return ok, f"up all bull={np.all(lab_up == 'bull')}, down all bear={np.all(lab_down == 'bear')}, " \
               f"scale invariant={invariant}"


def bundled_fixture_dir() -> Path:
    return Path(str(resources.files("qrse") / "data" / "fixture"))


def check_determinism(seed: int = 0) -> tuple[bool, str]:
    from .config import PipelineConfig
    from .pipeline import cmd_analyze, cmd_ingest

    src = bundled_fixture_dir()
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for run in ("a", "b"):
            work = Path(tmp) / run
            shutil.copytree(src, work)
            cfg = PipelineConfig.load(work / "config.yaml")
            cfg.seed = seed
            cmd_ingest(cfg)
            cmd_analyze(cfg)
            outs.append(work / cfg.out_dir)
        names = sorted(p.name for p in outs[0].iterdir())
        same_names = names == sorted(p.name for p in outs[1].iterdir())
        _, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
    ok = same_names and not mismatch and not errors and len(names) > 0
    return ok, f"{len(names)} files compared, mismatched={mismatch + errors}"


@dataclass(frozen=True)
class Check:
    number: int
    name: str
    fn: object
    limit: float
    quick: bool


CHECKS = (
    Check(1, "analytic identities", check_identities, 1.0, True),
    Check(2, "normalization and symmetry", check_normalization, 10.0, True),
    Check(3, "limit shapes", check_limit_shapes, 5.0, True),
    Check(4, "skewness-zeta sign law", check_sign_law, 30.0, True),
    Check(5, "parameter recovery", check_recovery, 600.0, True),
    Check(6, "KL / ID contracts", check_kl_contracts, 5.0, True),
    Check(7, "HVG degree law", check_hvg_law, 10.0, True),
    Check(8, "irreversibility test size and power", check_test_size, 900.0, False),
    Check(9, "stationarity sanity", check_stationarity, 30.0, True),
    Check(10, "regime classifier", check_regimes, 1.0, True),
    Check(11, "end-to-end determinism", check_determinism, 120.0, False),
)


def run_check(check: Check, seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    try:
        passed, detail = check.fn(seed)
    except QrseError as exc:
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CheckResult(check.number, check.name, bool(passed), detail, time.perf_counter() - t0, check.limit)


def run_checks(seed: int = 0, full: bool = False, only=None, echo=None) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        if only is not None and check.number not in only:
            continue
        if only is None and not (full or check.quick):
            continue
        res = run_check(check, seed)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results


def perturb_kernel(offset: float = 1e-3) -> None:
    """Test hook: shift the kernel by a constant so the identity check trips."""
    _model._KERNEL_OFFSET = offset
