import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from qrse import __version__
from qrse.checks import bundled_fixture_dir
from qrse.cli import main
from qrse.config import PipelineConfig
from qrse.pipeline import cmd_analyze, cmd_ingest


@pytest.fixture
def fixture_dir(tmp_path):
    dst = tmp_path / "fx"
    shutil.copytree(bundled_fixture_dir(), dst)
    return dst


def write_prices(path, close, start="2020-01-01"):
    dates = np.arange(np.datetime64(start), np.datetime64(start) + close.shape[1])
    lines = ["date,asset,close"]
    for t, d in enumerate(dates):
        for i in range(close.shape[0]):
            lines.append(f"{d},S{i},{float(close[i, t])!r}")
    path.write_text("\n".join(lines) + "\n")


def run_cli(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestIngest:
    def test_no_outliers(self, tmp_path, capsys):
        r = np.random.default_rng(0).normal(0, 1, size=(3, 300))
        close = 100 * np.exp(np.cumsum(r, axis=1) / 100)
        write_prices(tmp_path / "prices.csv", close)
        code, out, _ = run_cli(["ingest", "--prices", tmp_path / "prices.csv", "--out-dir", tmp_path / "o"],
                               capsys)
        assert code == 0 and json.loads(out)["retained_fraction"] == 1.0
        report = json.loads((tmp_path / "o" / "load_report.json").read_text())
        assert report["truncated"] == 0 and report["pooled_summary"]["n"] == 3 * 299

    def test_one_extreme_point(self, tmp_path, capsys):
        r = np.random.default_rng(1).normal(0, 1, size=(1, 1000))
        r[0, 500] = 20.0
        z = (20.0 - r.mean()) / r.std()
        assert z > 9
        close = 100 * np.exp(np.concatenate([[0.0], np.cumsum(r)]) / 100)[None, :]
        write_prices(tmp_path / "prices.csv", close)
        code, _, _ = run_cli(["ingest", "--prices", tmp_path / "prices.csv", "--out-dir", tmp_path / "o"], capsys)
        report = json.loads((tmp_path / "o" / "load_report.json").read_text())
        assert code == 0 and report["truncated"] == 1
        assert report["retained_fraction"] == pytest.approx(999 / 1000, rel=1e-15)

    def test_bad_schema(self, tmp_path, capsys):
        (tmp_path / "prices.csv").write_text("date,ticker,close\n2020-01-01,A,1\n")
        code, out, err = run_cli(["ingest", "--prices", tmp_path / "prices.csv", "--out-dir", tmp_path / "o"],
                                 capsys)
        assert code != 0 and out == ""
        lines = err.strip().splitlines()
        assert len(lines) == 1
        payload = json.loads(lines[0])
        assert payload["error"] == "SchemaError" and "'asset'" in payload["message"]

    def test_bad_override(self, capsys):
        code, _, err = run_cli(["ingest", "--set", "fit.window_days=0"], capsys)
        assert code != 0 and json.loads(err)["error"] == "ParameterError"


class TestAnalyze:
    def test_fixture(self, fixture_dir, capsys):
        cfg = ["--config", fixture_dir / "config.yaml"]
        assert run_cli(["ingest", *cfg], capsys)[0] == 0
        code, out, _ = run_cli(["analyze", *cfg], capsys)
        assert code == 0 and json.loads(out)["converged"] > 0
        out_dir = fixture_dir / "out"
        summary = (out_dir / "summary.csv").read_text().splitlines()
        assert summary[0].startswith("# qrse") and len(summary) == 3 and summary[2].startswith("bull,")
        table = (out_dir / "summary.txt").read_text()
        assert "bull" in table and "bear" not in table
        manifest = json.loads((out_dir / "manifest.json").read_text())
        conf = PipelineConfig.load(fixture_dir / "config.yaml")
        assert manifest["config_hash"] == conf.config_hash()
        assert manifest["version"] == __version__ and manifest["seed"] == 0
        for f in out_dir.iterdir():
            if f.suffix in (".csv", ".txt"):
                assert f.read_text().startswith(f"# qrse {__version__} config_hash={conf.config_hash()}\n"), f
        surfaces = (out_dir / "surfaces.csv").read_text().splitlines()
        assert surfaces[1] == "test,window_size,window_end,statistic,p_value"
        assert {line.split(",")[0] for line in surfaces[2:]} == {"adf", "kpss", "ramsey_rothman", "dfk"}

    def test_deterministic_and_jobs_independent(self, fixture_dir, tmp_path):
        cfg = PipelineConfig.load(fixture_dir / "config.yaml")
        cmd_ingest(cfg)
        outs = []
        for name, jobs in (("a", 1), ("b", 1), ("c", 2)):
            cfg.out_dir, cfg.jobs = str(tmp_path / name), jobs
            shutil.copytree(fixture_dir / "out", tmp_path / name)
            cmd_analyze(cfg)
            outs.append({p.name: p.read_bytes() for p in (tmp_path / name).iterdir()})
        assert outs[0] == outs[1] == outs[2]

    def test_stride_equals_window(self, fixture_dir):
        cfg = PipelineConfig.load(fixture_dir / "config.yaml")
        cfg.fit.stride = cfg.fit.window_days = 80
        cfg.tests.enabled = False
        cmd_ingest(cfg)
        manifest = cmd_analyze(cfg)
        assert manifest["n_windows_fitted"] == (399 - 80) // 80 + 1

    def test_zero_fits_exit_code(self, fixture_dir, capsys):
        cfg = ["--config", fixture_dir / "config.yaml", "--set", "fit.min_obs=100000", "--set", "tests.enabled=false"]
        assert run_cli(["ingest", *cfg], capsys)[0] == 0
        code, _, err = run_cli(["analyze", *cfg], capsys)
        assert code != 0 and json.loads(err)["error"] == "NoSuccessfulFits"
        assert (fixture_dir / "out" / "manifest.json").exists()

    def test_analyze_before_ingest(self, fixture_dir, capsys):
        code, _, err = run_cli(["analyze", "--config", fixture_dir / "config.yaml"], capsys)
        assert code != 0 and "ingest" in json.loads(err)["message"]


class TestSelftest:
    def test_identity_checks_pass(self, capsys):
        code, out, _ = run_cli(["selftest", "--only", "1", "2", "3", "6", "10"], capsys)
        assert code == 0 and out.count("[PASS]") == 5

    def test_perturbed_kernel_named(self, capsys, monkeypatch):
        import qrse.model

        monkeypatch.setattr(qrse.model, "_KERNEL_OFFSET", 0.0)
        code, out, _ = run_cli(["selftest", "--only", "1", "2", "--perturb-kernel", "1e-3"], capsys)
        assert code != 0
        assert "[FAIL]  1 analytic identities" in out and "failed: 1 analytic identities" in out
        assert "[PASS]  2" in out

    def test_recovery_seeded(self, capsys):
        first = run_cli(["selftest", "--only", "5", "--seed", "3"], capsys)[1]
        second = run_cli(["selftest", "--only", "5", "--seed", "3"], capsys)[1]
        strip = [line.rsplit(" (", 1)[0] for line in (first.splitlines()[0], second.splitlines()[0])]
        assert strip[0] == strip[1]


def test_print_default_config(capsys, tmp_path):
    code, out, _ = run_cli(["print-default-config", "--seed", "7"], capsys)
    assert code == 0
    (tmp_path / "c.yaml").write_text(out)
    cfg = PipelineConfig.load(tmp_path / "c.yaml")
    assert cfg.seed == 7 and cfg.fit.window_days == 80 and cfg.regimes.long_span == 200


def test_console_script_module():
    res = subprocess.run([sys.executable, "-m", "qrse.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
