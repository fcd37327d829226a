"""Pipeline configuration: YAML file <-> nested dataclasses."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ParameterError


@dataclass
class InputConfig:
    prices: str = "prices.csv"
    wide: bool = False
    index: str | None = None          # optional date,level CSV


@dataclass
class IngestConfig:
    k_sd: float = 8.0
    per_asset: bool = False


@dataclass
class RegimeConfig:
    short_span: int = 50
    long_span: int = 200
    ema_seed: str = "first"           # first | sma
    index_source: str = "auto"        # auto | file | mcap | equal


@dataclass
class FitConfig:
    window_days: int = 80
    stride: int = 1
    grid_n: int = 801
    grid_widen: float = 0.10
    min_obs: int = 500
    kl_direction: str = "model"       # model: D[model||data]; empirical: D[data||model]
    empty_bin_floor: float | None = None
    gtol: float = 1e-6
    max_iter: int = 500
    fd_step: float = 1e-5
    chunk_size: int = 0               # 0: one warm-started chain over all windows


def _default_battery() -> list:
    return [
        {"test": "adf"},
        {"test": "kpss"},
        {"test": "ramsey_rothman", "k": 1, "n_boot": 500},
        {"test": "dfk", "n_symbols": 2, "word_len": 3, "n_surrogates": 500},
        {"test": "hvg_degree", "n_surrogates": 500},
        {"test": "hvg_clustering"},
    ]


@dataclass
class TestConfig:
    __test__ = False

    enabled: bool = True
    series: str = "index_returns"     # index_returns | index_level
    window_sizes: list = field(default_factory=lambda: [60, 80, 100, 120])
    stride: int = 20
    significance: float = 0.05
    battery: list = field(default_factory=_default_battery)


@dataclass
class PipelineConfig:
    input: InputConfig = field(default_factory=InputConfig)
    ingest: IngestConfig = field(default_factory=IngestConfig)
    regimes: RegimeConfig = field(default_factory=RegimeConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    tests: TestConfig = field(default_factory=TestConfig)
    seed: int = 0
    jobs: int = 1
    out_dir: str = "out"
    base_dir: str = field(default=".", repr=False, compare=False)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "PipelineConfig":
        data = dict(data or {})
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name == "base_dir" or f.name not in data:
                continue
            sub = SECTIONS.get(f.name)
            kwargs[f.name] = _build(sub, data[f.name], f.name) if sub else data[f.name]
        cfg = cls(**kwargs, base_dir=str(base_dir))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        return cls.from_dict(data, base_dir=path.parent)

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        q = Path(p)
        return q if q.is_absolute() else Path(self.base_dir) / q

    def output_settings(self) -> dict:
        """Every setting that can change outputs; ``jobs`` and ``out_dir`` cannot."""
        d = self.to_dict()
        d.pop("jobs")
        d.pop("out_dir")
        return d

    def config_hash(self) -> str:
        d = self.output_settings()
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def override(self, dotted: str, value: str) -> None:
        """Set ``section.key`` (or a top-level key) from a string, parsed as YAML."""
        parts = dotted.split(".")
        target = self
        for p in parts[:-1]:
            if not hasattr(target, p):
                raise ParameterError(f"unknown config section {p!r}")
            target = getattr(target, p)
        if not dataclasses.is_dataclass(target) or parts[-1] not in {f.name for f in dataclasses.fields(target)}:
            raise ParameterError(f"unknown config key {dotted!r}")
        fld = next(f for f in dataclasses.fields(target) if f.name == parts[-1])
        setattr(target, parts[-1], _coerce(fld, yaml.safe_load(value), dotted))
        self.validate()

    def validate(self) -> None:
        try:
            self._validate()
        except TypeError as exc:
            raise ParameterError(f"config value of the wrong type: {exc}") from None

    def _validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ParameterError(msg)

        need(self.ingest.k_sd > 0, "ingest.k_sd must be > 0")
        r = self.regimes
        need(1 <= r.short_span < r.long_span, "regimes: need 1 <= short_span < long_span")
        need(r.ema_seed in ("first", "sma"), "regimes.ema_seed must be 'first' or 'sma'")
        need(r.index_source in ("auto", "file", "mcap", "equal"), "regimes.index_source invalid")
        f = self.fit
        need(f.window_days >= 2 and f.stride >= 1, "fit: window_days >= 2 and stride >= 1")
        need(f.grid_n >= 51 and f.grid_n % 2 == 1, "fit.grid_n must be odd and >= 51")
        need(f.grid_widen >= 0, "fit.grid_widen must be >= 0")
        need(f.min_obs >= 1, "fit.min_obs must be >= 1")
        need(f.kl_direction in ("model", "empirical"), "fit.kl_direction must be 'model' or 'empirical'")
        need(f.empty_bin_floor is None or f.empty_bin_floor > 0, "fit.empty_bin_floor must be > 0")
        need(f.gtol > 0 and f.max_iter >= 1 and f.fd_step > 0, "fit: gtol, max_iter, fd_step must be positive")
        need(f.chunk_size >= 0, "fit.chunk_size must be >= 0")
        t = self.tests
        need(t.series in ("index_returns", "index_level"), "tests.series invalid")
        need(all(int(w) >= 2 for w in t.window_sizes), "tests.window_sizes must be >= 2")
        need(t.stride >= 1 and 0 < t.significance < 1, "tests: stride >= 1, 0 < significance < 1")
        need(all(isinstance(b, dict) and "test" in b for b in t.battery), "tests.battery entries need a 'test' key")
        need(self.jobs >= 1, "jobs must be >= 1")


def _coerce(fld, value, name):
    """Convert strings to the field's numeric type (YAML reads ``1e-8`` as a string)."""
    if not isinstance(value, str):
        return value
    ann = str(fld.type)
    try:
        if ann.startswith("float"):
            return float(value)
        if ann.startswith("int"):
            return int(value)
    except ValueError:
        raise ParameterError(f"{name}: expected a number, got {value!r}") from None
    return value


def _build(cls, data, name):
    data = dict(data or {})
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ParameterError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return cls(**{k: _coerce(fields[k], v, f"{name}.{k}") for k, v in data.items()})


SECTIONS = {"input": InputConfig, "ingest": IngestConfig, "regimes": RegimeConfig,
            "fit": FitConfig, "tests": TestConfig}
