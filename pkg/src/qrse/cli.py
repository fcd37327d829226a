"""Command-line entry point: ``qrse {ingest,analyze,selftest,print-default-config}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .config import PipelineConfig
from .errors import QrseError

log = logging.getLogger("qrse")

# named shortcuts for the most common --set overrides
NAMED_OVERRIDES = {
    "window_days": "fit.window_days",
    "stride": "fit.stride",
    "k_sd": "ingest.k_sd",
    "prices": "input.prices",
    "index": "input.index",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file (defaults are used when omitted)")
    common.add_argument("--seed", type=int, help="master seed for every randomized step")
    common.add_argument("--jobs", type=int, help="worker processes for window fits and test cells")
    common.add_argument("--out-dir", help="output directory (relative paths resolve against the config file)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config field, e.g. --set fit.grid_n=401 (repeatable)")
    for name, dotted in NAMED_OVERRIDES.items():
        common.add_argument(f"--{name.replace('_', '-')}", dest=name, help=f"shortcut for --set {dotted}=...")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qrse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"qrse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="load prices, write returns and a load report")
    sub.add_parser("analyze", parents=[common], help="regimes, rolling fits, summary table, test surfaces")
    st = sub.add_parser("selftest", parents=[common], help="run the embedded acceptance checks")
    st.add_argument("--full", action="store_true", help="include the slow test-size and end-to-end checks")
    st.add_argument("--only", type=int, nargs="+", metavar="N", help="run only these check numbers")
    st.add_argument("--perturb-kernel", type=float, default=None, help=argparse.SUPPRESS)
    sub.add_parser("print-default-config", parents=[common], help="print the embedded defaults as YAML")
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise QrseError(f"--set expects KEY=VALUE, got {item!r}")
        cfg.override(key.strip(), value)
    for name, dotted in NAMED_OVERRIDES.items():
        value = getattr(args, name, None)
        if value is not None:
            cfg.override(dotted, value)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    cfg.validate()
    return cfg


def _selftest(args, cfg: PipelineConfig) -> int:
    from .checks import perturb_kernel, run_checks

    if args.perturb_kernel is not None:
        perturb_kernel(args.perturb_kernel)
    results = run_checks(seed=cfg.seed, full=args.full, only=args.only, echo=print)
    failed = [r for r in results if not (r.passed and r.in_time)]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failed: " + ", ".join(f"{r.number} {r.name}" for r in failed))
    return 1 if failed else 0


def _error_line(exc: BaseException) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args)
        if args.command == "print-default-config":
            sys.stdout.write(cfg.to_yaml())
            return 0
        if args.command == "selftest":
            return _selftest(args, cfg)
        from .pipeline import cmd_analyze, cmd_ingest

        if args.command == "ingest":
            report = cmd_ingest(cfg)
            print(json.dumps({"retained_fraction": report["retained_fraction"],
                              "returns": report["returns_present"], "out_dir": str(cfg.resolve(cfg.out_dir))}))
        else:
            manifest = cmd_analyze(cfg)
            print(json.dumps({"windows": manifest["n_windows_fitted"], "converged": manifest["n_converged"],
                              "skipped": manifest["n_skipped"], "out_dir": str(cfg.resolve(cfg.out_dir))}))
        return 0
    except (QrseError, OSError, ValueError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
