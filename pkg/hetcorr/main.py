from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import orjson

from hetcorr import __version__
from hetcorr.core.config import settings
from hetcorr.core.errors import ConfigValidationError, HetcorrError
from hetcorr.core.logging import configure_logging
from hetcorr.schemas.scenario import RunManifest, ScenarioConfig
from hetcorr.services.analysis import allan_slope, allan_variance
from hetcorr.services.presets import get_preset, list_presets
from hetcorr.services.scenario import (
    default_run_dir,
    gain_opt_rows,
    load_config,
    oracle_rows,
    run_scenario,
)
from hetcorr.services.storage import dump_json, read_series, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


def _emit(payload: object) -> None:
    sys.stdout.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2).decode("utf-8") + "\n")


def _report(manifest: RunManifest, run_dir: Path) -> None:
    _emit({"run_dir": str(run_dir), "files": len(manifest.files), "summary": manifest.summary})


def _run(config: ScenarioConfig, out: Path | None, workers: int | None) -> int:
    run_dir = out or default_run_dir(config)
    manifest = run_scenario(config, out_dir=run_dir, workers=workers)
    _report(manifest, run_dir)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    return _run(load_config(args.config), args.out, args.workers)


def cmd_preset(args: argparse.Namespace) -> int:
    config = get_preset(args.name, seed=args.seed)
    if args.dump_config:
        if args.out is None:
            sys.stdout.write(dump_json(config).decode("utf-8") + "\n")
        else:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            write_json(args.out, config)
        return EXIT_OK
    return _run(config, args.out, args.workers)


def cmd_presets(args: argparse.Namespace) -> int:
    presets = list_presets()
    width = max(len(name) for name, _ in presets)
    for name, description in presets:
        sys.stdout.write(f"{name.ljust(width)}  {description}\n")
    return EXIT_OK


def cmd_oracles(args: argparse.Namespace) -> int:
    rows = oracle_rows(load_config(args.config))
    _emit({str(row["quantity"]): row["value"] for row in rows})
    return EXIT_OK


def cmd_gain_opt(args: argparse.Namespace) -> int:
    _emit(gain_opt_rows(load_config(args.config)))
    return EXIT_OK


def cmd_allan(args: argparse.Namespace) -> int:
    series = read_series(args.series)
    result = allan_variance(series, args.interval, overlapping=args.overlapping)
    _emit(
        {
            "taus": result.taus,
            "variances": result.variances,
            "counts": result.counts,
            "minimum_tau": result.minimum_tau,
            "slope": allan_slope(result) if len(result.taus) > 1 else None,
        }
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetcorr",
        description="Balanced heterodyne cross-correlation receiver simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.log_level)
    parser.add_argument("--log-format", choices=("json", "text"), default=settings.log_format)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config file")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.set_defaults(func=cmd_run)

    preset = sub.add_parser("preset", help="run a named preset")
    preset.add_argument("name")
    preset.add_argument("--seed", type=int, default=None)
    preset.add_argument("--out", type=Path, default=None)
    preset.add_argument("--workers", type=int, default=None)
    preset.add_argument(
        "--dump-config", action="store_true", help="write the preset config instead of running it"
    )
    preset.set_defaults(func=cmd_preset)

    presets = sub.add_parser("presets", help="list presets")
    presets.set_defaults(func=cmd_presets)

    oracles = sub.add_parser("oracles", help="print closed-form oracles for a config")
    oracles.add_argument("config", type=Path)
    oracles.set_defaults(func=cmd_oracles)

    allan = sub.add_parser("allan", help="Allan variance of a readout series file")
    allan.add_argument("series", type=Path)
    allan.add_argument("--interval", type=float, required=True, help="readout interval in seconds")
    allan.add_argument("--overlapping", action="store_true")
    allan.set_defaults(func=cmd_allan)

    gain_opt = sub.add_parser("gain-opt", help="print optimum amplifier gains for a config")
    gain_opt.add_argument("config", type=Path)
    gain_opt.set_defaults(func=cmd_gain_opt)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.log_format)
    try:
        return args.func(args)
    except ConfigValidationError as exc:
        logger.error("validation failed", extra={"fields": exc.fields, "error": str(exc)})
        return EXIT_VALIDATION
    except (HetcorrError, OSError) as exc:
        logger.exception("run failed", extra={"error": str(exc)})
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
