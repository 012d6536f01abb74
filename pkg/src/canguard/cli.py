"""Command-line front-end: canguard stats|benchmark|ensemble|synth."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    FitError,
    FormatError,
    ImputationError,
    LabelError,
    NumericError,
    ParseError,
    SchemaError,
    ShapeError,
    SplitError,
    StatsError,
)
from .pipeline import (
    DEFAULT_MODELS,
    FEATURE_SETS,
    MODEL_FAMILY_FOR_NAME,
    RunConfig,
    run_benchmark,
    run_ensemble,
    run_stats,
    run_synth,
)
from .synth import SynthConfig, default_synth_config

DATA_DIR_ENV = "CANGUARD_DATA_DIR"

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_COMPUTE = 5
EXIT_FORMAT = 6

_ERROR_CATEGORIES = (
    ((ConfigError, ValueError), "config", EXIT_CONFIG),
    ((SchemaError, ParseError, LabelError, ImputationError), "data", EXIT_DATA),
    ((FitError, NumericError, StatsError, SplitError, ShapeError),
     "compute", EXIT_COMPUTE),
    ((FormatError,), "format", EXIT_FORMAT),
    ((OSError,), "io", EXIT_IO),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="canguard",
        description="CAN bus intrusion detection experiments over decimal "
                    "frame logs (real or synthetic).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, needs_data: bool) -> None:
        if needs_data:
            p.add_argument("--data", type=Path, default=None,
                           help="directory holding the six canonical CSV files "
                                f"(fallback: ${DATA_DIR_ENV})")
            p.add_argument("--synth-config", type=Path, default=None,
                           help="JSON synth config used instead of --data")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path, default=Path("canguard_out"))

    p_stats = sub.add_parser("stats", help="exploratory statistics exports")
    add_common(p_stats, needs_data=True)

    p_bench = sub.add_parser("benchmark",
                             help="feature-set x model comparison table")
    add_common(p_bench, needs_data=True)
    p_bench.add_argument("--test-fraction", type=float, default=0.30)
    p_bench.add_argument("--feature-sets", nargs="+", default=list(FEATURE_SETS),
                         metavar="SET",
                         help=f"subset of {', '.join(FEATURE_SETS)}")
    p_bench.add_argument("--models", nargs="+", default=list(DEFAULT_MODELS),
                         metavar="MODEL",
                         help=f"subset of {', '.join(sorted(MODEL_FAMILY_FOR_NAME))}")

    p_ens = sub.add_parser("ensemble", help="five-member consensus voting run")
    add_common(p_ens, needs_data=True)
    p_ens.add_argument("--test-fraction", type=float, default=0.30)
    p_ens.add_argument("--weights", choices=["uniform", "validation-f1"],
                       default="uniform")

    p_synth = sub.add_parser("synth", help="write a synthetic dataset")
    p_synth.add_argument("--synth-config", type=Path, default=None,
                         help="JSON synth config (defaults to a built-in one)")
    add_common(p_synth, needs_data=False)

    return parser


def _load_synth_config(path: Path | None) -> SynthConfig | None:
    if path is None:
        return None
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return SynthConfig.from_json_dict(doc)


def _resolve_input(args) -> tuple[Path | None, SynthConfig | None]:
    synth = _load_synth_config(getattr(args, "synth_config", None))
    data_dir = getattr(args, "data", None)
    if data_dir is None and synth is None:
        env = os.environ.get(DATA_DIR_ENV)
        if env:
            data_dir = Path(env)
    if data_dir is None and synth is None:
        raise ConfigError(
            f"no input: pass --data, --synth-config, or set ${DATA_DIR_ENV}"
        )
    if data_dir is not None and synth is not None:
        raise ConfigError("--data and --synth-config are mutually exclusive")
    return data_dir, synth


def _config_from_args(args) -> RunConfig:
    data_dir, synth = _resolve_input(args)
    kwargs: dict = {
        "data_dir": data_dir,
        "synth_config": synth,
        "seed": args.seed,
        "out_dir": args.out,
    }
    if hasattr(args, "test_fraction"):
        kwargs["test_fraction"] = args.test_fraction
    if hasattr(args, "feature_sets"):
        kwargs["feature_sets"] = tuple(fs.upper() for fs in args.feature_sets)
    if hasattr(args, "models"):
        kwargs["model_names"] = tuple(m.lower() for m in args.models)
    if hasattr(args, "weights"):
        kwargs["weights_mode"] = args.weights
    return RunConfig(**kwargs)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            synth = _load_synth_config(args.synth_config) or default_synth_config()
            config = RunConfig(synth_config=synth, seed=args.seed,
                               out_dir=args.out)
            paths = run_synth(config)
            print(f"wrote {len(paths)} files under {args.out}")
            return 0
        config = _config_from_args(args)
        if args.command == "stats":
            artifacts = run_stats(config)
            print(f"wrote {len(artifacts)} artifacts under {config.out_dir}")
        elif args.command == "benchmark":
            result = run_benchmark(config)
            print(f"wrote benchmark with {len(result.cells)} cells "
                  f"under {config.out_dir}")
        elif args.command == "ensemble":
            result = run_ensemble(config)
            print(
                f"ensemble accuracy={result.report.accuracy:.4f} "
                f"f1_macro={result.report.macro_f1:.4f} "
                f"disagreements={result.disagreements}"
            )
        return 0
    except Exception as exc:  # categorized exit codes for scripting
        for types, category, code in _ERROR_CATEGORIES:
            if isinstance(exc, types):
                print(f"canguard: {category}: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    raise SystemExit(main())
