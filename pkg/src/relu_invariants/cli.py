"""Command-line front end.

Exit codes: 0 success, 1 a rank bound or vanishing check failed, 2 bad config
or usage.
"""

from __future__ import annotations

import argparse
import sys
import time

from .presets import get_preset, list_presets
from .report import (
    ConfigError,
    analyze,
    dumps,
    load_config_file,
    parse_config,
    regions_csv,
    report_failed,
    with_overrides,
)

STAGES_FOR = {
    "invariants": ("invariants",),
    "verify": ("invariants", "verify", "transform"),
    "dimension": ("dimension",),
    "transform": ("transform", "verify"),
    "report": ("invariants", "verify", "dimension", "transform"),
    "preset": ("invariants", "verify", "dimension", "transform"),
}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("-c", "--config", metavar="PATH", help="JSON config file")
    src.add_argument("--preset", metavar="NAME", help="use a named preset as the config")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--seed", type=_u64, metavar="U64", help="master seed for parameter samples")
    common.add_argument("--samples", type=_positive, metavar="N", help="number of parameter samples")
    common.add_argument("--coeff-bound", type=_positive, metavar="B", help="sample entries from [-B, B]")
    common.add_argument("--max-minors", type=int, metavar="N", help="cap on materialized minors per constraint")
    common.add_argument("--timing", action="store_true", help="append wall-clock timing to the report")

    parser = argparse.ArgumentParser(
        prog="relu-invariants",
        description="Rank constraints on ReLU network outputs over activation regions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("invariants", parents=[common], help="list the constraint catalog")
    sub.add_parser("verify", parents=[common], help="check every constraint on sampled parameters")
    sub.add_parser("dimension", parents=[common], help="functional dimension via Jacobian rank")
    sub.add_parser("transform", parents=[common], help="carry constraints over to dataset outputs")
    sub.add_parser("report", parents=[common], help="run the full pipeline")
    reg = sub.add_parser("regions", parents=[common], help="CSV scan of activation regions on a 2D slice")
    reg.add_argument("--grid", nargs=2, type=_positive, metavar=("W", "H"), help="grid resolution")
    pre = sub.add_parser("preset", parents=[common], help="run a named preset end to end")
    pre.add_argument("name", nargs="?", help="preset name")
    pre.add_argument("--list", action="store_true", help="list presets and exit")
    return parser


def _load(args):
    name = getattr(args, "name", None) or args.preset
    if name is not None:
        try:
            cfg = parse_config(get_preset(name))
        except KeyError:
            raise ConfigError("preset", f"unknown preset {name!r}; see 'preset --list'") from None
    elif args.config is not None:
        cfg = load_config_file(args.config)
    else:
        raise ConfigError("<args>", "give -c/--config or --preset")
    return with_overrides(cfg, args.seed, args.samples, args.coeff_bound, args.max_minors)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "preset" and args.list:
        width = max(len(n) for n, _ in list_presets())
        _emit("".join(f"{n:<{width}}  {d}\n" for n, d in list_presets()), args.out)
        return EXIT_OK
    if args.command == "preset" and not (args.name or args.preset):
        parser.error("preset needs a NAME (or --list)")
    start = time.perf_counter()
    try:
        cfg = _load(args)
        if args.command == "regions":
            text, count = regions_csv(cfg, tuple(args.grid) if args.grid else None)
            _emit(text, args.out)
            print(f"{count} regions", file=sys.stderr)
            return EXIT_OK
        if args.command == "transform" and cfg.dataset is None:
            raise ConfigError("dataset", "the transform subcommand needs a dataset")
        report = analyze(cfg, STAGES_FOR[args.command])
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    if args.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - start, 3)}
    _emit(dumps(report), args.out)
    if report_failed(report):
        print("verification failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
