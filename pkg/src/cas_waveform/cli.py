"""Command-line entry point: ``cas-waveform <scenario> [options]``."""

import argparse
import sys
from pathlib import Path

from ._validation import InvalidInputError
from .experiments import (
    ConfigError,
    monte_carlo_summary,
    parse_config,
    run_experiment,
    write_csv,
    write_summary_csv,
)

SUBCOMMANDS = {
    "sw-sweep": "sw_sweep",
    "sw-iid": "sw_iid",
    "dw-hmi": "dw_hmi",
    "dw-mgp": "dw_mgp",
    "compare": "dw_compare",
    "oracle2d": "oracle2d",
    "table-alpha": "table_alpha",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="cas-waveform", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, scenario in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {scenario} scenario")
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
        p.add_argument("--out", type=Path, help="CSV output path")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials")
        p.add_argument("--jobs", type=int, help="worker processes")
        p.add_argument("--summary", type=Path, help="also write per-point mean/stderr CSV here")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key (repeatable)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    scenario = SUBCOMMANDS[args.command]
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = value.strip()
        for key in ("seed", "trials", "jobs"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        if args.out is not None:
            overrides["output"] = str(args.out)
        # the subcommand decides the scenario, even over the config file
        overrides["scenario"] = scenario
        spec = parse_config(text, overrides)
        if spec.output_path is None:
            spec.output_path = f"{scenario}.csv"
    except (ConfigError, InvalidInputError, OSError) as exc:
        print(f"cas-waveform: error: {exc}", file=sys.stderr)
        return 2

    rows = run_experiment(spec)
    try:
        write_csv(rows, spec.output_path)
        if args.summary is not None:
            write_summary_csv(monte_carlo_summary(rows), args.summary)
    except (OSError, ValueError) as exc:
        print(f"cas-waveform: error: {exc}", file=sys.stderr)
        return 1
    failed = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows to {spec.output_path}" + (f" ({failed} error rows)" if failed else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
