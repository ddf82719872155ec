"""Command-line entry point: run, compare and validate subcommands."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

from . import engine
from .config_io import (ConfigFileError, dumps_config, load_config,
                        parse_protocol)
from .csv_io import write_comparison_csv, write_metrics_csv
from .model import ConfigError, Protocol, SimConfig, clone_config

PROTOCOL_ORDER = (Protocol.MULTIHOP, Protocol.ATTEMPT, Protocol.M_ATTEMPT)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


@dataclass
class RunRequest:
    """Parsed invocation: which config, what to override, where to write."""

    config_path: str
    protocol: Protocol | None
    rounds: int | None
    seeds: list
    output_path: str

    @classmethod
    def from_args(cls, args, default_out):
        seeds = args.seed if args.seed is not None else []
        return cls(config_path=args.config,
                   protocol=(parse_protocol(args.protocol)
                             if args.protocol is not None else None),
                   rounds=args.rounds,
                   seeds=seeds,
                   output_path=getattr(args, "out", default_out))

    def resolve_config(self) -> SimConfig:
        if self.config_path == "defaults":
            cfg = SimConfig()
        else:
            cfg = load_config(self.config_path)
        overrides = {}
        if self.protocol is not None:
            overrides["protocol"] = self.protocol
        if self.rounds is not None:
            overrides["rounds"] = self.rounds
        if len(self.seeds) == 1:
            overrides["seed"] = self.seeds[0]
        return clone_config(cfg, **overrides) if overrides else cfg


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _seed_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wbansim",
                     description="Body area network routing simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default="defaults",
                       help="config file path, or 'defaults'")
        p.add_argument("--protocol", default=None,
                       help="multihop | attempt | m-attempt")
        p.add_argument("--rounds", type=int, default=None)
        p.add_argument("--seed", type=_seed_list, default=None,
                       help="seed or comma-separated seed list")

    p_run = sub.add_parser("run", help="single simulation run")
    common(p_run)
    p_run.add_argument("--out", default="run.csv", help="metrics CSV path")

    p_cmp = sub.add_parser("compare",
                           help="run all three protocols over a seed set")
    common(p_cmp)
    p_cmp.add_argument("--out", default="compare_out",
                       help="output directory")

    p_val = sub.add_parser("validate", help="check a config and exit")
    common(p_val)
    p_val.add_argument("--dump", action="store_true",
                       help="print the resolved config")
    return parser


def cmd_run(args) -> int:
    request = RunRequest.from_args(args, "run.csv")
    if len(request.seeds) > 1:
        print("run takes a single seed; use compare for seed sets",
              file=sys.stderr)
        return EXIT_CONFIG
    cfg = request.resolve_config()
    rows, summary = engine.run(cfg)
    write_metrics_csv(rows, summary, request.output_path)
    print(f"{summary.protocol}: stability={summary.stability_period} "
          f"lifetime={summary.lifetime} pdr={summary.final_pdr:.4f} "
          f"-> {request.output_path}")
    return EXIT_OK


def compare_runs(cfg: SimConfig, seeds: list, out_dir: str):
    """Run every protocol over the seed set; one CSV per run plus the
    merged comparison CSV. Returns the summary list."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    summaries = []
    for protocol in PROTOCOL_ORDER:
        for seed in seeds:
            run_cfg = clone_config(cfg, protocol=protocol, seed=seed)
            rows, summary = engine.run(run_cfg)
            name = f"{protocol.value}-seed{seed}.csv"
            write_metrics_csv(rows, summary, os.path.join(out_dir, name))
            entries.append((protocol.value, seed, rows))
            summaries.append(summary)
    write_comparison_csv(entries, os.path.join(out_dir, "comparison.csv"))
    return summaries


def cmd_compare(args) -> int:
    request = RunRequest.from_args(args, "compare_out")
    cfg = request.resolve_config()
    seeds = request.seeds or [cfg.seed]
    summaries = compare_runs(cfg, seeds, request.output_path)
    for s in summaries:
        print(f"{s.protocol}: stability={s.stability_period} "
              f"lifetime={s.lifetime} pdr={s.final_pdr:.4f}")
    print(f"comparison written to {request.output_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = RunRequest.from_args(args, "").resolve_config()
    if args.dump:
        print(dumps_config(cfg), end="")
    else:
        print("config ok")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "compare":
            return cmd_compare(args)
        return cmd_validate(args)
    except (ConfigError, ConfigFileError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
