"""Command-line interface.

    driftbench run --config cfg.json [--method HT]... [--seed 3]...
    driftbench report runs/desk/desk_summary.csv
    driftbench synth --spec spec.json --out fixtures/ [--seed 0]

Exit codes: 0 success, 1 I/O or data-format failure (e.g. missing
dataset file), 2 usage or configuration error (e.g. unknown method id).
"""

import argparse
import json
import os
import sys

import numpy as np

from ..errors import ConfigError, FormatError
from .config import METHOD_IDS, load_config
from .report import format_report, load_summary
from .runners import run_benchmark
from .synth import SyntheticSpec, make_synthetic_stream


def build_parser():
    parser = argparse.ArgumentParser(
        prog="driftbench",
        description="Streaming image classification benchmark (HT / ARF / RBC / DBC).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a benchmark config")
    p_run.add_argument("--config", required=True, help="path to a JSON config")
    p_run.add_argument(
        "--method",
        action="append",
        default=None,
        metavar="ID",
        help=f"restrict to a method ({'/'.join(METHOD_IDS)}); repeatable",
    )
    p_run.add_argument(
        "--seed", action="append", default=None, type=int, help="override config seeds; repeatable"
    )
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="print the comparison table for a summary CSV")
    p_rep.add_argument("summary", help="path to a summary CSV")
    p_rep.set_defaults(func=cmd_report)

    p_syn = sub.add_parser("synth", help="generate a synthetic dataset file")
    p_syn.add_argument("--spec", required=True, help="path to a JSON SyntheticSpec")
    p_syn.add_argument("--out", required=True, help="output directory")
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.set_defaults(func=cmd_synth)
    return parser


def cmd_run(parser, args):
    if args.method:
        bad = [m for m in args.method if m.upper() not in METHOD_IDS]
        if bad:
            parser.error(f"unknown method id(s): {', '.join(bad)}")
    cfg = load_config(args.config)
    summary_path, rows = run_benchmark(cfg, methods=args.method, seeds=args.seed)
    print(f"wrote {summary_path}")
    print(format_report(rows))
    return 0


def cmd_report(parser, args):
    rows = load_summary(args.summary)
    print(format_report(rows))
    return 0


def cmd_synth(parser, args):
    with open(args.spec) as fh:
        spec = SyntheticSpec.from_dict(json.load(fh))
    dataset = make_synthetic_stream(spec, args.seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "synthetic.npz")
    np.savez(
        path,
        images=dataset.images,
        labels=dataset.labels,
        num_classes=np.int64(dataset.num_classes),
    )
    print(f"wrote {path} ({len(dataset)} examples, {dataset.num_classes} classes)")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except ConfigError as err:
        print(f"driftbench: {err}", file=sys.stderr)
        return 2
    except (FormatError, OSError, ValueError) as err:
        print(f"driftbench: {err}", file=sys.stderr)
        return 1


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
