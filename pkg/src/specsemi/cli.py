"""Command-line entry point: specsemi <kernel|evolve|maximal|verify>."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .core import NumericalConsistencyError, SequenceData
from .reports import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    ConfigError,
    cmd_evolve,
    cmd_kernel,
    cmd_maximal,
    cmd_verify,
    load_config,
)


def _apply_thread_cap():
    cap = os.environ.get("SPECSEMI_THREADS")
    if not cap:
        return
    try:
        limit = int(cap)
    except ValueError:
        return
    # numpy/scipy pick these up at BLAS dispatch time
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(limit))


def _read_sequence_csv(path: str) -> SequenceData:
    rows = Path(path).read_text().strip().splitlines()
    start = 1 if rows and rows[0].lower().replace(" ", "").startswith("n,") else 0
    support, values = [], []
    for line in rows[start:]:
        n_str, v_str = line.split(",")[:2]
        support.append(int(n_str))
        values.append(float(v_str))
    return SequenceData(support=np.asarray(support), values=np.asarray(values))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specsemi",
        description="Discrete diffusion semigroup tables, evolutions and verification reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")

    add_common(sub.add_parser("kernel", help="write kernel tables as CSV"))

    sp = sub.add_parser("evolve", help="evolve an initial sequence by both routes")
    add_common(sp)
    sp.add_argument("--f", default=None, help="CSV file with columns n,value")

    sp = sub.add_parser("maximal", help="write the maximal function of a sequence")
    add_common(sp)
    sp.add_argument("--f", default=None, help="CSV file with columns n,value")

    sp = sub.add_parser("verify", help="run a verification suite")
    add_common(sp)
    sp.add_argument(
        "--suite", required=True,
        choices=["proposition1", "lemma1", "lemma2", "stencil", "maximal"],
    )
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seq = None
        if getattr(args, "f", None):
            seq = _read_sequence_csv(args.f)
        if args.command == "kernel":
            return cmd_kernel(cfg, args.out)
        if args.command == "evolve":
            return cmd_evolve(cfg, args.out, f=seq)
        if args.command == "maximal":
            return cmd_maximal(cfg, args.out, f=seq)
        return cmd_verify(cfg, args.suite, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalConsistencyError as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
