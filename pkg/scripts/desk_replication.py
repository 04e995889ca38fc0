#!/usr/bin/env python3
"""Desk-scale replication: every pair, one engine/treatment, then the dominance graph.

Thin wrapper over the CLI so the output layout and manifest are the same.

    python3 scripts/desk_replication.py --out runs/desk --engine sync --p0 static
"""

import argparse
import sys

from cda_arena.cli import run


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", required=True)
    p.add_argument("--engine", choices=("sync", "async"), default="sync")
    p.add_argument("--p0", choices=("static", "dynamic"), default="static")
    p.add_argument("--sessions", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--wall-clock", type=float, default=0.25)
    a = p.parse_args()
    return run(["--all-pairs", "--out", a.out, "--engine", a.engine, "--p0", a.p0,
                "--sessions", str(a.sessions), "--seed", str(a.seed),
                "--workers", str(a.workers), "--wall-clock", str(a.wall_clock), "-v"])


if __name__ == "__main__":
    sys.exit(main())
