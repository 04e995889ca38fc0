#!/usr/bin/env python3
"""Snapshot-to-order latency per strategy in the threaded engine.

Writes the raw latency log as CSV and prints median / p90 per strategy (ms).
"""

import argparse
import csv
import statistics
from pathlib import Path

from cda_arena.engine_async import AsyncSessionConfig, run_session_async
from cda_arena.session import derive_seed, make_population
from cda_arena.traders import STRATEGIES


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sessions", type=int, default=20)
    p.add_argument("--per-side", type=int, default=2, help="traders per strategy per side")
    p.add_argument("--wall-clock", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/latency.csv")
    a = p.parse_args()

    pop = make_population([(s, s, a.per_side) for s in STRATEGIES])
    rows, lat = [], {s: [] for s in STRATEGIES}
    for i in range(a.sessions):
        cfg = AsyncSessionConfig(pop, rng_seed=derive_seed(a.seed, "latency", i),
                                 wall_clock_duration=a.wall_clock, treatment="dynamic")
        res = run_session_async(cfg)
        for r in res.latency_log:
            lat[r.strategy].append(r.latency)
            rows.append((i, r.trader_id, r.strategy, r.snapshot_version, r.snapshot_time,
                         r.order_arrival_time))
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("session", "trader_id", "strategy", "snapshot_version", "snapshot_time",
                    "order_arrival_time"))
        w.writerows(rows)
    print(f"{'strategy':8s} {'n':>7s} {'median':>8s} {'p90':>8s}")
    for s, v in sorted(lat.items(), key=lambda kv: -statistics.median(kv[1] or [0])):
        if v:
            p90 = statistics.quantiles(v, n=10)[-1] if len(v) > 1 else v[0]
            print(f"{s:8s} {len(v):7d} {statistics.median(v) * 1e3:8.3f} {p90 * 1e3:8.3f}")


if __name__ == "__main__":
    main()
