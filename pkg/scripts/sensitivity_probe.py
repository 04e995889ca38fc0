#!/usr/bin/env python3
"""Win share of one strategy over another across session timings and feed modes.

Used to check whether a contest outcome depends on session length, poll rate or
how assignments are fed in. Prints one line per setting.

    python3 scripts/sensitivity_probe.py --pair AA:ZIP
"""

import argparse
import itertools
import time

from cda_arena import experiments as ex
from cda_arena.schedules import Replenish


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--pair", default="AA:ZIP")
    p.add_argument("--sessions", type=int, default=20)
    p.add_argument("--ratios", default="5:15,10:10,15:5")
    p.add_argument("--timings", default="30/1,30/3,60/2,180/1",
                   help="duration/polls-per-second list")
    p.add_argument("--modes", default="drip_stochastic",
                   help="comma list of replenish modes")
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    sa, sb = a.pair.split(":")
    ratios = tuple(tuple(int(x) for x in r.split(":")) for r in a.ratios.split(","))
    timings = [tuple(float(x) for x in t.split("/")) for t in a.timings.split(",")]
    for (dur, pps), mode in itertools.product(timings, a.modes.split(",")):
        t0 = time.perf_counter()
        tmpl = ex.SessionTemplate(duration=dur, polls_per_second=pps, replenish=Replenish(mode))
        res = ex.run_contest(ex.ContestSpec(sa, sb, ratios=ratios, sessions_per_ratio=a.sessions,
                                            base_seed=a.seed, session=tmpl))
        print(f"{a.pair} {mode:16s} {dur:5.0f}s {pps:4.1f}/s  {res.wins_a:4d}-{res.wins_b:<4d} "
              f"share={res.win_share_a:.3f}  ({time.perf_counter() - t0:.0f}s)", flush=True)


if __name__ == "__main__":
    main()
