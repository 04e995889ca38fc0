#!/usr/bin/env python3
"""Race check: a SHVR clone with injected delay against an undelayed one.

Counts same-side reactions to the same book snapshot and reports how often the
delayed trader's order reached the exchange first.
"""

import argparse

from cda_arena.experiments import run_race_study


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sessions", type=int, default=100)
    p.add_argument("--delay", type=float, default=0.05)
    p.add_argument("--wall-clock", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    t = run_race_study(sessions=a.sessions, delay=a.delay, wall_clock=a.wall_clock,
                       base_seed=a.seed)
    print(f"sessions={t.sessions} races={t.opportunities} slow_first={t.slow_first} "
          f"share={t.slow_share:.3f}")


if __name__ == "__main__":
    main()
