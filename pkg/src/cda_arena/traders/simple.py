"""The three non-adaptive strategies: Giveaway, Shaver and ZI-C."""

from __future__ import annotations

import random
from typing import Optional

from ..exchange import DEFAULT_MAX_PRICE, DEFAULT_MIN_PRICE, LobSnapshot, Side
from ..schedules import Assignment
from .base import Trader


def gvwy_quote(assignment: Assignment) -> int:
    return assignment.limit_price


def shvr_quote(assignment: Assignment, snapshot: LobSnapshot,
               bounds: tuple[int, int] = (DEFAULT_MIN_PRICE, DEFAULT_MAX_PRICE),
               tick: int = 1) -> Optional[int]:
    """Improve the same-side best price by one tick, or do nothing.

    With nothing to shave, a buyer opens at min_price + 1 and a seller at
    max_price - 1, pulled back to the limit if that would cross it.
    """
    limit = assignment.limit_price
    if assignment.side is Side.BUY:
        best = snapshot.best_bid
        if best is None:
            return min(bounds[0] + tick, limit)
        shaved = best + tick
        return shaved if shaved <= limit else None
    best = snapshot.best_ask
    if best is None:
        return max(bounds[1] - tick, limit)
    shaved = best - tick
    return shaved if shaved >= limit else None


def zic_quote(assignment: Assignment, rng: random.Random,
              bounds: tuple[int, int] = (DEFAULT_MIN_PRICE, DEFAULT_MAX_PRICE)) -> int:
    limit = assignment.limit_price
    if assignment.side is Side.BUY:
        return rng.randint(bounds[0], limit)
    return rng.randint(limit, bounds[1])


class Giveaway(Trader):
    strategy = "GVWY"

    def propose(self, snapshot, time, remaining):
        return gvwy_quote(self.assignment)


class Shaver(Trader):
    strategy = "SHVR"

    def propose(self, snapshot, time, remaining):
        return shvr_quote(self.assignment, snapshot, (self.min_price, self.max_price))


class ZIC(Trader):
    strategy = "ZIC"

    def propose(self, snapshot, time, remaining):
        return zic_quote(self.assignment, self.rng, (self.min_price, self.max_price))
