from __future__ import annotations

import random
from dataclasses import dataclass
from typing import ClassVar, Optional

from ..exchange import DEFAULT_MAX_PRICE, DEFAULT_MIN_PRICE, LobSnapshot, Side, Trade
from ..schedules import Assignment
from .params import StrategyParams


class AccountingFault(RuntimeError):
    """A fill arrived for a trader with no live assignment."""


class LimitViolation(RuntimeError):
    """A strategy produced a quote on the wrong side of its limit price."""


@dataclass(frozen=True)
class MarketEvent:
    time: float
    kind: str  # "lob_update" | "trade"
    snapshot: LobSnapshot

    @property
    def trade(self) -> Optional[Trade]:
        return self.snapshot.last_trade if self.kind == "trade" else None


def within_limit(side: Side, price: int, limit: int) -> bool:
    return price <= limit if side is Side.BUY else price >= limit


class Trader:
    """Common trader contract.

    Subclasses override :meth:`propose` (the quoting rule) and optionally
    :meth:`observe` (learning). :meth:`quote` wraps ``propose`` and enforces
    the limit constraint, so a faulty strategy fails loudly instead of
    losing money.
    """

    strategy: ClassVar[str] = "BASE"
    learns: ClassVar[bool] = False

    def __init__(self, trader_id: str, side: Side, params: Optional[StrategyParams] = None,
                 rng: Optional[random.Random] = None,
                 bounds: tuple[int, int] = (DEFAULT_MIN_PRICE, DEFAULT_MAX_PRICE)):
        self.trader_id = trader_id
        self.side = side
        self.params = params or StrategyParams(self.strategy)
        self.rng = rng or random.Random(0)
        self.min_price, self.max_price = bounds
        self.assignment: Optional[Assignment] = None
        self.balance = 0
        self.n_trades = 0
        self.last_quote: Optional[int] = None

    # -- assignment lifecycle ------------------------------------------------
    def assign(self, assignment: Assignment) -> None:
        if assignment.side is not self.side:
            raise ValueError(f"{self.trader_id} is a {self.side.value}er, got a "
                             f"{assignment.side.value} assignment")
        self.assignment = assignment
        self.last_quote = None
        self.on_assignment(assignment)

    def on_assignment(self, assignment: Assignment) -> None:
        pass

    def record_fill(self, trade: Trade) -> int:
        if self.assignment is None:
            raise AccountingFault(f"{self.trader_id} filled at {trade.price} without an assignment")
        profit = abs(self.assignment.limit_price - trade.price)
        self.balance += profit
        self.n_trades += 1
        self.assignment = None
        self.last_quote = None
        return profit

    # -- quoting ----------------------------------------------------------------
    @property
    def limit(self) -> Optional[int]:
        return self.assignment.limit_price if self.assignment is not None else None

    def quote(self, snapshot: LobSnapshot, time: float = 0.0,
              remaining: float = 0.0) -> Optional[int]:
        if self.assignment is None:
            return None
        price = self.propose(snapshot, time, remaining)
        if price is None:
            return None
        price = int(price)
        if not within_limit(self.side, price, self.assignment.limit_price):
            raise LimitViolation(f"{self.strategy} {self.trader_id} quoted {price} against "
                                 f"limit {self.assignment.limit_price}")
        self.last_quote = price
        return price

    def propose(self, snapshot: LobSnapshot, time: float, remaining: float) -> Optional[int]:
        raise NotImplementedError

    def observe(self, event: MarketEvent) -> None:
        pass

    def clamp(self, price: float) -> int:
        """Round toward the safe side of the limit and keep within system bounds."""
        limit = self.assignment.limit_price
        price = round(price, 9)  # so 100 * 1.1 is 110, not 111 after the ceiling
        p = int(price)
        if self.side is Side.BUY:
            p = min(p, limit)
        else:
            p = max(p if p == price else p + 1, limit)
        return max(self.min_price, min(self.max_price, p))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.trader_id!r}, {self.side.value}, balance={self.balance})"
