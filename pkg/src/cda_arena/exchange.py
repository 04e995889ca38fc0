"""Single-asset limit order book with price-time priority.

Every trader holds at most one resting order; a new submission from the same
trader replaces the old one. An order that crosses the spread executes
immediately against the best resting order on the other side, at the resting
order's price. Quantities are always 1, so an order never walks the book.
"""

from __future__ import annotations

import csv
import enum
import io
from bisect import insort
from dataclasses import dataclass, field
from typing import Iterable, Optional

DEFAULT_MIN_PRICE = 1
DEFAULT_MAX_PRICE = 500


class Side(str, enum.Enum):
    """Which side of the market a trader, assignment or order is on."""

    BUY = "buy"
    SELL = "sell"

    @property
    def order_label(self) -> str:
        return "bid" if self is Side.BUY else "ask"

    @property
    def opposite(self) -> "Side":
        return Side.SELL if self is Side.BUY else Side.BUY

    @classmethod
    def parse(cls, text: str) -> "Side":
        text = text.strip().lower()
        if text in ("buy", "bid", "buyer"):
            return cls.BUY
        if text in ("sell", "ask", "seller"):
            return cls.SELL
        raise ValueError(f"unknown side {text!r}")


class OrderRejected(ValueError):
    """Raised when an order is discarded without touching the book."""


@dataclass(frozen=True)
class Order:
    trader_id: str
    side: Side
    price: int
    quantity: int = 1
    submit_time: float = 0.0


@dataclass(frozen=True)
class Trade:
    time: float
    price: int
    quantity: int
    buyer_id: str
    seller_id: str
    initiating_side: Side


@dataclass(frozen=True)
class LobSnapshot:
    """Anonymized view of the book: aggregate quantity per price level only."""

    time: float
    bid_levels: tuple[tuple[int, int], ...] = ()
    ask_levels: tuple[tuple[int, int], ...] = ()
    last_trade: Optional[Trade] = None
    version: int = 0

    @property
    def best_bid(self) -> Optional[int]:
        return self.bid_levels[0][0] if self.bid_levels else None

    @property
    def best_ask(self) -> Optional[int]:
        return self.ask_levels[0][0] if self.ask_levels else None

    @property
    def spread(self) -> Optional[int]:
        if self.bid_levels and self.ask_levels:
            return self.ask_levels[0][0] - self.bid_levels[0][0]
        return None

    @property
    def mid_price(self) -> Optional[int]:
        # rounded down to a whole tick
        if self.bid_levels and self.ask_levels:
            return (self.ask_levels[0][0] + self.bid_levels[0][0]) // 2
        return None

    def best(self, side: Side) -> Optional[int]:
        return self.best_bid if side is Side.BUY else self.best_ask


EMPTY_SNAPSHOT = LobSnapshot(time=0.0)


@dataclass(frozen=True)
class SubmissionOutcome:
    kind: str  # "rested" | "replaced_and_rested" | "executed"
    trade: Optional[Trade] = None

    @property
    def executed(self) -> bool:
        return self.trade is not None


@dataclass(order=True)
class _Entry:
    sort_key: tuple
    order: Order = field(compare=False)


class OrderBook:
    """Two price-ordered half-books plus the trader -> resting order index."""

    def __init__(self, min_price: int = DEFAULT_MIN_PRICE, max_price: int = DEFAULT_MAX_PRICE,
                 tick_size: int = 1):
        if min_price < 1 or max_price <= min_price:
            raise ValueError("need 1 <= min_price < max_price")
        self.min_price = min_price
        self.max_price = max_price
        self.tick_size = tick_size
        self._bids: list[_Entry] = []
        self._asks: list[_Entry] = []
        self._resting: dict[str, _Entry] = {}
        self._seq = 0
        self.version = 0
        self.last_trade: Optional[Trade] = None

    # -- queries ---------------------------------------------------------
    @property
    def bids(self) -> list[Order]:
        return [e.order for e in self._bids]

    @property
    def asks(self) -> list[Order]:
        return [e.order for e in self._asks]

    @property
    def best_bid(self) -> Optional[int]:
        return self._bids[0].order.price if self._bids else None

    @property
    def best_ask(self) -> Optional[int]:
        return self._asks[0].order.price if self._asks else None

    def resting_order(self, trader_id: str) -> Optional[Order]:
        entry = self._resting.get(trader_id)
        return entry.order if entry is not None else None

    def __len__(self) -> int:
        return len(self._resting)

    # -- mutation --------------------------------------------------------
    def withdraw(self, trader_id: str) -> bool:
        """Remove the trader's resting order, if any. Returns True if one was removed."""
        entry = self._resting.pop(trader_id, None)
        if entry is None:
            return False
        half = self._bids if entry.order.side is Side.BUY else self._asks
        half.remove(entry)
        self.version += 1
        return True

    def submit(self, order: Order, time: Optional[float] = None) -> SubmissionOutcome:
        if order.quantity != 1:
            raise OrderRejected(f"quantity must be 1, got {order.quantity}")
        if not self.min_price <= order.price <= self.max_price:
            raise OrderRejected(
                f"price {order.price} outside [{self.min_price}, {self.max_price}]")
        if order.price % self.tick_size:
            raise OrderRejected(f"price {order.price} is not a multiple of tick {self.tick_size}")
        now = order.submit_time if time is None else time
        replaced = self.withdraw(order.trader_id)
        self.version += 1

        if order.side is Side.BUY:
            if self._asks and order.price >= self._asks[0].order.price:
                resting = self._asks.pop(0).order
                del self._resting[resting.trader_id]
                trade = Trade(now, resting.price, 1, order.trader_id, resting.trader_id, Side.BUY)
                self.last_trade = trade
                return SubmissionOutcome("executed", trade)
            key = (-order.price, now, self._seq)
            half = self._bids
        else:
            if self._bids and order.price <= self._bids[0].order.price:
                resting = self._bids.pop(0).order
                del self._resting[resting.trader_id]
                trade = Trade(now, resting.price, 1, resting.trader_id, order.trader_id, Side.SELL)
                self.last_trade = trade
                return SubmissionOutcome("executed", trade)
            key = (order.price, now, self._seq)
            half = self._asks

        self._seq += 1
        if order.submit_time != now:
            order = Order(order.trader_id, order.side, order.price, order.quantity, now)
        entry = _Entry(key, order)
        insort(half, entry)
        self._resting[order.trader_id] = entry
        return SubmissionOutcome("replaced_and_rested" if replaced else "rested")

    def snapshot(self, time: float) -> LobSnapshot:
        return LobSnapshot(time, _aggregate(self._bids), _aggregate(self._asks),
                           self.last_trade, self.version)


def _aggregate(entries: list[_Entry]) -> tuple[tuple[int, int], ...]:
    levels: list[tuple[int, int]] = []
    for e in entries:
        p = e.order.price
        if levels and levels[-1][0] == p:
            levels[-1] = (p, levels[-1][1] + e.order.quantity)
        else:
            levels.append((p, e.order.quantity))
    return tuple(levels)


def submit_order(order: Order, book: OrderBook, time: float) -> SubmissionOutcome:
    return book.submit(order, time)


def snapshot(book: OrderBook, time: float) -> LobSnapshot:
    return book.snapshot(time)


# -- trade tape CSV --------------------------------------------------------

TAPE_HEADER = ("time", "price", "quantity", "buyer_id", "seller_id", "initiating_side")


def write_tape_csv(trades: Iterable[Trade], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TAPE_HEADER)
    for t in trades:
        w.writerow([repr(float(t.time)), t.price, t.quantity, t.buyer_id, t.seller_id,
                    t.initiating_side.order_label])


def read_tape_csv(fh) -> list[Trade]:
    rows = csv.DictReader(fh)
    if tuple(rows.fieldnames or ()) != TAPE_HEADER:
        raise ValueError(f"unexpected tape header {rows.fieldnames}")
    return [Trade(float(r["time"]), int(r["price"]), int(r["quantity"]), r["buyer_id"],
                  r["seller_id"], Side.parse(r["initiating_side"])) for r in rows]


def tape_to_csv(trades: Iterable[Trade]) -> str:
    buf = io.StringIO()
    write_tape_csv(trades, buf)
    return buf.getvalue()
