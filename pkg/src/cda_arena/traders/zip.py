"""Zero-Intelligence-Plus: an adaptive profit margin driven by Widrow-Hoff updates."""

from __future__ import annotations

from typing import Optional

from ..exchange import Side
from .base import MarketEvent, Trader


class ZIP(Trader):
    strategy = "ZIP"
    learns = True

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        p, rng = self.params, self.rng
        self.beta = p.draw("beta", rng)
        self.momentum = p.draw("momentum", rng)
        self.ca = p.draw("ca", rng)
        self.cr = p.draw("cr", rng)
        m = p.draw("margin", rng)
        # buyers keep a margin in [-1, 0], sellers a margin >= 0
        self.margin = -m if self.side is Side.BUY else m
        self.prev_change = 0.0
        self.working_limit: Optional[int] = None
        self.price: Optional[int] = None
        self.prev_best_bid: Optional[int] = None
        self.prev_best_ask: Optional[int] = None

    def on_assignment(self, assignment):
        self.working_limit = assignment.limit_price
        self.price = self._price_from_margin()

    def _price_from_margin(self) -> int:
        return int(self.working_limit * (1.0 + self.margin))

    def propose(self, snapshot, time, remaining):
        self.price = self._price_from_margin()
        return self.clamp(self.price)

    # -- learning ---------------------------------------------------------------
    def target_up(self, price: float) -> int:
        abs_shift = self.ca * self.rng.random()
        rel = price * (1.0 + self.cr * self.rng.random())
        return int(round(rel + abs_shift))

    def target_down(self, price: float) -> int:
        abs_shift = self.ca * self.rng.random()
        rel = price * (1.0 - self.cr * self.rng.random())
        return int(round(rel - abs_shift))

    def profit_alter(self, target: float) -> None:
        diff = target - self.price
        change = (1.0 - self.momentum) * self.beta * diff + self.momentum * self.prev_change
        self.prev_change = change
        # measured from the unrounded price so a zero step leaves the margin untouched
        new_margin = self.margin + change / self.working_limit
        if self.side is Side.BUY:
            if new_margin < 0.0:
                self.margin = new_margin
        elif new_margin > 0.0:
            self.margin = new_margin
        self.price = int(round(self.working_limit * (1.0 + self.margin)))
        if self.side is Side.BUY:
            self.price = min(self.price, self.working_limit)
        else:
            self.price = max(self.price, self.working_limit)

    def observe(self, event: MarketEvent) -> None:
        snap = event.snapshot
        best_bid, best_ask = snap.best_bid, snap.best_ask
        trade = event.trade
        bid_improved = (best_bid is not None and self.prev_best_bid is not None
                        and best_bid > self.prev_best_bid)
        ask_improved = (best_ask is not None and self.prev_best_ask is not None
                        and best_ask < self.prev_best_ask)
        bid_hit = trade is not None and trade.initiating_side is Side.SELL
        ask_lifted = trade is not None and trade.initiating_side is Side.BUY
        self.prev_best_bid, self.prev_best_ask = best_bid, best_ask
        if self.working_limit is None:
            return
        if self.price is None:
            self.price = self._price_from_margin()
        active = self.assignment is not None

        if self.side is Side.SELL:
            if trade is not None:
                if self.price <= trade.price:
                    self.profit_alter(self.target_up(trade.price))
                elif ask_lifted and active:
                    # would not have got this deal at the current price
                    self.profit_alter(self.target_down(trade.price))
            elif ask_improved and self.price > best_ask:
                target = (self.target_up(best_bid) if best_bid is not None
                          else self.max_price)
                self.profit_alter(target)
        else:
            if trade is not None:
                if self.price >= trade.price:
                    self.profit_alter(self.target_down(trade.price))
                elif bid_hit and active:
                    self.profit_alter(self.target_up(trade.price))
            elif bid_improved and self.price < best_bid:
                target = (self.target_down(best_ask) if best_ask is not None
                          else self.min_price)
                self.profit_alter(target)
