"""GD-eXtended: a Gjerstad-Dickhaut belief function fed into a finite-horizon DP.

The belief q(p) estimates the chance that a quote at price p is accepted. It is
computed from a memory of recent trade prices plus the outstanding bids and
asks on the current book, evaluated at every observed price and linearly
interpolated in between. The quote then maximizes expected discounted surplus
over the remaining quoting opportunities.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Optional, Sequence

import numpy as np

from ..exchange import LobSnapshot, Side
from .base import MarketEvent, Trader


def belief_curve(side: Side, prices: np.ndarray, trades: Sequence[int],
                 bids: Sequence[tuple[int, int]], asks: Sequence[tuple[int, int]],
                 bounds: tuple[int, int]) -> Optional[np.ndarray]:
    """Acceptance belief at each price in ``prices`` (ascending), or None with no data.

    Seller, ask a:  (TA>=a + B>=a) / (TA>=a + B>=a + RA<=a)
    Buyer,  bid b:  (TB<=b + A<=b) / (TB<=b + A<=b + RB>=b)
    where T are remembered trade prices, A/B the resting asks/bids (by
    quantity) and R the resting same-side quotes, which count as not yet
    accepted.
    """
    if not trades and not bids and not asks:
        return None
    tp = np.asarray(trades, dtype=float)
    bp = np.asarray([p for p, _ in bids], dtype=float)
    bq = np.asarray([q for _, q in bids], dtype=float)
    ap = np.asarray([p for p, _ in asks], dtype=float)
    aq = np.asarray([q for _, q in asks], dtype=float)
    points = np.unique(np.concatenate([tp, bp, ap]))

    x = points[:, None]
    if side is Side.SELL:
        good = (tp[None, :] >= x).sum(1) + (bq[None, :] * (bp[None, :] >= x)).sum(1)
        bad = (aq[None, :] * (ap[None, :] <= x)).sum(1)
        lo_anchor, hi_anchor = 1.0, 0.0
    else:
        good = (tp[None, :] <= x).sum(1) + (aq[None, :] * (ap[None, :] <= x)).sum(1)
        bad = (bq[None, :] * (bp[None, :] >= x)).sum(1)
        lo_anchor, hi_anchor = 0.0, 1.0
    total = good + bad
    q = np.where(total > 0, good / np.maximum(total, 1), 0.0)

    xs, ys = list(points), list(q)
    if xs[0] > bounds[0]:
        xs.insert(0, float(bounds[0]))
        ys.insert(0, lo_anchor)
    if xs[-1] < bounds[1]:
        xs.append(float(bounds[1]))
        ys.append(hi_anchor)
    return np.interp(prices, xs, ys)


def dp_values(belief: np.ndarray, surplus: np.ndarray, horizon: int,
              discount: float) -> np.ndarray:
    """V[0..horizon] for holding one unit with n quoting chances left.

    V[n] = max_p  q(p) * s(p) + (1 - q(p)) * discount * V[n-1],   V[0] = 0.
    """
    v = np.zeros(horizon + 1)
    for n in range(1, horizon + 1):
        v[n] = np.max(belief * surplus + (1.0 - belief) * discount * v[n - 1])
    return v


def dp_quote(belief: np.ndarray, surplus: np.ndarray, horizon: int,
             discount: float) -> tuple[float, int]:
    """(value, index of the best price) for the first of ``horizon`` chances."""
    v = dp_values(belief, surplus, horizon - 1, discount) if horizon > 1 else np.zeros(1)
    cont = discount * v[-1] if horizon > 1 else 0.0
    objective = belief * surplus + (1.0 - belief) * cont
    best = int(np.argmax(objective))
    return float(objective[best]), best


class GDX(Trader):
    strategy = "GDX"
    learns = True

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.discount = self.params.get("discount", 0.9)
        self.max_horizon = int(self.params.get("max_horizon", 20))
        self.trades: deque[int] = deque(maxlen=int(self.params.get("memory", 20)))
        self.snapshot: Optional[LobSnapshot] = None
        self.last_poll: Optional[float] = None
        self.poll_gap: Optional[float] = None

    def observe(self, event: MarketEvent) -> None:
        if event.trade is not None:
            self.trades.append(event.trade.price)
        self.snapshot = event.snapshot

    def horizon(self, time: float, remaining: float) -> int:
        if self.last_poll is not None and time > self.last_poll:
            gap = time - self.last_poll
            self.poll_gap = gap if self.poll_gap is None else 0.8 * self.poll_gap + 0.2 * gap
        self.last_poll = time
        if not self.poll_gap or remaining <= 0:
            return self.max_horizon if remaining > 0 else 1
        return max(1, min(self.max_horizon, int(math.ceil(remaining / self.poll_gap))))

    def propose(self, snapshot, time, remaining):
        n = self.horizon(time, remaining)
        limit = self.assignment.limit_price
        snap = snapshot if snapshot is not None else self.snapshot
        bids = snap.bid_levels if snap is not None else ()
        asks = snap.ask_levels if snap is not None else ()
        if self.side is Side.BUY:
            prices = np.arange(self.min_price, limit + 1, dtype=float)
            surplus = limit - prices
        else:
            prices = np.arange(limit, self.max_price + 1, dtype=float)
            surplus = prices - limit
        belief = belief_curve(self.side, prices, list(self.trades), bids, asks,
                              (self.min_price, self.max_price))
        if belief is None:
            return limit
        value, idx = dp_quote(belief, surplus, n, self.discount)
        if value <= 0.0:
            return limit
        return int(prices[idx])
