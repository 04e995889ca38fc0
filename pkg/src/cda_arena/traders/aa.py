"""Adaptive-Aggressive trader.

Three coupled estimators:

* equilibrium price p*: decayed-weight moving average of recent trade prices;
* long-term shape theta: pulled toward a target set by Smith's alpha (relative
  RMS deviation of recent trades from p*), so volatile markets get a flatter
  aggressiveness curve;
* short-term aggressiveness r in [-1, 1]: nudged toward the aggressiveness
  that would have matched each observed trade or improving shout.

r and theta map to a target price tau; the bidding layer then closes a third
of the gap between the current best same-side quote and tau each time.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Optional

from ..exchange import Side
from .base import MarketEvent, Trader


def _curve(x: float, theta: float) -> float:
    """(e^(x*theta) - 1) / (e^theta - 1): a [0,1] -> [0,1] bend controlled by theta."""
    if abs(theta) < 1e-9:
        return x
    return math.expm1(x * theta) / math.expm1(theta)


def _curve_inv(y: float, theta: float) -> float:
    y = min(1.0, max(0.0, y))
    if abs(theta) < 1e-9:
        return y
    return math.log1p(y * math.expm1(theta)) / theta


def target_price(side: Side, r: float, theta: float, p_eq: float, limit: float,
                 max_price: float) -> float:
    """Price an AA trader aims for at aggressiveness r (-1 = passive, +1 = eager)."""
    if side is Side.BUY:
        if limit > p_eq:  # intra-marginal
            if r < 0:
                return p_eq * (1.0 - _curve(-r, theta))
            return p_eq + (limit - p_eq) * _curve(r, theta)
        return limit * (1.0 - _curve(-r, theta)) if r < 0 else limit
    if limit < p_eq:  # intra-marginal seller
        if r < 0:
            return p_eq + (max_price - p_eq) * _curve(-r, theta)
        return p_eq - (p_eq - limit) * _curve(r, theta)
    return limit + (max_price - limit) * _curve(-r, theta) if r < 0 else limit


def aggressiveness_for(side: Side, price: float, theta: float, p_eq: float, limit: float,
                       max_price: float) -> float:
    """Inverse of :func:`target_price`: the r whose target equals ``price``."""
    if side is Side.BUY:
        if limit > p_eq:
            if price >= p_eq:
                return _curve_inv((price - p_eq) / (limit - p_eq), theta)
            return -_curve_inv(1.0 - price / p_eq, theta)
        if price >= limit:
            return 0.0
        return -_curve_inv(1.0 - price / limit, theta)
    if limit < p_eq:
        if price <= p_eq:
            return _curve_inv((p_eq - price) / (p_eq - limit), theta)
        return -_curve_inv((price - p_eq) / (max_price - p_eq), theta)
    if price <= limit:
        return 0.0
    return -_curve_inv((price - limit) / (max_price - limit), theta)


class AA(Trader):
    strategy = "AA"
    learns = True

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        p, rng = self.params, self.rng
        self.short_rate = p.draw("short_rate", rng)
        self.long_rate = p.draw("long_rate", rng)
        self.lambda_rel = p.get("lambda_rel", 0.05)
        self.lambda_abs = p.get("lambda_abs", 0.05)
        self.gamma = p.get("gamma", 2.0)
        self.eta = p.get("offer_change_rate", 3.0)
        self.theta = p.get("theta_init", -2.0)
        self.theta_min = p.get("theta_min", -8.0)
        self.theta_max = p.get("theta_max", 2.0)
        self.initial_margin = p.get("initial_margin", 0.1)
        self.r = p.draw("aggressiveness", rng)
        window = int(p.get("eq_window", 5))
        decay = p.get("eq_decay", 0.95)
        # newest trade gets weight 1, the one before decay, ...
        self.weights = [decay ** (window - 1 - i) for i in range(window)]
        self.trades: deque[int] = deque(maxlen=window)
        self.p_eq: Optional[float] = None
        self.alpha_min: Optional[float] = None
        self.alpha_max: Optional[float] = None
        self.working_limit: Optional[int] = None
        self.best_bid: Optional[int] = None
        self.best_ask: Optional[int] = None

    def on_assignment(self, assignment):
        self.working_limit = assignment.limit_price

    # -- estimators -------------------------------------------------------------
    def update_equilibrium(self, price: int) -> None:
        self.trades.append(price)
        w = self.weights[-len(self.trades):]
        self.p_eq = sum(wi * p for wi, p in zip(w, self.trades)) / sum(w)

    def update_theta(self) -> None:
        alpha = math.sqrt(sum((p - self.p_eq) ** 2 for p in self.trades) / len(self.trades))
        alpha /= self.p_eq
        self.alpha_min = alpha if self.alpha_min is None else min(self.alpha_min, alpha)
        self.alpha_max = alpha if self.alpha_max is None else max(self.alpha_max, alpha)
        if self.alpha_max == self.alpha_min:
            return
        a = (alpha - self.alpha_min) / (self.alpha_max - self.alpha_min)
        span = self.theta_max - self.theta_min
        desired = self.theta_min + span * (1.0 - a * math.exp(self.gamma * (a - 1.0)))
        self.theta += self.long_rate * (desired - self.theta)

    def target(self) -> Optional[float]:
        if self.p_eq is None or self.working_limit is None:
            return None
        return target_price(self.side, self.r, self.theta, self.p_eq, self.working_limit,
                            self.max_price)

    def nudge(self, price: float, more_aggressive: bool) -> None:
        r_shout = aggressiveness_for(self.side, price, self.theta, self.p_eq,
                                     self.working_limit, self.max_price)
        if more_aggressive:
            delta = (1.0 + self.lambda_rel) * r_shout + self.lambda_abs
        else:
            delta = (1.0 - self.lambda_rel) * r_shout - self.lambda_abs
        self.r += self.short_rate * (delta - self.r)
        self.r = max(-1.0, min(1.0, self.r))

    def observe(self, event: MarketEvent) -> None:
        snap = event.snapshot
        prev_bid, prev_ask = self.best_bid, self.best_ask
        self.best_bid, self.best_ask = snap.best_bid, snap.best_ask
        trade = event.trade
        if trade is not None:
            self.update_equilibrium(trade.price)
            self.update_theta()
        if self.working_limit is None or self.p_eq is None:
            return
        tau = self.target()
        if trade is not None:
            if self.side is Side.BUY:
                self.nudge(trade.price, more_aggressive=tau < trade.price)
            else:
                self.nudge(trade.price, more_aggressive=tau > trade.price)
        elif self.side is Side.BUY:
            b = self.best_bid
            if b is not None and (prev_bid is None or b > prev_bid) and tau <= b:
                self.nudge(b, more_aggressive=True)
        else:
            a = self.best_ask
            if a is not None and (prev_ask is None or a < prev_ask) and tau >= a:
                self.nudge(a, more_aggressive=True)

    # -- bidding layer -----------------------------------------------------------
    def propose(self, snapshot, time, remaining):
        limit = self.assignment.limit_price
        o_bid = snapshot.best_bid
        o_ask = snapshot.best_ask
        if self.side is Side.BUY:
            if o_bid is not None and limit <= o_bid:
                return None
            tau = self.target()
            if tau is None:
                return self.clamp(limit * (1.0 - self.initial_margin))
            if o_ask is not None and o_ask <= tau:
                return self.clamp(o_ask)
            base = o_bid if o_bid is not None else self.min_price
            return self.clamp(base + (tau - base) / self.eta)
        if o_ask is not None and limit >= o_ask:
            return None
        tau = self.target()
        if tau is None:
            return self.clamp(limit * (1.0 + self.initial_margin))
        if o_bid is not None and o_bid >= tau:
            return self.clamp(o_bid)
        base = o_ask if o_ask is not None else self.max_price
        return self.clamp(base - (base - tau) / self.eta)
