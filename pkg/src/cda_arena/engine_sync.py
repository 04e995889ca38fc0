"""Sequential-synchronous engine: one trader acts per time slice.

The clock only moves in whole slices, and a trader's response always costs
exactly one slice no matter how long the strategy took to compute it. Book
changes are broadcast to every learning trader before the next slice, at no
simulated cost.
"""

from __future__ import annotations

import random
import time as _time

from .session import (ConfigError, Market, SessionConfig, SessionResult, build_timeline,
                      build_traders, derive_seed)
from .traders import MarketEvent


def run_session_sync(config: SessionConfig) -> SessionResult:
    if config.engine != "sync":
        raise ConfigError(f"sync engine given an {config.engine!r} config")
    config.validate()
    started = _time.perf_counter()
    schedule = config.resolved_schedule()
    market = Market(config, schedule)
    traders = build_traders(config)
    learners = [t for t in traders.values() if t.learns]
    timeline = build_timeline(config, schedule)
    poll_rng = random.Random(derive_seed(config.rng_seed, "poll"))

    n = len(traders)
    slice_len = config.resolved_slice()
    n_slices = int(round(config.duration / slice_len))
    roster = list(traders.values())
    snap = market.book.snapshot(0.0)
    next_a = 0

    def publish(now, trade=None):
        s = market.book.snapshot(now)
        event = MarketEvent(now, "trade" if trade is not None else "lob_update", s)
        for lt in learners:
            lt.observe(event)
        return s

    for k in range(n_slices):
        now = k * slice_len
        while next_a < len(timeline) and timeline[next_a].issue_time <= now:
            a = timeline[next_a]
            next_a += 1
            traders[a.trader_id].assign(a)
            if market.issue(a):
                snap = publish(now)
        pos = k % n
        if pos == 0:
            poll_rng.shuffle(roster)
        trader = roster[pos]
        price = trader.quote(snap, now, config.duration - now)
        if price is None:
            continue
        changed, trade = market.process(trader.trader_id, price, now)
        if trade is not None:
            traders[trade.buyer_id].record_fill(trade)
            traders[trade.seller_id].record_fill(trade)
        if changed:
            snap = publish(now, trade)

    return market.result(config, _time.perf_counter() - started, "sync")
