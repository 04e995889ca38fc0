"""Parallel-asynchronous engine: one thread per trader, one exchange consumer.

Traders loop on their own threads: wait for news in a coalescing mailbox,
compute a quote against the newest snapshot, push it onto the shared
submission queue. The exchange (the calling thread) drains that queue in
arrival order, stamps each order from a single monotonic clock, mutates the
book and publishes the new snapshot to every mailbox. Slow strategies are
simply late; nothing waits for them.
"""

from __future__ import annotations

import logging
import queue
import sys
import threading
import time as _time
import traceback
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .exchange import LobSnapshot
from .schedules import Assignment
from .session import (ConfigError, LatencyRecord, Market, SessionConfig, SessionResult,
                      build_timeline, build_traders)
from .traders import MarketEvent, Trader

log = logging.getLogger(__name__)


@dataclass
class AsyncSessionConfig(SessionConfig):
    wall_clock_duration: float = 10.0
    snapshot_delivery: int = 64  # mailbox capacity for queued market events
    idle_poll: float = 0.01  # how often an idle trader checks for session end
    injected_latency: dict = field(default_factory=dict)  # trader_id or strategy -> seconds
    switch_interval: Optional[float] = None
    engine: str = "async"

    @property
    def session_length(self) -> float:
        return self.wall_clock_duration

    def validate(self) -> None:
        super().validate()
        if self.wall_clock_duration <= 0:
            raise ConfigError("wall_clock_duration must be positive")
        if self.snapshot_delivery < 1:
            raise ConfigError("snapshot_delivery must be >= 1")
        if any(v < 0 for v in self.injected_latency.values()):
            raise ConfigError("injected latency must be non-negative")

    def latency_for(self, trader_id: str, strategy: str) -> float:
        return float(self.injected_latency.get(trader_id, self.injected_latency.get(strategy, 0.0)))

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(duration=None, wall_clock_duration=self.wall_clock_duration,
                 snapshot_delivery=self.snapshot_delivery, idle_poll=self.idle_poll,
                 injected_latency=dict(sorted(self.injected_latency.items())),
                 switch_interval=self.switch_interval)
        return d


@dataclass(frozen=True)
class Submission:
    trader_id: str
    price: int
    assignment_id: str
    snapshot_version: int
    snapshot_time: float
    fresh: bool  # first reaction to this snapshot, so it counts as a latency sample


class Mailbox:
    """Single-producer single-consumer inbox.

    Holds the newest snapshot (older ones are overwritten), a bounded queue of
    market events for learners (runs of book updates coalesce, trades are kept
    while there is room) and an unbounded FIFO of private assign/fill notes.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.cond = threading.Condition()
        self.snapshot: Optional[LobSnapshot] = None
        self.published_at = 0.0
        self.events: deque[MarketEvent] = deque()
        self.private: deque[tuple[str, object]] = deque()
        self.dirty = False
        self.dropped = 0

    def publish(self, snap: LobSnapshot, event: Optional[MarketEvent], at: float) -> None:
        with self.cond:
            self.snapshot = snap
            self.published_at = at
            if event is not None:
                if event.kind == "lob_update" and self.events and self.events[-1].kind == "lob_update":
                    self.events[-1] = event
                else:
                    self.events.append(event)
                while len(self.events) > self.capacity:
                    self._drop_one()
            self.dirty = True
            self.cond.notify()

    def _drop_one(self) -> None:
        for i, ev in enumerate(self.events):
            if ev.kind == "lob_update":
                del self.events[i]
                break
        else:
            self.events.popleft()
        self.dropped += 1

    def send(self, kind: str, payload) -> None:
        with self.cond:
            self.private.append((kind, payload))
            self.dirty = True
            self.cond.notify()

    def wake(self) -> None:
        with self.cond:
            self.cond.notify()

    def take(self, timeout: float):
        with self.cond:
            if not self.dirty:
                self.cond.wait(timeout)
            private, events = list(self.private), list(self.events)
            self.private.clear()
            self.events.clear()
            self.dirty = False
            return private, events, self.snapshot, self.published_at


class TraderUnit(threading.Thread):
    def __init__(self, trader: Trader, mailbox: Mailbox, out: "queue.SimpleQueue[Submission]",
                 stop: threading.Event, clock, duration: float, latency: float, idle_poll: float):
        super().__init__(name=f"trader-{trader.trader_id}", daemon=True)
        self.trader = trader
        self.mailbox = mailbox
        self.out = out
        self.stop = stop
        self.clock = clock
        self.duration = duration
        self.latency = latency
        self.idle_poll = idle_poll
        self.error: Optional[str] = None

    def run(self) -> None:
        try:
            self._loop()
        except Exception:  # reported to the exchange, which invalidates the session
            self.error = traceback.format_exc()
            self.stop.set()

    def _loop(self) -> None:
        t = self.trader
        seen_version = -1
        while not self.stop.is_set():
            private, events, snap, published_at = self.mailbox.take(self.idle_poll)
            if self.stop.is_set():
                return
            for kind, payload in private:
                if kind == "assign":
                    t.assign(payload)
                elif kind == "fill":
                    if t.assignment is not None and t.assignment.id == payload[0]:
                        t.record_fill(payload[1])
            if t.learns:
                for ev in events:
                    t.observe(ev)
            if t.assignment is None or snap is None:
                continue
            if snap.version == seen_version and not private:
                continue  # at most one quote per delivered event
            now = self.clock()
            price = t.quote(snap, now, self.duration - now)
            if price is None:
                continue
            if self.latency:
                _time.sleep(self.latency)
            fresh = snap.version != seen_version
            seen_version = snap.version
            self.out.put(Submission(t.trader_id, price, t.assignment.id, snap.version,
                                    published_at, fresh))


def run_session_async(config: AsyncSessionConfig) -> SessionResult:
    if config.engine != "async" or not isinstance(config, AsyncSessionConfig):
        raise ConfigError("async engine needs an AsyncSessionConfig with engine='async'")
    config.validate()
    schedule = config.resolved_schedule()
    market = Market(config, schedule)
    traders = build_traders(config)
    timeline: list[Assignment] = build_timeline(config, schedule)
    strategies = {m.trader_id: m.strategy for m in config.population}

    submissions: "queue.SimpleQueue[Submission]" = queue.SimpleQueue()
    stop = threading.Event()
    mailboxes = {tid: Mailbox(config.snapshot_delivery) for tid in traders}
    duration = config.wall_clock_duration
    t0 = _time.monotonic()

    def clock() -> float:
        return _time.monotonic() - t0

    units = [TraderUnit(tr, mailboxes[tid], submissions, stop, clock, duration,
                        config.latency_for(tid, tr.strategy), config.idle_poll)
             for tid, tr in traders.items()]

    latency: list[LatencyRecord] = []
    errors: list[str] = []

    def publish(now: float, trade=None) -> None:
        snap = market.book.snapshot(now)
        event = MarketEvent(now, "trade" if trade is not None else "lob_update", snap)
        for mb in mailboxes.values():
            mb.publish(snap, event, now)

    old_switch = sys.getswitchinterval()
    if config.switch_interval is not None:
        sys.setswitchinterval(config.switch_interval)
    started = _time.perf_counter()
    try:
        publish(0.0)
        for u in units:
            u.start()
        next_a = 0
        while True:
            now = clock()
            if now >= duration or stop.is_set():
                break
            while next_a < len(timeline) and timeline[next_a].issue_time <= now:
                a = timeline[next_a]
                next_a += 1
                changed = market.issue(a)
                mailboxes[a.trader_id].send("assign", a)
                if changed:
                    publish(now)
            wait = duration - now
            if next_a < len(timeline):
                wait = min(wait, max(0.0, timeline[next_a].issue_time - now))
            try:
                sub = submissions.get(timeout=max(wait, 1e-4))
            except queue.Empty:
                continue
            arrival = clock()
            if arrival >= duration:
                break
            changed, trade = market.process(sub.trader_id, sub.price, arrival, sub.assignment_id)
            if sub.fresh:
                latency.append(LatencyRecord(sub.trader_id, strategies[sub.trader_id],
                                             sub.snapshot_time, arrival, sub.snapshot_version))
            if trade is not None:
                fill = market.fills[-1]
                mailboxes[trade.buyer_id].send("fill", (fill.buyer_assignment, trade))
                mailboxes[trade.seller_id].send("fill", (fill.seller_assignment, trade))
            if changed:
                publish(arrival, trade)
    except Exception:
        errors.append(traceback.format_exc())
    finally:
        stop.set()
        for mb in mailboxes.values():
            mb.wake()
        for u in units:
            u.join(timeout=5.0)
        if config.switch_interval is not None:
            sys.setswitchinterval(old_switch)
    elapsed = _time.perf_counter() - started

    for u in units:
        if u.error:
            errors.append(f"{u.name}: {u.error}")
        elif u.is_alive():
            errors.append(f"{u.name}: did not stop")
    for e in errors:
        log.warning("async session %s invalid: %s", config.rng_seed, e.strip().splitlines()[-1])
        market.diagnostics.append(e.strip().splitlines()[-1])
    return market.result(config, elapsed, "async", latency, valid=not errors)

