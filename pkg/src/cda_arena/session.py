"""Session configuration, results and the engine-independent market bookkeeping."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .exchange import (DEFAULT_MAX_PRICE, DEFAULT_MIN_PRICE, Order, OrderBook, Side, Trade,
                       write_tape_csv)
from .schedules import (Assignment, OffsetFunction, PopulationMember, Replenish,
                        SupplyDemandSchedule, default_sinusoid, equilibrium,
                        generate_symmetric_schedule, issuance_timeline)
from .traders import AccountingFault, LimitViolation, ParamTable, Trader, make_trader
from .traders.base import within_limit


class ConfigError(ValueError):
    pass


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from any repr-able parts."""
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def make_population(groups: Sequence[tuple[str, str, int]]) -> tuple[PopulationMember, ...]:
    """Build buyers and sellers from ``(group, strategy, count_per_side)`` triples.

    Trader ids are ``B00..`` / ``S00..`` in the order given, so a canonical
    ordering of ``groups`` yields a canonical population.
    """
    members = []
    for side, prefix in ((Side.BUY, "B"), (Side.SELL, "S")):
        i = 0
        for group, strategy, count in groups:
            for _ in range(count):
                members.append(PopulationMember(f"{prefix}{i:02d}", strategy.upper(), side, group))
                i += 1
    return tuple(members)


@dataclass
class SessionConfig:
    population: tuple[PopulationMember, ...]
    rng_seed: int = 0
    duration: float = 180.0
    slice_length: Optional[float] = None
    polls_per_second: float = 10.0
    price_band: tuple[int, int] = (50, 150)
    bounds: tuple[int, int] = (DEFAULT_MIN_PRICE, DEFAULT_MAX_PRICE)
    treatment: str = "static"
    offset: Optional[OffsetFunction] = None
    replenish: Replenish = field(default_factory=Replenish)
    assignments_per_trader: int = 4
    allocation: str = "shuffled"
    schedule: Optional[SupplyDemandSchedule] = None
    params: ParamTable = field(default_factory=ParamTable.default)
    strict: bool = True
    engine: str = "sync"

    @property
    def n_buyers(self) -> int:
        return sum(1 for m in self.population if m.side is Side.BUY)

    @property
    def n_sellers(self) -> int:
        return sum(1 for m in self.population if m.side is Side.SELL)

    @property
    def session_length(self) -> float:
        return self.duration

    def resolved_slice(self) -> float:
        if self.slice_length is not None:
            return self.slice_length
        return 1.0 / (self.polls_per_second * len(self.population))

    def validate(self) -> None:
        if not self.population:
            raise ConfigError("empty population")
        ids = [m.trader_id for m in self.population]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate trader ids")
        if self.n_buyers < 1 or self.n_sellers < 1:
            raise ConfigError("need at least one buyer and one seller")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.treatment not in ("static", "dynamic"):
            raise ConfigError(f"unknown treatment {self.treatment!r}")
        if self.allocation not in ("shuffled", "balanced_group"):
            raise ConfigError(f"unknown allocation {self.allocation!r}")
        if self.assignments_per_trader < 1:
            raise ConfigError("assignments_per_trader must be >= 1")
        if self.engine == "sync" and self.resolved_slice() <= 0:
            raise ConfigError("slice_length must be positive")
        lo, hi = self.price_band
        if not self.bounds[0] <= lo < hi <= self.bounds[1]:
            raise ConfigError(f"price band {self.price_band} outside bounds {self.bounds}")

    def resolved_offset(self) -> OffsetFunction:
        if self.offset is not None:
            return self.offset
        if self.treatment == "dynamic":
            return default_sinusoid(self.price_band, self.session_length)
        return OffsetFunction()

    def resolved_schedule(self) -> SupplyDemandSchedule:
        offset = self.resolved_offset()
        if self.schedule is not None:
            return self.schedule.with_offset(offset) if self.offset is not None or \
                self.treatment == "dynamic" else self.schedule
        return generate_symmetric_schedule(
            self.n_buyers, self.n_sellers, self.price_band, derive_seed(self.rng_seed, "schedule"),
            paired=self.allocation == "balanced_group", offset=offset,
            replenish=self.replenish, bounds=self.bounds)

    def to_dict(self) -> dict:
        d = {
            "engine": self.engine,
            "population": [[m.trader_id, m.strategy, m.side.value, m.group] for m in self.population],
            "rng_seed": self.rng_seed,
            "duration": self.duration,
            "slice_length": self.resolved_slice() if self.engine == "sync" else None,
            "price_band": list(self.price_band),
            "bounds": list(self.bounds),
            "treatment": self.treatment,
            "offset": asdict(self.resolved_offset()),
            "replenish": asdict(self.replenish),
            "assignments_per_trader": self.assignments_per_trader,
            "allocation": self.allocation,
            "schedule": None if self.schedule is None else
            [list(self.schedule.demand_limits), list(self.schedule.supply_limits)],
            "params_sha256": self.params.sha256,
            "strict": self.strict,
        }
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Fill:
    trade: Trade
    buyer_limit: int
    seller_limit: int
    buyer_assignment: str = ""
    seller_assignment: str = ""


@dataclass(frozen=True)
class LatencyRecord:
    trader_id: str
    strategy: str
    snapshot_time: float
    order_arrival_time: float
    snapshot_version: int = -1

    @property
    def latency(self) -> float:
        return self.order_arrival_time - self.snapshot_time


@dataclass
class SessionResult:
    trade_tape: list[Trade]
    fills: list[Fill]
    per_trader_profit: dict[str, int]
    strategies: dict[str, str]
    sides: dict[str, Side]
    groups: dict[str, str]
    config_hash: str
    seed: int
    schedule: SupplyDemandSchedule
    wall_clock_elapsed: float = 0.0
    latency_log: list[LatencyRecord] = field(default_factory=list)
    valid: bool = True
    diagnostics: list[str] = field(default_factory=list)
    engine: str = "sync"

    @property
    def per_strategy_appt(self) -> dict[str, float]:
        return {k: float(v) for k, v in self._appt(self.strategies).items()}

    @property
    def per_group_appt(self) -> dict[str, float]:
        return {k: float(v) for k, v in self._appt(self.groups).items()}

    def exact_appt(self, by: str = "group") -> dict[str, Fraction]:
        return self._appt(self.groups if by == "group" else self.strategies)

    def _appt(self, labels: dict[str, str]) -> dict[str, Fraction]:
        totals: dict[str, int] = {}
        counts: dict[str, int] = {}
        for tid, lab in labels.items():
            totals[lab] = totals.get(lab, 0) + self.per_trader_profit.get(tid, 0)
            counts[lab] = counts.get(lab, 0) + 1
        return {lab: Fraction(totals[lab], counts[lab]) for lab in sorted(totals)}

    @property
    def total_profit(self) -> int:
        return sum(self.per_trader_profit.values())

    @property
    def total_surplus(self) -> int:
        return sum(f.buyer_limit - f.seller_limit for f in self.fills)

    def p0_at(self, t: float) -> int:
        return equilibrium(self.schedule, t)[0]

    # -- serialization ----------------------------------------------------------
    def canonical(self) -> bytes:
        """Everything except wall-clock timing, as stable JSON bytes."""
        d = {
            "engine": self.engine,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "valid": self.valid,
            "tape": [[repr(t.time), t.price, t.buyer_id, t.seller_id, t.initiating_side.value]
                     for t in self.trade_tape],
            "fills": [[f.buyer_limit, f.seller_limit] for f in self.fills],
            "profit": self.per_trader_profit,
            "strategies": self.strategies,
        }
        return json.dumps(d, sort_keys=True).encode()

    def profit_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trader_id", "strategy", "side", "profit"])
        for tid in sorted(self.strategies):
            w.writerow([tid, self.strategies[tid], self.sides[tid].value,
                        self.per_trader_profit.get(tid, 0)])
        return buf.getvalue()

    def tape_csv(self) -> str:
        buf = io.StringIO()
        write_tape_csv(self.trade_tape, buf)
        return buf.getvalue()

    def latency_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trader_id", "strategy", "snapshot_time", "order_arrival_time"])
        for r in self.latency_log:
            w.writerow([r.trader_id, r.strategy, repr(r.snapshot_time), repr(r.order_arrival_time)])
        return buf.getvalue()

    def manifest(self, config: SessionConfig) -> dict:
        return {"config": config.to_dict(), "config_hash": self.config_hash, "seed": self.seed,
                "wall_clock_elapsed": self.wall_clock_elapsed, "valid": self.valid,
                "diagnostics": self.diagnostics,
                "result_sha256": hashlib.sha256(self.canonical()).hexdigest()}


class Market:
    """Book plus authoritative assignment/profit ledger, shared by both engines.

    The exchange side, not the trader objects, decides what an order is
    worth: it knows each trader's live assignment and books profit from it.
    """

    def __init__(self, config: SessionConfig, schedule: SupplyDemandSchedule):
        self.config = config
        self.schedule = schedule
        self.book = OrderBook(*config.bounds)
        self.live: dict[str, Assignment] = {}
        self.fills: list[Fill] = []
        self.tape: list[Trade] = []
        self.profit = {m.trader_id: 0 for m in config.population}
        self.diagnostics: list[str] = []

    def issue(self, a: Assignment) -> bool:
        """Hand out a new assignment; any unfilled predecessor is discarded."""
        self.live[a.trader_id] = a
        return self.book.withdraw(a.trader_id)

    def process(self, trader_id: str, price: int, time: float,
                assignment_id: Optional[str] = None) -> tuple[bool, Optional[Trade]]:
        """Apply one quote. Returns (book changed, trade or None)."""
        a = self.live.get(trader_id)
        if a is None or (assignment_id is not None and assignment_id != a.id):
            return False, None  # stale quote for a finished or replaced assignment
        if not within_limit(a.side, price, a.limit_price):
            msg = f"{trader_id} quoted {price} past limit {a.limit_price}"
            if self.config.strict:
                raise LimitViolation(msg)
            self.diagnostics.append(msg)
            return False, None
        resting = self.book.resting_order(trader_id)
        if resting is not None and resting.price == price:
            return False, None  # identical re-quote keeps its time priority
        if not self.book.min_price <= price <= self.book.max_price:
            return False, None
        outcome = self.book.submit(Order(trader_id, a.side, price, 1, time), time)
        trade = outcome.trade
        if trade is not None:
            buyer = self.live.pop(trade.buyer_id, None)
            seller = self.live.pop(trade.seller_id, None)
            if buyer is None or seller is None:
                raise AccountingFault(f"trade {trade} without live assignments")
            gain_b = buyer.limit_price - trade.price
            gain_s = trade.price - seller.limit_price
            if gain_b < 0 or gain_s < 0:
                raise AccountingFault(f"loss-making trade {trade} for limits "
                                      f"{buyer.limit_price}/{seller.limit_price}")
            self.profit[trade.buyer_id] += gain_b
            self.profit[trade.seller_id] += gain_s
            self.fills.append(Fill(trade, buyer.limit_price, seller.limit_price, buyer.id, seller.id))
            self.tape.append(trade)
        return True, trade

    def result(self, config: SessionConfig, elapsed: float, engine: str,
               latency: Sequence[LatencyRecord] = (), valid: bool = True) -> SessionResult:
        pop = config.population
        return SessionResult(
            trade_tape=list(self.tape), fills=list(self.fills),
            per_trader_profit=dict(self.profit),
            strategies={m.trader_id: m.strategy for m in pop},
            sides={m.trader_id: m.side for m in pop},
            groups={m.trader_id: m.group or m.strategy for m in pop},
            config_hash=config.config_hash(), seed=config.rng_seed, schedule=self.schedule,
            wall_clock_elapsed=elapsed, latency_log=list(latency), valid=valid,
            diagnostics=list(self.diagnostics), engine=engine)


def build_traders(config: SessionConfig) -> dict[str, Trader]:
    return {m.trader_id: make_trader(m.strategy, m.trader_id, m.side, config.params,
                                     random.Random(derive_seed(config.rng_seed, "trader", m.trader_id)),
                                     config.bounds)
            for m in config.population}


def build_timeline(config: SessionConfig, schedule: SupplyDemandSchedule) -> list[Assignment]:
    return issuance_timeline(schedule, config.population, config.allocation,
                             config.session_length, config.assignments_per_trader,
                             derive_seed(config.rng_seed, "timeline"), config.bounds)
