"""Supply/demand schedules, offset functions, equilibrium and assignment issuance."""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .exchange import DEFAULT_MAX_PRICE, DEFAULT_MIN_PRICE, Side


class ScheduleError(ValueError):
    pass


class NoEquilibrium(ScheduleError):
    pass


class AllocationError(ValueError):
    pass


@dataclass(frozen=True)
class OffsetFunction:
    """Time-varying shift added to every limit price. ``kind`` is "null" or "sinusoid"."""

    kind: str = "null"
    amplitude: float = 0.0
    period: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("null", "sinusoid"):
            raise ValueError(f"unknown offset kind {self.kind!r}")
        if self.kind == "sinusoid" and self.period <= 0:
            raise ValueError("sinusoid period must be positive")

    def __call__(self, t: float) -> int:
        return offset_value(self, t)

    @classmethod
    def sinusoid(cls, amplitude: float, period: float, phase: float = 0.0) -> "OffsetFunction":
        return cls("sinusoid", amplitude, period, phase)


NULL_OFFSET = OffsetFunction()


def offset_value(offset: OffsetFunction, t: float) -> int:
    if offset.kind == "null":
        return 0
    # fold t into one period so offset(t + period) == offset(t) despite float error
    phase_t = math.fmod(t, offset.period) / offset.period
    return int(round(offset.amplitude * math.sin(2.0 * math.pi * phase_t + offset.phase)))


def default_sinusoid(price_band: tuple[int, int], session_duration: float) -> OffsetFunction:
    lo, hi = price_band
    return OffsetFunction.sinusoid(0.2 * (lo + hi) / 2.0, session_duration / 3.0, 0.0)


@dataclass(frozen=True)
class Replenish:
    """How assignments are fed in: ``synchronous_all``, ``drip_regular`` or ``drip_stochastic``.

    ``interval`` is the (mean) inter-arrival time for drip modes; ``None`` means
    duration / (assignments_per_trader * n_traders).
    """

    mode: str = "drip_stochastic"
    interval: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("synchronous_all", "drip_regular", "drip_stochastic"):
            raise ValueError(f"unknown replenish mode {self.mode!r}")


@dataclass(frozen=True)
class SupplyDemandSchedule:
    demand_limits: tuple[int, ...]
    supply_limits: tuple[int, ...]
    offset: OffsetFunction = NULL_OFFSET
    replenish: Replenish = field(default_factory=Replenish)
    seed: Optional[int] = None

    @property
    def n_buyers(self) -> int:
        return len(self.demand_limits)

    @property
    def n_sellers(self) -> int:
        return len(self.supply_limits)

    def with_offset(self, offset: OffsetFunction) -> "SupplyDemandSchedule":
        return SupplyDemandSchedule(self.demand_limits, self.supply_limits, offset,
                                    self.replenish, self.seed)

    def dump_csv(self) -> str:
        """``side,base_limit`` rows preceded by a ``#``-prefixed JSON config line."""
        meta = {"offset": asdict(self.offset), "replenish": asdict(self.replenish),
                "seed": self.seed}
        lines = ["# " + json.dumps(meta, sort_keys=True), "side,base_limit"]
        lines += [f"buy,{p}" for p in self.demand_limits]
        lines += [f"sell,{p}" for p in self.supply_limits]
        return "\n".join(lines) + "\n"

    @classmethod
    def load_csv(cls, text: str) -> "SupplyDemandSchedule":
        meta: dict = {}
        demand, supply = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                meta = json.loads(line[1:])
                continue
            if line == "side,base_limit":
                continue
            side, price = line.split(",")
            (demand if Side.parse(side) is Side.BUY else supply).append(int(price))
        return cls(tuple(demand), tuple(supply),
                   OffsetFunction(**meta.get("offset", {})),
                   Replenish(**meta.get("replenish", {})), meta.get("seed"))


def curve_slope(limits: Sequence[int], descending: bool) -> float:
    """Least-squares slope of the sorted step curve, price against unit index."""
    y = np.sort(np.asarray(limits, dtype=float))
    if descending:
        y = y[::-1]
    if len(y) < 2:
        return 0.0
    x = np.arange(1, len(y) + 1, dtype=float)
    return float(np.polyfit(x, y, 1)[0])


def is_symmetric(schedule: SupplyDemandSchedule, tolerance: float = 0.25) -> bool:
    sd = abs(curve_slope(schedule.demand_limits, descending=True))
    ss = abs(curve_slope(schedule.supply_limits, descending=False))
    if max(sd, ss) == 0:
        return True
    return abs(sd - ss) / max(sd, ss) <= tolerance


def generate_symmetric_schedule(n_buyers: int, n_sellers: int, price_band: tuple[int, int],
                                rng_seed: int, *, jitter: int = 2, overlap: float = 0.5,
                                paired: bool = False, offset: OffsetFunction = NULL_OFFSET,
                                replenish: Optional[Replenish] = None,
                                symmetry_tolerance: float = 0.25,
                                bounds: tuple[int, int] = (DEFAULT_MIN_PRICE, DEFAULT_MAX_PRICE),
                                max_tries: int = 100) -> SupplyDemandSchedule:
    """Evenly spaced rungs with +/- ``jitter`` ticks of uniform noise.

    Demand rungs run down the upper part of the band and supply rungs up the
    lower part; ``overlap`` is the fraction of the band the two share, so the
    step curves always cross. With ``paired`` every limit value appears twice
    on its side (needed for balanced-group allocation).
    """
    if n_buyers != n_sellers:
        raise ScheduleError("symmetric schedules need n_buyers == n_sellers")
    if n_buyers < 1:
        raise ScheduleError("need at least one trader per side")
    lo, hi = price_band
    if not bounds[0] <= lo <= hi <= bounds[1]:
        raise ScheduleError(f"band {price_band} outside system bounds {bounds}")
    if paired and n_buyers % 2:
        raise ScheduleError("paired schedules need an even trader count")
    rungs = n_buyers // 2 if paired else n_buyers
    width = hi - lo
    if n_buyers > 1 and width < rungs:
        raise ScheduleError(f"band {price_band} too narrow for {rungs} distinct price levels")
    if not 0.0 < overlap <= 1.0:
        raise ValueError("overlap must lie in (0, 1]")

    rng = np.random.default_rng(rng_seed)
    reach = width * (1.0 + overlap) / 2.0
    demand_base = np.linspace(hi, hi - reach, rungs) if rungs > 1 else np.array([hi - width / 2.0])
    supply_base = np.linspace(lo, lo + reach, rungs) if rungs > 1 else np.array([lo + width / 2.0])
    for _ in range(max_tries):
        d = np.clip(np.rint(demand_base) + rng.integers(-jitter, jitter + 1, rungs), lo, hi)
        s = np.clip(np.rint(supply_base) + rng.integers(-jitter, jitter + 1, rungs), lo, hi)
        if paired:
            d, s = np.repeat(d, 2), np.repeat(s, 2)
        sched = SupplyDemandSchedule(
            tuple(int(p) for p in sorted(d, reverse=True)),
            tuple(int(p) for p in sorted(s)),
            offset, replenish or Replenish(), rng_seed)
        try:
            equilibrium(sched, 0.0)
        except NoEquilibrium:
            continue
        if is_symmetric(sched, symmetry_tolerance):
            return sched
    raise ScheduleError("could not generate an intersecting symmetric schedule")


def base_equilibrium(demand: Iterable[int], supply: Iterable[int]) -> tuple[int, int]:
    d = sorted(demand, reverse=True)
    s = sorted(supply)
    q0 = 0
    for q in range(1, min(len(d), len(s)) + 1):
        if d[q - 1] >= s[q - 1]:
            q0 = q
        else:
            break
    if q0 == 0:
        raise NoEquilibrium("demand and supply curves do not intersect")
    return (s[q0 - 1] + d[q0 - 1]) // 2, q0


def equilibrium(schedule: SupplyDemandSchedule, t: float) -> tuple[int, int]:
    """(p0, q0) at time t. The offset shifts every limit alike, so only p0 moves."""
    p0, q0 = base_equilibrium(schedule.demand_limits, schedule.supply_limits)
    return p0 + offset_value(schedule.offset, t), q0


# -- allocation ------------------------------------------------------------

@dataclass(frozen=True)
class Assignment:
    trader_id: str
    side: Side
    limit_price: int
    issue_time: float
    id: str


@dataclass(frozen=True)
class PopulationMember:
    trader_id: str
    strategy: str
    side: Side
    group: str = ""


def _base_allocation(schedule: SupplyDemandSchedule, population: Sequence[PopulationMember],
                     mode: str, rng: random.Random) -> dict[str, int]:
    """trader_id -> base (un-offset) limit price."""
    out: dict[str, int] = {}
    for side, limits in ((Side.BUY, schedule.demand_limits), (Side.SELL, schedule.supply_limits)):
        members = [m for m in population if m.side is side]
        if len(members) != len(limits):
            raise AllocationError(
                f"{len(members)} {side.value}ers but {len(limits)} {side.value} limits")
        if not members:
            continue
        if mode == "shuffled":
            perm = list(limits)
            rng.shuffle(perm)
            out.update({m.trader_id: p for m, p in zip(members, perm)})
        elif mode == "balanced_group":
            out.update(_balanced(members, limits, rng))
        else:
            raise AllocationError(f"unknown allocation mode {mode!r}")
    return out


def _balanced(members: Sequence[PopulationMember], limits: Sequence[int],
              rng: random.Random) -> dict[str, int]:
    labels = sorted({m.group or m.strategy for m in members})
    if len(members) % 2:
        raise AllocationError("balanced_group needs an even count per side")
    if len(labels) != 2:
        raise AllocationError(f"balanced_group needs exactly two strategies per side, got {labels}")
    groups = {lab: [m for m in members if (m.group or m.strategy) == lab] for lab in labels}
    if len(groups[labels[0]]) != len(groups[labels[1]]):
        raise AllocationError("balanced_group needs a 50:50 split per side")
    ordered = sorted(limits, reverse=True)
    pairs = [(ordered[i], ordered[i + 1]) for i in range(0, len(ordered), 2)]
    if any(a != b for a, b in pairs):
        raise AllocationError("balanced_group needs limits that come in equal-valued pairs")
    rng.shuffle(pairs)
    a_members = list(groups[labels[0]])
    b_members = list(groups[labels[1]])
    rng.shuffle(a_members)
    rng.shuffle(b_members)
    out = {}
    for (pa, pb), ma, mb in zip(pairs, a_members, b_members):
        out[ma.trader_id] = pa
        out[mb.trader_id] = pb
    return out


def _clamp(p: int, bounds: tuple[int, int]) -> int:
    return max(bounds[0], min(bounds[1], p))


def allocate_assignments(schedule: SupplyDemandSchedule, population: Sequence[PopulationMember],
                         mode: str, rng_seed: int, t: float = 0.0,
                         bounds: tuple[int, int] = (DEFAULT_MIN_PRICE, DEFAULT_MAX_PRICE)
                         ) -> list[Assignment]:
    """One assignment per trader, all issued at ``t`` with limit = base + offset(t)."""
    rng = random.Random(rng_seed)
    base = _base_allocation(schedule, population, mode, rng)
    shift = offset_value(schedule.offset, t)
    return [Assignment(m.trader_id, m.side, _clamp(base[m.trader_id] + shift, bounds), t,
                       f"{m.trader_id}#0")
            for m in population]


def issuance_timeline(schedule: SupplyDemandSchedule, population: Sequence[PopulationMember],
                      mode: str, duration: float, assignments_per_trader: int, rng_seed: int,
                      bounds: tuple[int, int] = (DEFAULT_MIN_PRICE, DEFAULT_MAX_PRICE)
                      ) -> list[Assignment]:
    """All assignments for one session, sorted by issue time.

    Assignments come in waves; each wave re-allocates the schedule's base limits
    over the whole population. Under drip modes the traders of a wave receive
    theirs one at a time in a shuffled order, so waves overlap smoothly.
    """
    rng = random.Random(rng_seed)
    n = len(population)
    rep = schedule.replenish
    interval = rep.interval or duration / (assignments_per_trader * n)
    out: list[Assignment] = []
    t = 0.0
    for wave in range(assignments_per_trader):
        base = _base_allocation(schedule, population, mode, rng)
        order = list(population)
        rng.shuffle(order)
        for k, m in enumerate(order):
            if rep.mode == "synchronous_all":
                t = wave * duration / assignments_per_trader
            elif rep.mode == "drip_regular":
                t = (wave * n + k) * interval
            elif wave or k:
                t += rng.expovariate(1.0 / interval)
            if t >= duration:
                break
            limit = _clamp(base[m.trader_id] + offset_value(schedule.offset, t), bounds)
            out.append(Assignment(m.trader_id, m.side, limit, t, f"{m.trader_id}#{wave}"))
    out.sort(key=lambda a: (a.issue_time, a.trader_id))
    return out
