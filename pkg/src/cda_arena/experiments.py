"""Pairwise contests, win tallies and dominance graphs."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .exchange import Trade
from .schedules import Replenish
from .session import SessionConfig, SessionResult, derive_seed, make_population
from .traders import STRATEGIES, ParamTable, canonical_strategy

log = logging.getLogger(__name__)

N_PER_SIDE = 20
ALL_RATIOS = tuple((a, N_PER_SIDE - a) for a in range(1, N_PER_SIDE))


class IncompleteGraphError(ValueError):
    def __init__(self, missing: Sequence[tuple[str, str]]):
        self.missing = list(missing)
        super().__init__("missing pairs: " + ", ".join(f"{a}:{b}" for a, b in self.missing))


class UndefinedMetric(ValueError):
    pass


@dataclass
class SessionTemplate:
    """Everything about a contest session except population and seed."""

    duration: float = 30.0
    polls_per_second: float = 1.0
    wall_clock_duration: float = 10.0
    assignments_per_trader: int = 4
    price_band: tuple[int, int] = (50, 150)
    replenish: Replenish = field(default_factory=Replenish)
    params: ParamTable = field(default_factory=ParamTable.default)
    balanced_group_at_parity: bool = True
    injected_latency: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"duration": self.duration, "polls_per_second": self.polls_per_second,
                "wall_clock_duration": self.wall_clock_duration,
                "assignments_per_trader": self.assignments_per_trader,
                "price_band": list(self.price_band), "replenish": self.replenish.mode,
                "params_sha256": self.params.sha256,
                "balanced_group_at_parity": self.balanced_group_at_parity,
                "injected_latency": dict(self.injected_latency)}


@dataclass
class ContestSpec:
    strategy_a: str
    strategy_b: str
    ratios: tuple[tuple[int, int], ...] = ALL_RATIOS
    sessions_per_ratio: int = 100
    engine: str = "sync"
    p0_treatment: str = "static"
    base_seed: int = 0
    session: SessionTemplate = field(default_factory=SessionTemplate)

    def __post_init__(self):
        self.strategy_a = canonical_strategy(self.strategy_a)
        self.strategy_b = canonical_strategy(self.strategy_b)
        if self.engine not in ("sync", "async"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.p0_treatment not in ("static", "dynamic"):
            raise ValueError(f"unknown treatment {self.p0_treatment!r}")
        self.ratios = tuple(tuple(r) for r in self.ratios)
        sizes = {a + b for a, b in self.ratios}
        if len(sizes) > 1 or any(a < 0 or b < 0 for a, b in self.ratios):
            raise ValueError(f"ratios must share one per-side total, got {self.ratios}")

    @property
    def pair(self) -> str:
        return f"{self.strategy_a}:{self.strategy_b}"

    def swapped(self) -> "ContestSpec":
        return replace(self, strategy_a=self.strategy_b, strategy_b=self.strategy_a,
                       ratios=tuple((b, a) for a, b in self.ratios))

    # -- canonical session construction ---------------------------------------
    def _labels(self) -> tuple[str, str]:
        if self.strategy_a == self.strategy_b:
            return f"a:{self.strategy_a}", f"b:{self.strategy_b}"
        return self.strategy_a, self.strategy_b

    def session_seed(self, count_a: int, count_b: int, index: int) -> int:
        """Label-order independent: swapping A and B (and the ratio) gives the same seed."""
        la, lb = self._labels()
        key = tuple(sorted([(la, count_a), (lb, count_b)]))
        return derive_seed(self.base_seed, key, self.engine, self.p0_treatment, index)

    def session_config(self, count_a: int, count_b: int, index: int) -> SessionConfig:
        la, lb = self._labels()
        groups = sorted([(la, self.strategy_a, count_a), (lb, self.strategy_b, count_b)])
        pop = make_population([g for g in groups if g[2] > 0])
        t = self.session
        bg = t.balanced_group_at_parity and count_a == count_b and count_a > 0
        common = dict(population=pop, rng_seed=self.session_seed(count_a, count_b, index),
                      price_band=t.price_band, treatment=self.p0_treatment,
                      replenish=t.replenish, assignments_per_trader=t.assignments_per_trader,
                      allocation="balanced_group" if bg else "shuffled", params=t.params)
        if self.engine == "sync":
            return SessionConfig(duration=t.duration, polls_per_second=t.polls_per_second,
                                 engine="sync", **common)
        from .engine_async import AsyncSessionConfig
        return AsyncSessionConfig(wall_clock_duration=t.wall_clock_duration,
                                  injected_latency=dict(t.injected_latency), **common)


@dataclass(frozen=True)
class SessionRecord:
    pair: str
    engine: str
    treatment: str
    ratio_a: int
    ratio_b: int
    session_index: int
    seed: int
    appt_a: float
    appt_b: float
    winner: str  # "A" | "B" | "draw" | "invalid"


@dataclass
class Tally:
    wins_a: int = 0
    wins_b: int = 0
    draws: int = 0
    invalid: int = 0

    @property
    def sessions(self) -> int:
        return self.wins_a + self.wins_b + self.draws


@dataclass(frozen=True)
class ContestTotals:
    algo_a: str
    algo_b: str
    engine: str
    treatment: str
    wins_a: int
    wins_b: int
    draws: int = 0


@dataclass
class ContestResult:
    spec: ContestSpec
    per_ratio: dict[tuple[int, int], Tally]
    records: list[SessionRecord]

    @property
    def wins_a(self) -> int:
        return sum(t.wins_a for t in self.per_ratio.values())

    @property
    def wins_b(self) -> int:
        return sum(t.wins_b for t in self.per_ratio.values())

    @property
    def draws(self) -> int:
        return sum(t.draws for t in self.per_ratio.values())

    @property
    def invalid(self) -> int:
        return sum(t.invalid for t in self.per_ratio.values())

    @property
    def sessions(self) -> int:
        return self.wins_a + self.wins_b + self.draws

    @property
    def win_share_a(self) -> float:
        decided = self.wins_a + self.wins_b
        return self.wins_a / decided if decided else math.nan

    def totals(self) -> ContestTotals:
        s = self.spec
        return ContestTotals(s.strategy_a, s.strategy_b, s.engine, s.p0_treatment,
                             self.wins_a, self.wins_b, self.draws)


def judge(result: SessionResult, spec: ContestSpec) -> tuple[float, float, str]:
    la, lb = spec._labels()
    appt = result.exact_appt("group")
    a, b = appt.get(la), appt.get(lb)
    if not result.valid:
        return math.nan, math.nan, "invalid"
    if a is None or b is None:
        # a side with zero traders cannot win or lose
        return float(a or 0), float(b or 0), "draw"
    winner = "A" if a > b else "B" if b > a else "draw"
    return float(a), float(b), winner


def _run_one(job: tuple[ContestSpec, int, int, int]) -> SessionRecord:
    spec, ca, cb, idx = job
    cfg = spec.session_config(ca, cb, idx)
    if spec.engine == "sync":
        from .engine_sync import run_session_sync
        res = run_session_sync(cfg)
    else:
        from .engine_async import run_session_async
        res = run_session_async(cfg)
    appt_a, appt_b, winner = judge(res, spec)
    if winner == "invalid":
        log.warning("invalid session %s ratio %d:%d index %d: %s", spec.pair, ca, cb, idx,
                    "; ".join(res.diagnostics))
    return SessionRecord(spec.pair, spec.engine, spec.p0_treatment, ca, cb, idx, cfg.rng_seed,
                         appt_a, appt_b, winner)


def tally(spec: ContestSpec, records: Iterable[SessionRecord]) -> ContestResult:
    per_ratio = {r: Tally() for r in spec.ratios}
    recs = sorted(records, key=lambda r: (spec.ratios.index((r.ratio_a, r.ratio_b)),
                                          r.session_index))
    for r in recs:
        t = per_ratio[(r.ratio_a, r.ratio_b)]
        if r.winner == "A":
            t.wins_a += 1
        elif r.winner == "B":
            t.wins_b += 1
        elif r.winner == "draw":
            t.draws += 1
        else:
            t.invalid += 1
    return ContestResult(spec, per_ratio, recs)


def run_contest(spec: ContestSpec, workers: int = 1,
                progress: Optional[Callable[[int, int], None]] = None) -> ContestResult:
    """Run every (ratio, session) of a contest.

    Sync sessions fan out over ``workers`` processes. Async sessions always run
    one at a time so that trader threads are not starved by other sessions.
    """
    jobs = [(spec, ca, cb, i) for ca, cb in spec.ratios for i in range(spec.sessions_per_ratio)]
    records: list[SessionRecord] = []
    if workers > 1 and spec.engine == "sync" and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for k, rec in enumerate(pool.map(_run_one, jobs, chunksize=8), 1):
                records.append(rec)
                if progress:
                    progress(k, len(jobs))
    else:
        for k, job in enumerate(jobs, 1):
            records.append(_run_one(job))
            if progress:
                progress(k, len(jobs))
    return tally(spec, records)


# -- dominance graphs ----------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    winner: str
    loser: str
    wins_winner: int
    wins_loser: int


@dataclass
class DominanceGraph:
    nodes: list[str]
    edges: list[Edge]
    ties: list[tuple[str, str]]
    engine: str
    treatment: str

    @property
    def outdegree(self) -> dict[str, int]:
        out = {n: 0 for n in self.nodes}
        for e in self.edges:
            out[e.winner] += 1
        return out

    @property
    def indegree(self) -> dict[str, int]:
        deg = {n: 0 for n in self.nodes}
        for e in self.edges:
            deg[e.loser] += 1
        return deg

    def has_edge(self, winner: str, loser: str) -> bool:
        return any(e.winner == winner and e.loser == loser for e in self.edges)

    @property
    def sources(self) -> list[str]:
        ind = self.indegree
        return [n for n in self.nodes if ind[n] == 0 and self.outdegree[n] > 0]

    @property
    def sinks(self) -> list[str]:
        out = self.outdegree
        return [n for n in self.nodes if out[n] == 0 and self.indegree[n] > 0]

    def ranking(self) -> list[tuple[str, int]]:
        out = self.outdegree
        return sorted(out.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_dot(self) -> str:
        ind, out = self.indegree, self.outdegree
        lines = ["digraph dominance {",
                 f'  label="engine={self.engine} treatment={self.treatment}";']
        for n in self.nodes:
            lines.append(f'  {n} [label="{n}\\n{ind[n]}/{out[n]}"];')
        for e in self.edges:
            lines.append(f'  {e.winner} -> {e.loser} [label="{e.wins_winner}:{e.wins_loser}"];')
        for a, b in self.ties:
            lines.append(f'  {a} -> {b} [dir=none, style=dashed, label="tie"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_dominance_graph(results: Iterable[Union[ContestResult, ContestTotals]],
                          strategies: Optional[Sequence[str]] = None) -> DominanceGraph:
    rows = [r.totals() if isinstance(r, ContestResult) else r for r in results]
    if not rows:
        raise IncompleteGraphError([])
    settings = {(r.engine, r.treatment) for r in rows}
    if len(settings) > 1:
        raise ValueError(f"mixed engine/treatment settings {sorted(settings)}")
    engine, treatment = settings.pop()
    merged: dict[tuple[str, str], list[int]] = {}
    for r in rows:
        a, b = r.algo_a, r.algo_b
        if a == b:
            continue
        key = tuple(sorted((a, b)))
        w = merged.setdefault(key, [0, 0])
        if key == (a, b):
            w[0] += r.wins_a
            w[1] += r.wins_b
        else:
            w[0] += r.wins_b
            w[1] += r.wins_a
    nodes = sorted(strategies) if strategies else sorted({s for k in merged for s in k})
    missing = [p for p in combinations(nodes, 2) if p not in merged]
    if missing:
        raise IncompleteGraphError(missing)
    edges, ties = [], []
    for (a, b), (wa, wb) in sorted(merged.items()):
        if wa > wb:
            edges.append(Edge(a, b, wa, wb))
        elif wb > wa:
            edges.append(Edge(b, a, wb, wa))
        else:
            log.warning("tie between %s and %s (%d each): no edge", a, b, wa)
            ties.append((a, b))
    return DominanceGraph(nodes, edges, ties, engine, treatment)


# -- CSV / DOT I/O ------------------------------------------------------------

SESSION_HEADER = ("pair", "engine", "treatment", "ratio_a", "ratio_b", "session_index", "seed",
                  "appt_a", "appt_b", "winner")
TOTALS_HEADER = ("algo_a", "algo_b", "engine", "treatment", "wins_a", "wins_b", "draws")


def sessions_csv(records: Iterable[SessionRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SESSION_HEADER)
    for r in records:
        w.writerow([r.pair, r.engine, r.treatment, r.ratio_a, r.ratio_b, r.session_index, r.seed,
                    repr(r.appt_a), repr(r.appt_b), r.winner])
    return buf.getvalue()


def read_sessions_csv(text: str) -> list[SessionRecord]:
    rows = csv.DictReader(_strip_comments(text))
    if tuple(rows.fieldnames or ()) != SESSION_HEADER:
        raise ValueError(f"unexpected session header {rows.fieldnames}")
    return [SessionRecord(r["pair"], r["engine"], r["treatment"], int(r["ratio_a"]),
                          int(r["ratio_b"]), int(r["session_index"]), int(r["seed"]),
                          float(r["appt_a"]), float(r["appt_b"]), r["winner"]) for r in rows]


def totals_csv(rows: Iterable[Union[ContestResult, ContestTotals]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TOTALS_HEADER)
    for r in rows:
        t = r.totals() if isinstance(r, ContestResult) else r
        w.writerow([t.algo_a, t.algo_b, t.engine, t.treatment, t.wins_a, t.wins_b, t.draws])
    return buf.getvalue()


def _strip_comments(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def read_totals_csv(text: str) -> list[ContestTotals]:
    rows = csv.DictReader(_strip_comments(text))
    if tuple(rows.fieldnames or ()) != TOTALS_HEADER:
        raise ValueError(f"unexpected totals header {rows.fieldnames}")
    return [ContestTotals(canonical_strategy(r["algo_a"]), canonical_strategy(r["algo_b"]),
                          r["engine"], r["treatment"], int(r["wins_a"]), int(r["wins_b"]),
                          int(r["draws"] or 0)) for r in rows]


def load_fixture(name: str) -> list[ContestTotals]:
    from importlib import resources
    return read_totals_csv(resources.files(__package__).joinpath("fixtures", name).read_text())


def atomic_write(path: Union[str, Path], text: str) -> None:
    """Write to a temp file in the same directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_outputs(obj: Union[ContestResult, DominanceGraph], fmt: str,
                 dest: Union[str, Path]) -> list[Path]:
    """Write a contest (``csv``: per-session + totals) or a graph (``dot``) under ``dest``."""
    dest = Path(dest)
    if isinstance(obj, DominanceGraph):
        if fmt != "dot":
            raise ValueError("graphs are emitted as dot")
        path = dest if dest.suffix == ".dot" else dest / f"dominance_{obj.engine}_{obj.treatment}.dot"
        atomic_write(path, obj.to_dot())
        return [path]
    if fmt != "csv":
        raise ValueError("contest results are emitted as csv")
    sessions = dest / "sessions.csv"
    totals = dest / "totals.csv"
    atomic_write(sessions, sessions_csv(obj.records))
    atomic_write(totals, totals_csv([obj]))
    return [sessions, totals]


# -- diagnostics ------------------------------------------------------------

def alpha_convergence(tape: Sequence[Trade],
                      p0: Union[Callable[[float], float], Mapping[float, float], float]) -> float:
    """Root-mean-square relative deviation of trade prices from P0, in percent."""
    if not tape:
        raise UndefinedMetric("alpha is undefined for an empty tape")
    if callable(p0):
        eq = p0
    elif isinstance(p0, Mapping):
        eq = p0.__getitem__
    else:
        eq = lambda t: p0  # noqa: E731
    sq = 0.0
    for t in tape:
        ref = eq(t.time)
        sq += ((t.price - ref) / ref) ** 2
    return 100.0 * math.sqrt(sq / len(tape))


def all_pairs(strategies: Sequence[str] = STRATEGIES) -> list[tuple[str, str]]:
    return list(combinations(sorted(strategies), 2))


def per_ratio_rows(result: ContestResult) -> list[tuple[int, int, int, int, int]]:
    return [(a, b, t.wins_a, t.wins_b, t.draws) for (a, b), t in result.per_ratio.items()]


__all__ = [
    "ALL_RATIOS", "ContestSpec", "ContestResult", "ContestTotals", "DominanceGraph", "Edge",
    "IncompleteGraphError", "SessionRecord", "SessionTemplate", "Tally", "UndefinedMetric",
    "alpha_convergence", "all_pairs", "atomic_write", "build_dominance_graph", "emit_outputs",
    "judge", "load_fixture", "read_sessions_csv", "read_totals_csv", "run_contest",
    "sessions_csv", "tally", "totals_csv", "RaceTally", "count_races", "run_race_study",
]


# -- race instrumentation ----------------------------------------------------

@dataclass
class RaceTally:
    slow_first: int = 0
    opportunities: int = 0
    sessions: int = 0

    @property
    def slow_share(self) -> float:
        return self.slow_first / self.opportunities if self.opportunities else math.nan


def count_races(result: SessionResult, slow_ids: set[str], fast_ids: set[str]) -> tuple[int, int]:
    """Same-side reactions to the same snapshot: (slow arrived first, opportunities)."""
    first: dict[tuple[int, str], dict[str, float]] = defaultdict(dict)
    for rec in result.latency_log:
        team = "slow" if rec.trader_id in slow_ids else "fast" if rec.trader_id in fast_ids else None
        if team is None:
            continue
        seen = first[(rec.snapshot_version, result.sides[rec.trader_id].value)]
        seen[team] = min(seen.get(team, math.inf), rec.order_arrival_time)
    slow = total = 0
    for seen in first.values():
        if len(seen) == 2:
            total += 1
            slow += seen["slow"] < seen["fast"]
    return slow, total


def run_race_study(sessions: int = 100, delay: float = 0.05, wall_clock: float = 0.5,
                   base_seed: int = 0, per_side: int = 1) -> RaceTally:
    """A delayed SHVR clone against an instant one on matched (paired) limits."""
    from .engine_async import AsyncSessionConfig, run_session_async
    pop = make_population([("fast", "SHVR", per_side), ("slow", "SHVR", per_side)])
    slow_ids = {m.trader_id for m in pop if m.group == "slow"}
    fast_ids = {m.trader_id for m in pop if m.group == "fast"}
    out = RaceTally()
    for i in range(sessions):
        cfg = AsyncSessionConfig(population=pop, rng_seed=derive_seed(base_seed, "race", i),
                                 wall_clock_duration=wall_clock, allocation="balanced_group",
                                 injected_latency={tid: delay for tid in slow_ids})
        res = run_session_async(cfg)
        if not res.valid:
            continue
        s, n = count_races(res, slow_ids, fast_ids)
        out.slow_first += s
        out.opportunities += n
        out.sessions += 1
    return out
