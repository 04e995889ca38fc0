import random
import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from cda_arena.exchange import LobSnapshot, Side, Trade
from cda_arena.schedules import Assignment
from cda_arena.traders import (AA, GDX, STRATEGIES, ZIP, AccountingFault, MarketEvent,
                               ParamError, ParamTable, gvwy_quote, make_trader, shvr_quote,
                               zic_quote)
from cda_arena.traders.gdx import belief_curve, dp_quote

from oracles import aa_r_trace, gdx_enumerate, zip_trace


def asg(side, limit, tid="T"):
    return Assignment(tid, side, limit, 0.0, f"{tid}#0")


def snap(bid=None, ask=None, trade=None, version=0, t=0.0):
    return LobSnapshot(t, ((bid, 1),) if bid is not None else (),
                       ((ask, 1),) if ask is not None else (), trade, version)


def fixed(**over):
    return ParamTable.default().with_overrides(over)


levels = st.lists(st.tuples(st.integers(1, 500), st.integers(1, 3)), max_size=4)


@st.composite
def snapshots(draw):
    bids = sorted({p: q for p, q in draw(levels)}.items(), reverse=True)
    asks = sorted({p: q for p, q in draw(levels)}.items())
    if bids and asks and bids[0][0] >= asks[0][0]:
        asks = [(p, q) for p, q in asks if p > bids[0][0]]
    return LobSnapshot(0.0, tuple(bids), tuple(asks))


# -- GVWY / SHVR / ZIC -------------------------------------------------------------

def test_gvwy_examples():
    assert gvwy_quote(asg(Side.BUY, 100)) == 100
    assert gvwy_quote(asg(Side.SELL, 73)) == 73


@given(snapshots(), snapshots())
def test_gvwy_book_blind(s1, s2):
    t = make_trader("GVWY", "g", Side.BUY)
    t.assign(asg(Side.BUY, 100, "g"))
    assert t.quote(s1) == t.quote(s2) == 100


def test_shvr_examples():
    assert shvr_quote(asg(Side.BUY, 110), snap(bid=100)) == 101
    assert shvr_quote(asg(Side.BUY, 100), snap(bid=100)) is None
    assert shvr_quote(asg(Side.SELL, 45), snap(ask=50)) == 49


def test_shvr_empty_book_fallback():
    assert shvr_quote(asg(Side.BUY, 100), snap()) == 2
    assert shvr_quote(asg(Side.SELL, 100), snap()) == 499
    assert shvr_quote(asg(Side.BUY, 1), snap()) == 1
    assert shvr_quote(asg(Side.SELL, 500), snap()) == 500


@given(snapshots(), st.integers(1, 500), st.sampled_from([Side.BUY, Side.SELL]))
def test_shvr_one_tick(s, limit, side):
    q = shvr_quote(asg(side, limit), s)
    best = s.best(side)
    if q is not None and best is not None:
        assert q == (best + 1 if side is Side.BUY else best - 1)


def test_zic_bounds_and_mean():
    rng = random.Random(1)
    draws = [zic_quote(asg(Side.BUY, 100), rng) for _ in range(10_000)]
    assert min(draws) >= 1 and max(draws) <= 100
    se = statistics.pstdev(range(1, 101)) / 100
    assert abs(statistics.fmean(draws) - 50.5) < 3 * se


def test_zic_chi_square():
    rng = random.Random(2)
    draws = [zic_quote(asg(Side.SELL, 401), rng) for _ in range(20_000)]
    counts = np.bincount(np.array(draws) - 401, minlength=100)
    assert len(counts) == 100
    assert stats.chisquare(counts).pvalue > 0.01


def test_zic_degenerate_and_deterministic():
    assert {zic_quote(asg(Side.BUY, 1), random.Random(s)) for s in range(50)} == {1}
    a = [zic_quote(asg(Side.BUY, 90), random.Random(9)) for _ in range(5)]
    r1, r2 = random.Random(9), random.Random(9)
    assert [zic_quote(asg(Side.BUY, 90), r1) for _ in range(20)] == \
        [zic_quote(asg(Side.BUY, 90), r2) for _ in range(20)]
    assert len(a) == 5


# -- ZIP ---------------------------------------------------------------------

ZIP_FIXED = dict(**{"zip.margin": 0.2, "zip.beta": 0.5, "zip.momentum": 0.0,
                    "zip.ca": 0.0, "zip.cr": 0.0})


def zip_trader(side, limit, rng=None, **over):
    t = make_trader("ZIP", "z", side, fixed(**{**ZIP_FIXED, **over}), rng or random.Random(0))
    t.assign(asg(side, limit, "z"))
    return t


def test_zip_fresh_seller_respects_limit():
    t = make_trader("ZIP", "z", Side.SELL, rng=random.Random(3))
    t.assign(asg(Side.SELL, 100, "z"))
    assert t.quote(snap()) >= 100


def test_zip_hand_steps():
    t = zip_trader(Side.SELL, 100)
    assert t.quote(snap()) == 120
    # trade at 130 above our 120: target 130, step 0.5 * 10 = 5 -> margin 0.25
    t.observe(MarketEvent(1, "trade", snap(trade=Trade(1, 130, 1, "b", "s", Side.BUY))))
    assert t.margin == pytest.approx(0.25)
    assert t.quote(snap()) == 125
    # ask lifted at 110 below our 125: target 110, step 0.5 * -15 -> margin 0.175
    t.observe(MarketEvent(2, "trade", snap(trade=Trade(2, 110, 1, "b", "s", Side.BUY))))
    assert t.margin == pytest.approx(0.175)
    assert t.quote(snap()) == 117


def test_zip_null_learning_rate():
    t = zip_trader(Side.BUY, 100, **{"zip.beta": 0.0, "zip.momentum": 0.0})
    m0 = t.margin
    rng = random.Random(4)
    for i in range(200):
        p = rng.randint(50, 150)
        init = rng.choice([Side.BUY, Side.SELL])
        t.observe(MarketEvent(i, "trade", snap(bid=rng.randint(40, 60), ask=rng.randint(61, 90),
                                                 trade=Trade(i, p, 1, "b", "s", init))))
        t.observe(MarketEvent(i, "lob_update", snap(bid=rng.randint(40, 60))))
    assert t.margin == m0


def _zip_tape(seed, n=20):
    rng = random.Random(seed)
    tape = []
    for i in range(n):
        bb, ba = rng.randint(70, 100), rng.randint(101, 130)
        trade = (rng.randint(85, 115), rng.choice(["buy", "sell"])) if rng.random() < 0.4 else None
        tape.append((bb, ba, trade))
    return tape


@pytest.mark.parametrize("side", ["buy", "sell"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_zip_matches_recurrence_oracle(side, seed):
    params = dict(margin=0.15, beta=0.3, momentum=0.2, ca=0.05, cr=0.05)
    over = {f"zip.{k}": v for k, v in params.items()}
    sd = Side.BUY if side == "buy" else Side.SELL
    limit = 110 if side == "buy" else 90
    t = zip_trader(sd, limit, rng=random.Random(seed), **over)
    tape = _zip_tape(seed)
    got = []
    for i, (bb, ba, trade) in enumerate(tape):
        tr = Trade(i, trade[0], 1, "b", "s", Side(trade[1])) if trade else None
        t.observe(MarketEvent(i, "trade" if tr else "lob_update", snap(bb, ba, tr)))
        got.append(t.quote(snap(bb, ba)))
    want = zip_trace(side, limit, events=tape, rng=random.Random(seed), **params)
    assert got == want
    assert len(set(got)) > 1  # the tape actually moved the margin


# -- GDX ---------------------------------------------------------------------

def test_gdx_cold_start_quotes_limit():
    t = make_trader("GDX", "g", Side.SELL)
    t.assign(asg(Side.SELL, 50, "g"))
    assert t.quote(snap(), 0.0, 10.0) == 50


def test_gdx_belief_one_picks_max_surplus():
    prices = np.arange(50, 501, dtype=float)
    value, idx = dp_quote(np.ones_like(prices), prices - 50, 5, 0.9)
    assert prices[idx] == 500 and value == 450


def test_gdx_toy_dp_matches_enumeration():
    belief = np.array([0.9, 0.5, 0.2])
    surplus = np.array([2.0, 5.0, 9.0])
    value, idx = dp_quote(belief, surplus, 2, 0.9)
    want_value, want_idx = gdx_enumerate(belief, surplus, 0.9)
    assert value == pytest.approx(want_value)
    assert idx == want_idx


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.floats(0, 1))
def test_gdx_dp_enumeration_property(b, gamma):
    belief = np.array(b)
    surplus = np.array([1.0, 4.0, 7.0])
    value, _ = dp_quote(belief, surplus, 2, gamma)
    assert value == pytest.approx(gdx_enumerate(belief, surplus, gamma)[0])


def test_gdx_belief_shape():
    prices = np.arange(90, 121, dtype=float)
    q = belief_curve(Side.SELL, prices, [100, 105, 110], [(98, 1)], [(115, 1)], (1, 500))
    assert q[0] >= q[-1]
    assert np.all((q >= 0) & (q <= 1))
    assert belief_curve(Side.SELL, prices, [], (), (), (1, 500)) is None


# -- AA ----------------------------------------------------------------------

AA_FIXED = {"aa.short_rate": 0.4, "aa.long_rate": 0.3, "aa.aggressiveness": 0.0}


def aa_trader(side, limit, **over):
    t = make_trader("AA", "a", side, fixed(**{**AA_FIXED, **over}), random.Random(0))
    t.assign(asg(side, limit, "a"))
    return t


def test_aa_cold_start():
    assert aa_trader(Side.BUY, 100).quote(snap()) == 90
    assert aa_trader(Side.SELL, 100).quote(snap()) == 110
    assert aa_trader(Side.BUY, 3).quote(snap()) == 2  # floor keeps the buyer under its limit


def test_aa_equilibrium_converges():
    t = aa_trader(Side.BUY, 150)
    for i in range(50):
        t.observe(MarketEvent(i, "trade", snap(trade=Trade(i, 97, 1, "b", "s", Side.BUY))))
    assert abs(t.p_eq - 97) < 1


def test_aa_matches_recurrence_oracle():
    t = aa_trader(Side.BUY, 120)
    trades = [100, 104, 98, 101, 110, 95, 99, 103, 100, 102, 97, 118]
    got = []
    for i, p in enumerate(trades):
        t.observe(MarketEvent(i, "trade", snap(trade=Trade(i, p, 1, "b", "s", Side.SELL))))
        got.append(t.r)
    want = aa_r_trace(120, trades, r0=0.0, theta0=-2.0, beta1=0.4, beta2=0.3, lam_r=0.05,
                      lam_a=0.05, window=5, decay=0.95, gamma=2.0, theta_lo=-8.0,
                      theta_hi=2.0, max_price=500)
    assert got == pytest.approx(want, abs=1e-12)
    assert max(got) != min(got)


def test_aa_quotes_within_limit_after_learning():
    for side, limit in ((Side.BUY, 120), (Side.SELL, 80)):
        t = aa_trader(side, limit)
        for i, p in enumerate([100, 101, 99, 100]):
            t.observe(MarketEvent(i, "trade", snap(90, 110, Trade(i, p, 1, "b", "s", Side.BUY))))
        q = t.quote(snap(90, 110))
        assert q is not None and (q <= limit if side is Side.BUY else q >= limit)


# -- contract ----------------------------------------------------------------

def test_record_fill_examples():
    b = make_trader("GVWY", "b", Side.BUY)
    b.assign(asg(Side.BUY, 110, "b"))
    assert b.record_fill(Trade(0, 105, 1, "b", "s", Side.BUY)) == 5
    s = make_trader("GVWY", "s", Side.SELL)
    s.assign(asg(Side.SELL, 100, "s"))
    assert s.record_fill(Trade(0, 107, 1, "x", "s", Side.SELL)) == 7
    s.assign(asg(Side.SELL, 100, "s"))
    assert s.record_fill(Trade(0, 100, 1, "x", "s", Side.SELL)) == 0
    assert s.balance == 7
    with pytest.raises(AccountingFault):
        s.record_fill(Trade(0, 100, 1, "x", "s", Side.SELL))


def test_no_assignment_no_quote():
    for name in STRATEGIES:
        assert make_trader(name, "t", Side.BUY).quote(snap(90, 110)) is None


@given(st.sampled_from(STRATEGIES), st.sampled_from([Side.BUY, Side.SELL]),
       st.integers(1, 500), st.lists(snapshots(), min_size=1, max_size=6), st.integers(0, 99))
def test_limit_universality(name, side, limit, snaps, seed):
    t = make_trader(name, "t", side, rng=random.Random(seed))
    t.assign(asg(side, limit, "t"))
    for i, s in enumerate(snaps):
        kind = "lob_update"
        if i % 2 and s.best_bid is not None:
            s = LobSnapshot(s.time, s.bid_levels, s.ask_levels,
                            Trade(i, s.best_bid, 1, "b", "s", Side.SELL), s.version)
            kind = "trade"
        t.observe(MarketEvent(float(i), kind, s))
        q = t.quote(s, float(i), 10.0)
        if q is not None:
            assert (q <= limit) if side is Side.BUY else (q >= limit)


@pytest.mark.parametrize("name", STRATEGIES)
def test_strategy_determinism(name):
    def run():
        t = make_trader(name, "t", Side.SELL, rng=random.Random(5))
        t.assign(asg(Side.SELL, 80, "t"))
        out = []
        for i, p in enumerate([100, 95, 105, 90, 98]):
            s = snap(p - 5, p + 5, Trade(i, p, 1, "b", "s", Side.BUY))
            t.observe(MarketEvent(i, "trade", s))
            out.append(t.quote(s, float(i), 10.0))
        return out
    assert run() == run()


def test_param_validation():
    with pytest.raises(ParamError):
        ParamTable("zip.beta = 1.5\n")
    with pytest.raises(ParamError):
        ParamTable("gdx.memory = 0\n")
    with pytest.raises(ParamError):
        ParamTable("foo.bar = 1\n")
    assert ParamTable.default().for_strategy("gdx").get("discount") == 0.9
    assert isinstance(aa_trader(Side.BUY, 100), AA)
    assert isinstance(zip_trader(Side.BUY, 100), ZIP)
    assert isinstance(make_trader("gdx", "g", Side.BUY), GDX)
