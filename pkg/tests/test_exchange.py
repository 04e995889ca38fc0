import io
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cda_arena.exchange import (EMPTY_SNAPSHOT, Order, OrderBook, OrderRejected, Side,
                                read_tape_csv, snapshot, submit_order, tape_to_csv)

from oracles import BruteBook


def bid(tid, price):
    return Order(tid, Side.BUY, price)


def ask(tid, price):
    return Order(tid, Side.SELL, price)


def test_empty_book_bid_rests():
    book = OrderBook()
    out = submit_order(bid("T1", 100), book, 0.0)
    assert out.kind == "rested"
    assert book.best_bid == 100


def test_cross_executes_at_resting_price():
    book = OrderBook()
    book.submit(ask("S", 105), 0.0)
    out = book.submit(bid("B", 110), 1.0)
    assert out.kind == "executed"
    assert out.trade.price == 105
    assert (out.trade.buyer_id, out.trade.seller_id) == ("B", "S")
    assert out.trade.initiating_side is Side.BUY
    assert book.best_ask is None and book.best_bid is None


def test_resubmit_replaces():
    book = OrderBook()
    book.submit(bid("T1", 90), 0.0)
    out = book.submit(bid("T1", 95), 1.0)
    assert out.kind == "replaced_and_rested"
    assert [o.price for o in book.bids] == [95]


def test_side_switch_replaces_across_books():
    book = OrderBook()
    book.submit(bid("T1", 90), 0.0)
    book.submit(ask("T1", 120), 1.0)
    assert book.bids == [] and [o.price for o in book.asks] == [120]


def test_fifo_within_level():
    book = OrderBook()
    book.submit(bid("T1", 100), 0.0)
    book.submit(bid("T2", 100), 1.0)
    out = book.submit(ask("S", 100), 2.0)
    assert out.trade.buyer_id == "T1"


@pytest.mark.parametrize("order", [Order("x", Side.BUY, 0), Order("x", Side.BUY, 501),
                                   Order("x", Side.SELL, 10, quantity=2)])
def test_rejects_bad_orders(order):
    with pytest.raises(OrderRejected):
        OrderBook().submit(order, 0.0)


def test_tick_size():
    book = OrderBook(tick_size=5)
    with pytest.raises(OrderRejected):
        book.submit(bid("a", 101), 0.0)
    book.submit(bid("a", 100), 0.0)


def test_snapshot_empty():
    s = snapshot(OrderBook(), 0.0)
    assert s.bid_levels == () and s.ask_levels == ()
    assert s.best_bid is None and s.spread is None and s.mid_price is None
    assert EMPTY_SNAPSHOT.best_ask is None


def test_snapshot_aggregates_levels():
    book = OrderBook()
    for tid, p in (("T1", 100), ("T2", 100), ("T3", 99)):
        book.submit(bid(tid, p), 0.0)
    s = book.snapshot(1.0)
    assert s.bid_levels == ((100, 2), (99, 1))
    assert "T1" not in repr(s.bid_levels)


def test_spread_and_mid():
    book = OrderBook()
    book.submit(bid("b", 100), 0.0)
    book.submit(ask("s", 104), 0.0)
    s = book.snapshot(0.0)
    assert s.spread == 4 and s.mid_price == 102
    book.submit(ask("s", 105), 1.0)
    assert book.snapshot(1.0).mid_price == 102  # 102.5 rounds down


def test_tape_csv_round_trip():
    book = OrderBook()
    book.submit(ask("s1", 105), 0.25)
    t1 = book.submit(bid("b1", 110), 0.5).trade
    book.submit(bid("b2", 90), 0.75)
    t2 = book.submit(ask("s2", 80), 1.0).trade
    text = tape_to_csv([t1, t2])
    assert text.splitlines()[0] == "time,price,quantity,buyer_id,seller_id,initiating_side"
    assert read_tape_csv(io.StringIO(text)) == [t1, t2]


def _replay(stream):
    book, brute, tape = OrderBook(), BruteBook(), []
    for i, (tid, side, price) in enumerate(stream):
        out = book.submit(Order(tid, Side(side), price), float(i))
        brute.submit(tid, side, price, float(i))
        if out.trade:
            t = out.trade
            tape.append((t.time, t.price, t.buyer_id, t.seller_id, t.initiating_side.value))
        bb, ba = book.best_bid, book.best_ask
        assert bb is None or ba is None or bb < ba
        ids = [o.trader_id for o in book.bids + book.asks]
        assert len(ids) == len(set(ids))
    return book, brute, tape


def test_scripted_50_orders_match_oracle():
    rng = random.Random(50)
    stream = [(f"T{rng.randrange(8)}", rng.choice(("buy", "sell")), rng.randint(90, 110))
              for _ in range(50)]
    book, brute, tape = _replay(stream)
    assert tape == brute.tape
    assert ([(o.trader_id, o.price) for o in book.bids],
            [(o.trader_id, o.price) for o in book.asks]) == brute.state()


orders = st.lists(st.tuples(st.sampled_from([f"T{i}" for i in range(10)]),
                            st.sampled_from(["buy", "sell"]), st.integers(1, 30)),
                  max_size=200)


@given(orders)
def test_random_streams_match_oracle(stream):
    book, brute, tape = _replay(stream)
    assert tape == brute.tape
    assert ([(o.trader_id, o.price) for o in book.bids],
            [(o.trader_id, o.price) for o in book.asks]) == brute.state()


@given(orders)
def test_trades_at_resting_price(stream):
    book = OrderBook()
    for i, (tid, side, price) in enumerate(stream):
        half = book.asks if side == "buy" else book.bids
        others = [o.price for o in half if o.trader_id != tid]  # own order is withdrawn first
        resting_best = (min(others) if side == "buy" else max(others)) if others else None
        out = book.submit(Order(tid, Side(side), price), float(i))
        if out.trade:
            assert out.trade.price == resting_best
