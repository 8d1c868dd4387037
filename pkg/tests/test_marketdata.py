import io

import pytest
from hypothesis import given, strategies as st

from fracta.marketdata import (WEEK, CollectionMeta, EventSeries, FloorQuote, ParseError, TradeEvent,
                               parse_floor_quotes, parse_rates, parse_trades, trim_launch_window,
                               write_floor_quotes, write_trades)

HEADER = "timestamp,token_id,price_sol,price_usd\n"
META = CollectionMeta("FOX", start_date=1648000000, token_count=10)


def test_single_row():
    s = parse_trades(io.BytesIO((HEADER + "1648166400,fox#12,2.5,102.50\n").encode()), META)
    assert list(s) == [TradeEvent(1648166400, "fox#12", 2.5, 102.5)]


def test_empty_file_gives_empty_series():
    assert len(parse_trades(io.BytesIO(b""))) == 0
    assert len(parse_trades(io.BytesIO(HEADER.encode()))) == 0


def test_shuffled_rows_are_sorted():
    rows = ["1648166500,a,1,2", "1648166400,b,3,4", "1648166450,c,5,6"]
    s = parse_trades(io.StringIO(HEADER + "\n".join(rows) + "\n"))
    assert [e.timestamp for e in s] == [1648166400, 1648166450, 1648166500]
    assert sorted(e.token_id for e in s) == ["a", "b", "c"]


@pytest.mark.parametrize("row,line", [
    ("1648166400,a,-1,2", 3),
    ("1648166400,a,0,2", 3),
    ("nope,a,1,2", 3),
    ("1648166400,a,1", 3),
])
def test_bad_rows_name_their_line(row, line):
    text = HEADER + "1648166300,z,1,1\n" + row + "\n"
    with pytest.raises(ParseError) as err:
        parse_trades(io.StringIO(text))
    assert err.value.line == line


def test_trade_before_collection_start():
    with pytest.raises(ParseError):
        parse_trades(io.StringIO(HEADER + "1000,a,1,1\n"), META)


def test_floor_quotes():
    text = "timestamp,floor_sol,floor_usd\n1648166400,10.5,430.25\n"
    assert list(parse_floor_quotes(io.StringIO(text))) == [FloorQuote(1648166400, 10.5, 430.25)]


def test_floor_duplicate_timestamps_keep_order():
    text = "timestamp,floor_sol,floor_usd\n20,1,1\n10,2,2\n10,3,3\n"
    s = parse_floor_quotes(io.StringIO(text))
    assert [(q.timestamp, q.floor_sol) for q in s] == [(10, 2.0), (10, 3.0), (20, 1.0)]


def test_negative_floor_is_an_error():
    with pytest.raises(ParseError, match="line 2"):
        parse_floor_quotes(io.StringIO("timestamp,floor_sol,floor_usd\n10,-2,3\n"))


def test_usd_from_exchange_rates():
    rates = parse_rates(io.StringIO("timestamp,sol_usd\n0,40\n100,50\n"))
    s = parse_trades(io.StringIO(HEADER + "50,a,2,\n150,b,3,\n"), rates=rates)
    assert [e.price_usd for e in s] == [80.0, 150.0]


def _trades(times):
    return EventSeries(tuple(TradeEvent(t, f"t{i}", 1.0, 1.0) for i, t in enumerate(sorted(times))))


def test_trim_boundaries():
    t0 = 1_000_000
    s = trim_launch_window(_trades([t0, t0 + 3600, t0 + WEEK, t0 + WEEK + 1]))
    assert [e.timestamp for e in s] == [t0 + WEEK, t0 + WEEK + 1]
    assert s.warning is None


def test_trim_everything_warns():
    s = trim_launch_window(_trades([0, 10, 20]))
    assert len(s) == 0 and "launch window" in s.warning


times_st = st.lists(st.integers(0, 30 * 86400), min_size=1, max_size=40)


@given(times_st)
def test_trim_idempotent(times):
    once = trim_launch_window(_trades(times))
    twice = trim_launch_window(once)
    assert twice.items == once.items
    assert len(once) <= len(times)


price = st.floats(min_value=1e-6, max_value=1e9, allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(st.integers(0, 2**40), st.text("abc#0123456789", min_size=1, max_size=8), price, price),
                max_size=30))
def test_trade_round_trip(rows):
    series = EventSeries(tuple(TradeEvent(*r) for r in sorted(rows, key=lambda r: r[0])))
    buf = io.StringIO()
    write_trades(series, buf)
    back = parse_trades(io.StringIO(buf.getvalue()))
    assert back.items == series.items
    assert len(back) == len(rows)


@given(st.lists(st.tuples(st.integers(0, 2**40), price, price), max_size=30))
def test_floor_round_trip(rows):
    series = EventSeries(tuple(FloorQuote(*r) for r in sorted(rows, key=lambda r: r[0])))
    buf = io.StringIO()
    write_floor_quotes(series, buf)
    assert parse_floor_quotes(io.StringIO(buf.getvalue())).items == series.items
