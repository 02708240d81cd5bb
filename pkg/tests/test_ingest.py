import gzip
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fxstrings.errors import (
    EmptyWindow,
    InvertedSpread,
    MalformedLine,
    NonMonotoneTimestamp,
    NonPositivePrice,
    SeriesTooShort,
)
from fxstrings.ingest import (
    ColumnMap,
    GridSeries,
    Tick,
    TickSeries,
    decimate,
    mean_window_time,
    mid_price,
    parse_ticks,
    read_ticks,
    resample_grid,
    write_ticks,
)

from conftest import uniform_ticks

TWO = "1249052797000,1.6601,1.6599\n1249052798000,1.6603,1.6601"


def test_parse_two_ticks():
    s = parse_ticks(TWO)
    assert len(s) == 2
    assert s[0] == Tick(1249052797000, 1.6601, 1.6599)
    assert s.t.dtype == np.int64


def test_parse_header_and_column_order():
    text = "time,bid,ask\n1000,1.1,1.2\n2000,1.15,1.25\n"
    s = parse_ticks(text, ColumnMap.parse("t,bid,ask"))
    assert s.ask.tolist() == [1.2, 1.25]
    assert s.bid.tolist() == [1.1, 1.15]


def test_inverted_spread_rejected():
    with pytest.raises(InvertedSpread) as e:
        parse_ticks("1249052797000,1.6601,1.6599\n1249052798000,1.6599,1.6601")
    assert e.value.line == 2


def test_garbled_middle_line():
    text = "1000,1.2,1.1\n2000,x!,??\n3000,1.3,1.2\n"
    with pytest.raises(MalformedLine) as e:
        parse_ticks(text)
    assert e.value.line == 2
    assert len(parse_ticks(text, skip_invalid=True)) == 2


def test_nonmonotone_and_nonpositive():
    with pytest.raises(NonMonotoneTimestamp):
        parse_ticks("2000,1.2,1.1\n1000,1.2,1.1\n")
    with pytest.raises(NonPositivePrice):
        parse_ticks("1000,1.2,1.1\n2000,0,0\n")


def test_equal_timestamps_kept_in_order():
    s = parse_ticks("1000,1.2,1.1\n1000,1.3,1.2\n")
    assert s.ask.tolist() == [1.2, 1.3]


def test_gzip_and_bytes_inputs(tmp_path):
    f = tmp_path / "eurusd.csv.gz"
    f.write_bytes(gzip.compress(TWO.encode()))
    assert len(read_ticks(f)) == 2
    assert read_ticks(f).pair == "eurusd"
    assert parse_ticks(gzip.compress(TWO.encode())) == parse_ticks(TWO)


def test_write_roundtrip():
    s = parse_ticks(TWO)
    buf = io.StringIO()
    write_ticks(s, buf)
    assert buf.getvalue().splitlines()[0] == "epoch_ms,ask,bid"
    assert parse_ticks(buf.getvalue()) == s


def test_mid_price():
    assert mid_price(Tick(0, 1.6601, 1.6599)) == pytest.approx(1.66, abs=1e-15)
    assert mid_price(Tick(0, 2.0, 2.0)) == 2.0
    assert mid_price(Tick(0, 1.5, 1.499)) == pytest.approx(1.4995, abs=1e-15)


def test_decimate_examples():
    s = uniform_ticks(25)
    d = decimate(s, 10)
    assert len(d) == 3 and d.t.tolist() == [0, 10000, 20000]
    assert decimate(s, 1) == s
    assert len(decimate(uniform_ticks(100), 10)) == 10


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 300), st.integers(1, 12), st.integers(1, 12))
def test_decimate_composes(n, a, b):
    s = uniform_ticks(n)
    if (n - 1) // (a * b) < 1:
        with pytest.raises(Exception):
            decimate(s, a * b)
        return
    assert decimate(decimate(s, a), b) == decimate(s, a * b)


def _ticks(ts, prices):
    p = np.asarray(prices, dtype=float)
    return TickSeries(np.asarray(ts, dtype=np.int64), p, p)


def test_resample_previous_tick():
    s = _ticks([0, 4000, 13000, 21000], [1.0, 2.0, 3.0, 4.0])
    g = resample_grid(s, 10.0)
    assert g.t.tolist() == [10000, 20000]
    assert g.ask.tolist() == [2.0, 3.0]


def test_resample_counts_and_constant():
    s = _ticks(np.arange(0, 61000, 1000), np.ones(61))
    g = resample_grid(s, 10.0)
    assert len(g) == 6
    assert np.all(g.ask == 1.0)
    assert np.all(np.diff(g.t) == 10000)


def test_resample_too_short():
    with pytest.raises(EmptyWindow):
        resample_grid(_ticks([1000, 5000], [1.0, 1.0]), 10.0)


def test_grid_rejects_irregular():
    with pytest.raises(ValueError):
        GridSeries([0, 10000, 25000], [1.0] * 3, [1.0] * 3, 10.0)


def test_mean_window_time():
    assert mean_window_time(uniform_ticks(2001), 1000) == 1000.0
    assert mean_window_time(np.array([0, 1000, 3000, 6000]), 1) == 2.0
    assert mean_window_time(uniform_ticks(5), 0) == 0.0
    with pytest.raises(SeriesTooShort):
        mean_window_time(uniform_ticks(5), 5)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 50), st.integers(1, 5000))
def test_mean_window_time_additive_on_uniform(l, dt):
    s = uniform_ticks(2 * l + 3, dt)
    assert mean_window_time(s, 2 * l) == 2 * mean_window_time(s, l)
