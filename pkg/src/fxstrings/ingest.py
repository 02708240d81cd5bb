"""Tick file parsing, decimation and resampling onto a regular time grid.

Tick files are plain CSV with one quote per line, ``epoch_ms,ask,bid`` by
default. A header line is allowed and the column order can be remapped.
Series are held as parallel numpy arrays; timestamps stay integer
milliseconds so window-time averages are computed exactly.
"""

from __future__ import annotations

import gzip
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    EmptyWindow,
    InvalidParams,
    InvertedSpread,
    MalformedLine,
    NonMonotoneTimestamp,
    NonPositivePrice,
    SeriesTooShort,
)

logger = logging.getLogger(__name__)

DEFAULT_DECIMATION = 10
DEFAULT_GRID_STEP = 10.0  # seconds


class Tick(NamedTuple):
    t: int  # epoch milliseconds
    p_ask: float
    p_bid: float

    @property
    def mid(self) -> float:
        return mid_price(self)


@dataclass(frozen=True)
class ColumnMap:
    """Zero-based positions of the time, ask and bid columns."""

    t: int = 0
    ask: int = 1
    bid: int = 2
    delimiter: str = ","

    @classmethod
    def parse(cls, spec: str) -> "ColumnMap":
        """Build from an order string such as ``"t,ask,bid"`` or ``"t,bid,ask"``."""
        names = [s.strip() for s in spec.split(",")]
        if sorted(names) != ["ask", "bid", "t"]:
            raise InvalidParams(f"column order must name t, ask and bid once each: {spec!r}")
        return cls(t=names.index("t"), ask=names.index("ask"), bid=names.index("bid"))


def _validated(t, ask, bid):
    t = np.ascontiguousarray(t, dtype=np.int64)
    ask = np.ascontiguousarray(ask, dtype=np.float64)
    bid = np.ascontiguousarray(bid, dtype=np.float64)
    if not (t.shape == ask.shape == bid.shape) or t.ndim != 1:
        raise InvalidParams("t, ask and bid must be 1-D arrays of equal length")
    return t, ask, bid


class TickSeries:
    """Ordered quotes for one currency pair.

    Invariants checked on construction: at least two ticks, non-decreasing
    timestamps, positive prices and ``ask >= bid``.
    """

    __slots__ = ("pair", "t", "ask", "bid")

    def __init__(self, t, ask, bid, pair: str = ""):
        t, ask, bid = _validated(t, ask, bid)
        if len(t) < 2:
            raise SeriesTooShort("a tick series needs at least two ticks", pair=pair or None)
        if np.any(np.diff(t) < 0):
            i = int(np.argmax(np.diff(t) < 0)) + 1
            raise NonMonotoneTimestamp(f"timestamp decreases at tick {i}", tick=i)
        if not (np.all(ask > 0) and np.all(bid > 0)):
            i = int(np.argmax(~((ask > 0) & (bid > 0))))
            raise NonPositivePrice(f"non-positive price at tick {i}", tick=i)
        if np.any(bid > ask):
            i = int(np.argmax(bid > ask))
            raise InvertedSpread(f"bid above ask at tick {i}", tick=i)
        for a in (t, ask, bid):
            a.setflags(write=False)
        self.pair = pair
        self.t = t
        self.ask = ask
        self.bid = bid

    @classmethod
    def from_ticks(cls, ticks, pair: str = "") -> "TickSeries":
        ticks = list(ticks)
        return cls([k.t for k in ticks], [k.p_ask for k in ticks], [k.p_bid for k in ticks], pair)

    @property
    def mid(self) -> np.ndarray:
        return (self.ask + self.bid) / 2.0

    @property
    def seconds(self) -> np.ndarray:
        """Timestamps in seconds relative to the first tick."""
        return (self.t - self.t[0]) / 1000.0

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i) -> Tick:
        return Tick(int(self.t[i]), float(self.ask[i]), float(self.bid[i]))

    def __iter__(self) -> Iterator[Tick]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, TickSeries):
            return NotImplemented
        return (
            self.pair == other.pair
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.ask, other.ask)
            and np.array_equal(self.bid, other.bid)
        )

    def __repr__(self):
        return f"TickSeries(pair={self.pair!r}, n={len(self)})"


class GridSeries:
    """Quotes sampled on a regular grid with spacing ``step`` seconds."""

    __slots__ = ("pair", "step", "t", "ask", "bid")

    def __init__(self, t, ask, bid, step: float, pair: str = ""):
        t, ask, bid = _validated(t, ask, bid)
        step_ms = int(round(step * 1000))
        if len(t) > 1 and np.any(np.diff(t) != step_ms):
            raise InvalidParams("grid timestamps must be spaced by exactly one step")
        self.pair = pair
        self.step = float(step)
        self.t = t
        self.ask = ask
        self.bid = bid

    @property
    def mid(self) -> np.ndarray:
        return (self.ask + self.bid) / 2.0

    @property
    def seconds(self) -> np.ndarray:
        return (self.t - self.t[0]) / 1000.0

    def __len__(self) -> int:
        return len(self.t)

    def __repr__(self):
        return f"GridSeries(pair={self.pair!r}, step={self.step}, n={len(self)})"


def _open_source(source) -> Iterator[str]:
    if isinstance(source, str) and "\n" not in source and Path(source).is_file():
        source = Path(source)
    if isinstance(source, Path):
        raw = source.read_bytes()
        if source.suffix == ".gz":
            raw = gzip.decompress(raw)
        return io.StringIO(raw.decode("utf-8"))
    if isinstance(source, bytes):
        if source[:2] == b"\x1f\x8b":
            source = gzip.decompress(source)
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    return source  # file-like, text mode


def parse_ticks(source, columns: ColumnMap | None = None, pair: str = "",
                skip_invalid: bool = False) -> TickSeries:
    """Parse CSV tick records into a validated :class:`TickSeries`.

    ``source`` may be a path (``.gz`` is decompressed), raw bytes, CSV text
    or an open text stream. A first line whose time field is not an integer
    is treated as a header. Bad records raise an error carrying the 1-based
    line number unless ``skip_invalid`` is set, in which case they are
    dropped and counted in the log.
    """
    cols = columns or ColumnMap()
    width = max(cols.t, cols.ask, cols.bid) + 1
    ts, asks, bids = [], [], []
    skipped = 0
    last_t = None
    for lineno, line in enumerate(_open_source(source), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(cols.delimiter)
        try:
            if len(fields) < width:
                raise MalformedLine(f"line {lineno}: expected {width} fields", line=lineno)
            try:
                t = int(fields[cols.t])
                ask = float(fields[cols.ask])
                bid = float(fields[cols.bid])
            except ValueError:
                if lineno == 1 and not ts:
                    continue  # header
                raise MalformedLine(f"line {lineno}: cannot parse {line!r}", line=lineno) from None
            if not (ask > 0 and bid > 0) or not (np.isfinite(ask) and np.isfinite(bid)):
                raise NonPositivePrice(f"line {lineno}: prices must be positive", line=lineno)
            if bid > ask:
                raise InvertedSpread(f"line {lineno}: bid {bid} above ask {ask}", line=lineno)
            if last_t is not None and t < last_t:
                raise NonMonotoneTimestamp(f"line {lineno}: timestamp goes backwards", line=lineno)
        except MalformedLine:
            if not skip_invalid:
                raise
            skipped += 1
            continue
        ts.append(t)
        asks.append(ask)
        bids.append(bid)
        last_t = t
    if skipped:
        logger.warning("skipped %d invalid records", skipped)
    return TickSeries(ts, asks, bids, pair=pair)


def read_ticks(path, columns: ColumnMap | None = None, pair: str = "",
               skip_invalid: bool = False) -> TickSeries:
    path = Path(path)
    return parse_ticks(path, columns=columns, pair=pair or path.stem.split(".")[0],
                       skip_invalid=skip_invalid)


def write_ticks(series, fh) -> None:
    """Write ``epoch_ms,ask,bid`` CSV (works for tick and grid series)."""
    fh.write("epoch_ms,ask,bid\n")
    for t, a, b in zip(series.t.tolist(), series.ask.tolist(), series.bid.tolist()):
        fh.write(f"{t},{a!r},{b!r}\n")


def decimate(series: TickSeries, factor: int = DEFAULT_DECIMATION) -> TickSeries:
    """Keep every ``factor``-th tick, starting with the first."""
    if factor < 1 or int(factor) != factor:
        raise InvalidParams(f"decimation factor must be a positive integer, got {factor}")
    if factor == 1:
        return series
    s = slice(None, None, int(factor))
    return TickSeries(series.t[s], series.ask[s], series.bid[s], pair=series.pair)


def mid_price(tick: Tick) -> float:
    return (tick.p_ask + tick.p_bid) / 2.0


def resample_grid(series: TickSeries, step: float = DEFAULT_GRID_STEP) -> GridSeries:
    """Project ticks onto a regular grid by previous-tick sampling.

    The first grid point is the first whole multiple of ``step`` strictly
    after the first tick; the last is the final multiple not later than the
    last tick. Each point carries the latest quote with ``t <= g``.
    """
    step_ms = int(round(step * 1000))
    if step_ms <= 0:
        raise InvalidParams("grid step must be positive")
    t = series.t
    g0 = (int(t[0]) // step_ms + 1) * step_ms
    g1 = (int(t[-1]) // step_ms) * step_ms
    if g1 < g0:
        raise EmptyWindow("series spans less than one grid step", pair=series.pair or None)
    grid = np.arange(g0, g1 + step_ms, step_ms, dtype=np.int64)
    idx = np.searchsorted(t, grid, side="right") - 1
    return GridSeries(grid, series.ask[idx], series.bid[idx], step=step, pair=series.pair)


def mean_window_time(t, l_s: int) -> float:
    """Mean duration in seconds spanned by a window of ``l_s`` ticks.

    ``t`` is a :class:`TickSeries` or an array of epoch milliseconds. All
    admissible window starts are averaged, weekend gaps included.
    """
    if hasattr(t, "t"):
        t = t.t
    t = np.asarray(t, dtype=np.int64)
    if l_s < 0:
        raise InvalidParams("l_s must be non-negative")
    if l_s == 0:
        return 0.0
    if len(t) <= l_s:
        raise SeriesTooShort(f"series of {len(t)} ticks is too short for l_s={l_s}", l_s=l_s)
    spans = t[l_s:] - t[:-l_s]
    return int(spans.sum()) / len(spans) / 1000.0
