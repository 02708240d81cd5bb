"""One-dimensional string maps of a price series.

A string map turns the window ``p[tau], ..., p[tau + l_s]`` into a real
sequence over the internal coordinate ``h = 0..l_s`` that is pinned to zero
at one end (1-end-point string) or both ends (2-end-point string). The
variants here add power-law deformation, multiple length scales, the
reciprocal-quote duality with its symmetric/antisymmetric channels, partial
compactification, the 1-end/2-end homotopy and spread-adjusted strings.

Each public map has a single-window form returning a :class:`StringState`.
:func:`window_values` evaluates any :class:`StringConfig` over many window
starts at once and is what the statistics modules build on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidParams, LengthMismatch, NonPositivePrice


class Topology(str, Enum):
    ONE_END = "one-end"
    TWO_END = "two-end"
    MULTI_SCALE = "multi-scale"
    HOMOTOPY = "homotopy"
    SPREAD_ADJUSTED = "spread-adjusted"
    SPREAD_RENEWED = "spread-renewed"


class Channel(str, Enum):
    PLAIN = "plain"
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"


SPREAD_TOPOLOGIES = (Topology.SPREAD_ADJUSTED, Topology.SPREAD_RENEWED)


@dataclass(frozen=True)
class StringConfig:
    """Selects a map and its parameters.

    ``n_m`` > 1 feeds the map with the partially compactified series.
    ``q2`` is the deformation of the 2-end parent in the homotopy map and
    defaults to ``q``. ``scales`` are the node points of the multi-scale map
    and must not exceed ``l_s``.
    """

    topology: Topology = Topology.TWO_END
    q: float = 1.0
    l_s: int = 100
    channel: Channel = Channel.PLAIN
    n_m: int = 1
    eta: float = 0.0
    scales: tuple = ()
    q2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        object.__setattr__(self, "channel", Channel(self.channel))
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        if not self.q > 0 or (self.q2 is not None and not self.q2 > 0):
            raise InvalidParams("q must be positive")
        if int(self.l_s) != self.l_s or self.l_s < 2:
            raise InvalidParams(f"l_s must be an integer >= 2, got {self.l_s}")
        if int(self.n_m) != self.n_m or self.n_m < 1:
            raise InvalidParams("n_m must be an integer >= 1")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidParams("eta must lie in [0, 1]")
        if self.topology is Topology.MULTI_SCALE:
            s = self.scales
            if not s:
                raise InvalidParams("multi-scale topology needs scales")
            if any(b <= a for a, b in zip(s, s[1:])) or s[0] < 0 or s[-1] > self.l_s:
                raise InvalidParams("scales must be strictly increasing within [0, l_s]")

    @property
    def reach(self) -> int:
        """Largest offset from ``tau`` the map reads from the raw series."""
        return self.l_s * self.n_m

    @property
    def deformation2(self) -> float:
        return self.q if self.q2 is None else self.q2


@dataclass
class StringState:
    tau: int
    values: np.ndarray

    @property
    def l_s(self) -> int:
        return len(self.values) - 1

    def __len__(self):
        return len(self.values)


@dataclass
class ConjugateState:
    tau: int
    values: np.ndarray

    @property
    def right_residual(self) -> float:
        """``X[l_s] - X[l_s-1]``; the recurrence does not force it to zero."""
        return float(self.values[-1] - self.values[-2])


def f_q(x, q):
    """Sign-preserving power law ``sign(x) * |x|**q``."""
    if q == 1:
        return np.asarray(x, dtype=np.float64) if np.ndim(x) else float(x)
    out = np.sign(x) * np.power(np.abs(x), q)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# kernels: elementwise in the quotes at tau, tau+h and tau+l_s
# ---------------------------------------------------------------------------

def one_end_kernel(p0, ph, q):
    return f_q((ph - p0) / ph, q)


def two_end_kernel(p0, ph, pl, q):
    return f_q(((ph - p0) / ph) * ((pl - ph) / pl), q)


def spread_kernel(ask0, bid_h, ask_h, bid_l, mid_h, mid_l, q):
    return f_q(((bid_h - ask0) / mid_h) * ((bid_l - ask_h) / mid_l), q)


def _as_prices(p):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidParams("price series must be one-dimensional")
    return p


def _window(p, tau, l_s):
    p = _as_prices(p)
    if tau < 0 or tau + l_s >= len(p):
        raise IndexOutOfRange(f"window [{tau}, {tau + l_s}] outside series of {len(p)}",
                              tau=tau, l_s=l_s)
    w = p[tau:tau + l_s + 1]
    if not np.all(w > 0):
        raise NonPositivePrice("prices must be positive", tau=tau)
    return w


# ---------------------------------------------------------------------------
# single-window maps
# ---------------------------------------------------------------------------

def string_1end(p, tau: int, l_s: int, q: float = 1.0) -> StringState:
    w = _window(p, tau, l_s)
    return StringState(tau, one_end_kernel(w[0], w, q))


def string_2end(p, tau: int, l_s: int, q: float = 1.0) -> StringState:
    w = _window(p, tau, l_s)
    return StringState(tau, two_end_kernel(w[0], w, w[-1], q))


def string_2end_numerator(p, tau: int, h, l_s: int):
    """Numerator of the q=1 two-end map, ``(p[tau+h]-p[tau]) * (p[tau+l_s]-p[tau+h])``."""
    w = _window(p, tau, l_s)
    ph = w[h]
    return (ph - w[0]) * (w[-1] - ph)


def string_numerator_form(p, tau: int, h, l_s: int, beta0: float = 1.0):
    """Degree-2 polynomial numerator fixed by the two Dirichlet conditions.

    Only one free coefficient survives: ``beta0 * (p[tau]-p[tau+h]) *
    (p[tau+l_s]-p[tau+h])``. With ``beta0 = -1`` it is the numerator of the
    q=1 two-end map.
    """
    w = _window(p, tau, l_s)
    ph = w[h]
    return beta0 * (w[0] - ph) * (w[-1] - ph)


def string_multiscale(p, tau: int, scales: Sequence[int], q: float, h):
    """Product over node points ``l_i`` of ``f_q((p[tau+l_i]-p[tau+h])/p[tau+h])``."""
    if not len(scales):
        raise InvalidParams("scales must be non-empty")
    p = _as_prices(p)
    h = np.asarray(h)
    top = tau + max(int(np.max(h)), max(scales))
    if tau < 0 or np.min(h) < 0 or top >= len(p):
        raise IndexOutOfRange("multi-scale window outside series", tau=tau)
    ph = p[tau + h]
    out = np.ones_like(ph, dtype=np.float64)
    for l_i in scales:
        out = out * f_q((p[tau + l_i] - ph) / ph, q)
    return out if out.ndim else float(out)


def conjugate_X(P: StringState, times) -> ConjugateState:
    """Integrate a string in time: ``X[h+1] = X[h] + P[h-1] * dt[h]``.

    ``X[0] = X[1] = 0`` seeds the recurrence. ``times`` (seconds) is either
    the window's own time stamps or the full series' axis indexed by tick.
    """
    l_s = P.l_s
    times = np.asarray(times, dtype=np.float64)
    if len(times) == l_s + 1:
        w = times
    elif len(times) > P.tau + l_s:
        w = times[P.tau:P.tau + l_s + 1]
    else:
        raise LengthMismatch("time axis does not cover the string window", tau=P.tau, l_s=l_s)
    X = np.zeros(l_s + 1)
    dt = np.diff(w)  # dt[h-1] = t(tau+h) - t(tau+h-1)
    X[2:] = np.cumsum(P.values[:l_s - 1] * dt[:l_s - 1])
    return ConjugateState(P.tau, X)


def conjugate_X_matrix(P, dt):
    """Row-wise :func:`conjugate_X` for a (windows, l_s+1) array of strings.

    ``dt`` is a matching (windows, l_s) array of time steps, or a scalar for
    a regular grid.
    """
    P = np.asarray(P, dtype=np.float64)
    n, width = P.shape
    X = np.zeros_like(P)
    if width > 2:
        inc = P[:, :width - 2] * (dt if np.ndim(dt) == 0 else dt[:, :width - 2])
        X[:, 2:] = np.cumsum(inc, axis=1)
    return X


def compactify(p, tau: int, l_s: int, n_m: int) -> np.ndarray:
    """Average ``n_m`` copies of the window shifted by multiples of ``l_s``."""
    p = _as_prices(p)
    if tau < 0 or tau + l_s * n_m >= len(p):
        raise IndexOutOfRange(f"compactification needs index {tau + l_s * n_m}",
                              tau=tau, l_s=l_s)
    j = np.arange(l_s + 1)
    acc = np.zeros(l_s + 1)
    for m in range(n_m):
        acc += p[tau + j + l_s * m]
    return acc / n_m


def compactified_series(p, l_s: int, n_m: int) -> np.ndarray:
    """:func:`compactify` applied at every admissible index of ``p``."""
    p = _as_prices(p)
    if n_m == 1:
        return p
    n = len(p) - l_s * (n_m - 1)
    if n <= 0:
        raise IndexOutOfRange("series too short to compactify", l_s=l_s)
    acc = np.zeros(n)
    for m in range(n_m):
        acc += p[l_s * m:l_s * m + n]
    return acc / n_m


def string_homotopy(p, tau: int, l_s: int, eta: float, q1: float = 1.0,
                    q2: float | None = None) -> StringState:
    """``(1-eta) * P1_{q1} + eta * P2_{q2}``."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidParams("eta must lie in [0, 1]")
    q2 = q1 if q2 is None else q2
    w = _window(p, tau, l_s)
    if eta == 0.0:
        vals = one_end_kernel(w[0], w, q1)
    elif eta == 1.0:
        vals = two_end_kernel(w[0], w, w[-1], q2)
    else:
        vals = (1 - eta) * one_end_kernel(w[0], w, q1) + eta * two_end_kernel(w[0], w, w[-1], q2)
    return StringState(tau, vals)


def _spread_windows(p_ask, p_bid, p_mid, tau, l_s):
    ask = _window(p_ask, tau, l_s)
    bid = _window(p_bid, tau, l_s)
    mid = (ask + bid) / 2.0 if p_mid is None else _window(p_mid, tau, l_s)
    return ask, bid, mid


def string_spread_adjusted(p_ask, p_bid, tau: int, l_s: int, q: float = 1.0,
                           p_mid=None) -> StringState:
    """Two-end map built from spread-crossing returns; not pinned at the ends."""
    ask, bid, mid = _spread_windows(p_ask, p_bid, p_mid, tau, l_s)
    return StringState(tau, spread_kernel(ask[0], bid, ask, bid[-1], mid, mid[-1], q))


def string_spread_renewed(p_ask, p_bid, tau: int, l_s: int, q: float = 1.0,
                          p_mid=None) -> StringState:
    """Spread-adjusted map with its ``h=0`` value subtracted."""
    s = string_spread_adjusted(p_ask, p_bid, tau, l_s, q, p_mid)
    return StringState(tau, s.values - s.values[0])


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------

def dual_transform(map_fn: Callable, p, *args, **kwargs):
    """Evaluate ``map_fn`` on the reciprocal quotation ``1/p``."""
    return map_fn(1.0 / _as_prices(p), *args, **kwargs)


def dual_transform_ab(map_fn: Callable, p_ask, p_bid, *args, **kwargs):
    """Evaluate a two-quote map with ``(ask, bid) -> (1/bid, 1/ask)``."""
    return map_fn(1.0 / _as_prices(p_bid), 1.0 / _as_prices(p_ask), *args, **kwargs)


def _combine(a, b, sign):
    if hasattr(a, "values"):
        return type(a)(a.tau, (a.values + sign * b.values) / 2.0)
    return (np.asarray(a) + sign * np.asarray(b)) / 2.0


def symmetry_channel(map_fn: Callable, channel, ab: bool = False) -> Callable:
    """Wrap a map into its symmetric or antisymmetric part under duality.

    The returned callable has the signature of ``map_fn``. ``ab=True`` marks
    maps whose first two arguments are ask and bid series.
    """
    channel = Channel(channel)
    if channel is Channel.PLAIN:
        return map_fn
    sign = 1.0 if channel is Channel.SYMMETRIC else -1.0
    dual = dual_transform_ab if ab else dual_transform

    def projected(*args, **kwargs):
        return _combine(map_fn(*args, **kwargs), dual(map_fn, *args, **kwargs), sign)

    projected.__name__ = f"{getattr(map_fn, '__name__', 'map')}_{channel.value}"
    return projected


# ---------------------------------------------------------------------------
# bulk evaluation over window starts
# ---------------------------------------------------------------------------

@dataclass
class Quotes:
    """The series a map reads. ``ask``/``bid`` are needed by spread maps only."""

    p: np.ndarray
    ask: np.ndarray | None = None
    bid: np.ndarray | None = None

    @classmethod
    def of(cls, p=None, ask=None, bid=None) -> "Quotes":
        ask = None if ask is None else _as_prices(ask)
        bid = None if bid is None else _as_prices(bid)
        if p is None:
            if ask is None or bid is None:
                raise InvalidParams("need a price series or both ask and bid")
            p = (ask + bid) / 2.0
        return cls(_as_prices(p), ask, bid)

    def __len__(self):
        return len(self.p)

    def dual(self) -> "Quotes":
        if self.ask is None:
            return Quotes(1.0 / self.p)
        ask, bid = 1.0 / self.bid, 1.0 / self.ask
        return Quotes((ask + bid) / 2.0, ask, bid)

    def compactified(self, l_s: int, n_m: int) -> "Quotes":
        if n_m == 1:
            return self
        c = lambda a: None if a is None else compactified_series(a, l_s, n_m)  # noqa: E731
        return Quotes(c(self.p), c(self.ask), c(self.bid))


def _plain_values(quotes: Quotes, taus, hs, cfg: StringConfig):
    src = quotes.compactified(cfg.l_s, cfg.n_m)
    T = taus[:, None]
    H = T + hs[None, :]
    L = T + cfg.l_s
    top, q = cfg.topology, cfg.q
    if top in SPREAD_TOPOLOGIES:
        a, b, m = src.ask, src.bid, src.p
        vals = spread_kernel(a[T], b[H], a[H], b[L], m[H], m[L], q)
        if top is Topology.SPREAD_RENEWED:
            vals = vals - spread_kernel(a[T], b[T], a[T], b[L], m[T], m[L], q)
        return vals
    p = src.p
    if top is Topology.ONE_END:
        return one_end_kernel(p[T], p[H], q)
    if top is Topology.TWO_END:
        return two_end_kernel(p[T], p[H], p[L], q)
    if top is Topology.HOMOTOPY:
        p0, ph = p[T], p[H]
        one = one_end_kernel(p0, ph, q)
        two = two_end_kernel(p0, ph, p[L], cfg.deformation2)
        return (1 - cfg.eta) * one + cfg.eta * two
    if top is Topology.MULTI_SCALE:
        ph = p[H]
        out = np.ones(np.broadcast_shapes(T.shape, H.shape))
        for l_i in cfg.scales:
            out = out * f_q((p[T + l_i] - ph) / ph, q)
        return out
    raise InvalidParams(f"unknown topology {top}")


def window_starts(n: int, cfg: StringConfig, stride: int = 1, start: int = 0) -> np.ndarray:
    """All admissible window starts of a series of length ``n``."""
    if stride < 1:
        raise InvalidParams("stride must be >= 1")
    return np.arange(start, n - cfg.reach, stride, dtype=np.int64)


def window_values(quotes: Quotes, taus, hs, cfg: StringConfig) -> np.ndarray:
    """Map values for every (window start, h) pair, shape ``(len(taus), len(hs))``."""
    taus = np.atleast_1d(np.asarray(taus, dtype=np.int64))
    hs = np.atleast_1d(np.asarray(hs, dtype=np.int64))
    if cfg.topology in SPREAD_TOPOLOGIES and quotes.ask is None:
        raise InvalidParams("spread-adjusted maps need ask and bid series")
    if len(taus) and (taus.min() < 0 or taus.max() + cfg.reach >= len(quotes)):
        raise IndexOutOfRange("window start outside series", l_s=cfg.l_s)
    if len(hs) and (hs.min() < 0 or hs.max() > cfg.l_s):
        raise IndexOutOfRange("h outside [0, l_s]", l_s=cfg.l_s)
    base = _plain_values(quotes, taus, hs, cfg)
    if cfg.channel is Channel.PLAIN:
        return base
    dual = _plain_values(quotes.dual(), taus, hs, cfg)
    sign = 1.0 if cfg.channel is Channel.SYMMETRIC else -1.0
    return (base + sign * dual) / 2.0


def evaluate(cfg: StringConfig, tau: int, p=None, ask=None, bid=None) -> StringState:
    """One string state for an arbitrary configuration."""
    quotes = Quotes.of(p, ask, bid)
    if not (np.all(quotes.p > 0)):
        raise NonPositivePrice("prices must be positive", tau=tau)
    vals = window_values(quotes, [tau], np.arange(cfg.l_s + 1), cfg)[0]
    return StringState(tau, vals)
