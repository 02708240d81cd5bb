"""Directional (Gateaux) derivatives of the q=1 string maps.

The derivative of a map ``P{p}`` in the direction of an auxiliary series
``psi`` is ``d^m/d eps^m P{p + eps psi}`` at ``eps = 0``. Closed forms exist
for the 1-end and 2-end maps at q=1 and are implemented here together with
a central finite-difference verifier (which also serves general q).

The 2-end forms are evaluated through the product rule on the two segment
factors ``u = (p_h - p_0)/p_h`` and ``v = (p_l - p_h)/p_l``; this is
algebraically the same as the expanded three-term expressions (kept as
``*_expanded``) but vanishes exactly at both fixed ends in floating point.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GridMismatch, IndexOutOfRange, InvalidParams, SeriesTooShort
from .maps import Topology, one_end_kernel, two_end_kernel

DEFAULT_REL_EPS = 1e-6


class PsiKind(str, Enum):
    UNIT = "unit"
    SPREAD_LAGGED = "spread-lagged"
    PERIODIC = "periodic"
    SERIES_DIRECTED = "series"


@dataclass
class PsiField:
    """Direction series for the derivative.

    ``UNIT`` is psi = 1; ``PERIODIC`` is ``amplitude * cos(2 pi tau / period
    + phase)``; ``SPREAD_LAGGED`` is ``bid[tau] - ask[tau - lag]`` (undefined,
    stored as nan, for ``tau < lag``); ``SERIES_DIRECTED`` uses ``companion``.
    """

    kind: PsiKind = PsiKind.UNIT
    amplitude: float = 1.0
    period: float | None = None
    phase: float = 0.0
    lag: int | None = None
    companion: np.ndarray | None = None

    def __post_init__(self):
        self.kind = PsiKind(self.kind)

    def values(self, n: int, ask=None, bid=None) -> np.ndarray:
        tau = np.arange(n)
        if self.kind is PsiKind.UNIT:
            return np.ones(n)
        if self.kind is PsiKind.PERIODIC:
            if not self.period:
                raise InvalidParams("periodic psi needs a period")
            return self.amplitude * np.cos(2 * math.pi * tau / self.period + self.phase)
        if self.kind is PsiKind.SPREAD_LAGGED:
            if ask is None or bid is None or self.lag is None:
                raise InvalidParams("spread-lagged psi needs ask, bid and lag")
            out = np.full(n, np.nan)
            out[self.lag:] = np.asarray(bid)[self.lag:n] - np.asarray(ask)[:n - self.lag]
            return out
        if self.companion is None or len(self.companion) < n:
            raise InvalidParams("companion series does not cover the price series")
        return np.asarray(self.companion, dtype=np.float64)[:n]


def _points(p, psi, tau, h, l_s=None):
    p = np.asarray(p, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if isinstance(h, (int, np.integer)):
        top = tau + (h if l_s is None else l_s)
        if tau < 0 or h < 0 or top >= len(p) or top >= len(psi):
            raise IndexOutOfRange("derivative window outside series", tau=tau, l_s=l_s)
        if l_s is not None and h > l_s:
            raise IndexOutOfRange("h beyond l_s", tau=tau, l_s=l_s)
        idx = (tau, tau + h) if l_s is None else (tau, tau + h, tau + l_s)
        vals = [float(psi[i]) for i in idx]
        if not all(math.isfinite(v) for v in vals):
            raise IndexOutOfRange("psi undefined inside the window", tau=tau)
        return [float(p[i]) for i in idx], vals
    h = np.asarray(h)
    top = tau + (np.max(h) if l_s is None else l_s)
    if tau < 0 or np.min(h) < 0 or top >= len(p) or top >= len(psi):
        raise IndexOutOfRange("derivative window outside series", tau=tau, l_s=l_s)
    if l_s is not None and np.max(h) > l_s:
        raise IndexOutOfRange("h beyond l_s", tau=tau, l_s=l_s)
    idx = [tau, tau + h] + ([] if l_s is None else [tau + l_s])
    if not np.all(np.isfinite(psi[np.concatenate([np.atleast_1d(i) for i in idx])])):
        raise IndexOutOfRange("psi undefined inside the window", tau=tau)
    return [p[i] for i in idx], [psi[i] for i in idx]


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


# first-order pieces; ratios are formed first so they are exactly 1 at the ends
def _du(p0, ph, s0, sh):
    return ((p0 / ph) * sh - s0) / ph


def _d2u(p0, ph, s0, sh):
    return (2 * sh / (ph * ph)) * (s0 - (p0 / ph) * sh)


def gateaux_d1_1end(p, psi, tau: int, h):
    """``(1/p_h) [p_0 psi_h / p_h - psi_0]``."""
    (p0, ph), (s0, sh) = _points(p, psi, tau, h)
    return _out(_du(p0, ph, s0, sh))


def gateaux_d1_2end(p, psi, tau: int, h, l_s: int):
    """First derivative of the q=1 2-end map, ``u' v + u v'``."""
    (p0, ph, pl), (s0, sh, sl) = _points(p, psi, tau, h, l_s)
    u, v = (ph - p0) / ph, (pl - ph) / pl
    return _out(_du(p0, ph, s0, sh) * v + u * _du(ph, pl, sh, sl))


def gateaux_d1_2end_expanded(p, psi, tau: int, h, l_s: int):
    """Same derivative as three separate terms in ``psi_0``, ``psi_h``, ``psi_l``."""
    (p0, ph, pl), (s0, sh, sl) = _points(p, psi, tau, h, l_s)
    return _out(s0 * (1.0 / pl - 1.0 / ph)
                + sh * (p0 / ph ** 2 - 1.0 / pl)
                + sl / pl ** 2 * (ph - p0))


def gateaux_d2_1end(p, psi, tau: int, h):
    """``(2 psi_h / p_h^2) [psi_0 - p_0 psi_h / p_h]``."""
    (p0, ph), (s0, sh) = _points(p, psi, tau, h)
    return _out(_d2u(p0, ph, s0, sh))


def gateaux_d2_2end(p, psi, tau: int, h, l_s: int):
    """Second derivative of the q=1 2-end map, ``u'' v + 2 u' v' + u v''``."""
    (p0, ph, pl), (s0, sh, sl) = _points(p, psi, tau, h, l_s)
    u, v = (ph - p0) / ph, (pl - ph) / pl
    du, dv = _du(p0, ph, s0, sh), _du(ph, pl, sh, sl)
    return _out(_d2u(p0, ph, s0, sh) * v + 2.0 * du * dv + u * _d2u(ph, pl, sh, sl))


def gateaux_d2_2end_expanded(p, psi, tau: int, h, l_s: int):
    (p0, ph, pl), (s0, sh, sl) = _points(p, psi, tau, h, l_s)
    return _out(2.0 * sl / pl ** 2 * (sh - s0)
                + 2.0 * sh / ph ** 2 * (s0 - p0 * sh / ph)
                + 2.0 * sl ** 2 / pl ** 3 * (p0 - ph))


def gateaux_d2(kind, p, psi, tau: int, h, l_s: int | None = None):
    kind = Topology(kind)
    if kind is Topology.ONE_END:
        return gateaux_d2_1end(p, psi, tau, h)
    if kind is Topology.TWO_END:
        return gateaux_d2_2end(p, psi, tau, h, l_s)
    raise InvalidParams("second derivatives exist for one-end and two-end maps only")


def gateaux_d1(kind, p, psi, tau: int, h, l_s: int | None = None):
    kind = Topology(kind)
    if kind is Topology.ONE_END:
        return gateaux_d1_1end(p, psi, tau, h)
    if kind is Topology.TWO_END:
        return gateaux_d1_2end(p, psi, tau, h, l_s)
    raise InvalidParams("derivatives exist for one-end and two-end maps only")


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def _perturbed(kind, p, psi, tau, h, l_s, q, eps):
    kind = Topology(kind)
    p = np.asarray(p, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    h = np.asarray(h)
    x0 = p[tau] + eps * psi[tau]
    xh = p[tau + h] + eps * psi[tau + h]
    if kind is Topology.ONE_END:
        return one_end_kernel(x0, xh, q)
    xl = p[tau + l_s] + eps * psi[tau + l_s]
    return two_end_kernel(x0, xh, xl, q)


def default_eps(p, psi, tau, l_s, rel: float = DEFAULT_REL_EPS) -> float:
    """``rel`` times the price scale over the direction scale in the window."""
    w = slice(tau, tau + l_s + 1)
    ps = float(np.max(np.abs(np.asarray(p)[w])))
    ss = float(np.max(np.abs(np.asarray(psi)[w])))
    return rel * ps / ss if ss > 0 else rel


def central_difference(kind, p, psi, tau: int, h, l_s: int | None = None, q: float = 1.0,
                       order: int = 1, eps: float | None = None):
    """Numeric derivative of the map along ``psi`` by central differences."""
    if l_s is None:
        l_s = int(np.max(h))
    if eps is None:
        eps = default_eps(p, psi, tau, l_s)
    f = lambda e: _perturbed(kind, p, psi, tau, h, l_s, q, e)  # noqa: E731
    if order == 1:
        return _out((f(eps) - f(-eps)) / (2.0 * eps))
    if order == 2:
        return _out((f(eps) - 2.0 * f(0.0) + f(-eps)) / (eps * eps))
    raise InvalidParams("order must be 1 or 2")


@dataclass
class VerifyReport:
    analytic: float
    eps: list
    errors: list
    observed_order: float
    arithmetic: str = "exact"

    @property
    def max_error(self) -> float:
        return max(self.errors)

    def to_dict(self):
        return {"analytic": self.analytic, "eps": self.eps, "errors": self.errors,
                "max_error": self.max_error, "observed_order": self.observed_order,
                "arithmetic": self.arithmetic}


def _exact_map(kind, x0, xh, xl):
    u = (xh - x0) / xh
    return u if kind is Topology.ONE_END else u * ((xl - xh) / xl)


def _exact_analytic(kind, order, pts, sp):
    if kind is Topology.ONE_END:
        (p0, ph), (s0, sh) = pts[:2], sp[:2]
        return _du(p0, ph, s0, sh) if order == 1 else _d2u(p0, ph, s0, sh)
    (p0, ph, pl), (s0, sh, sl) = pts, sp
    u, v = (ph - p0) / ph, (pl - ph) / pl
    du, dv = _du(p0, ph, s0, sh), _du(ph, pl, sh, sl)
    if order == 1:
        return du * v + u * dv
    return _d2u(p0, ph, s0, sh) * v + 2 * du * dv + u * _d2u(ph, pl, sh, sl)


def verify(kind, p, psi, tau: int, h: int, l_s: int | None = None, order: int = 1,
           eps: float | None = None, halvings: int = 2, exact: bool = True) -> VerifyReport:
    """Compare the closed form with central differences at ``eps / 2**k``.

    ``observed_order`` is the smallest ``log2(e_k / e_{k+1})`` over the
    halvings; second-order accuracy shows up as values near 2. With
    ``exact=True`` both the closed form and the differences are evaluated in
    rational arithmetic on the (exactly representable) float inputs, so the
    errors are pure truncation; otherwise float64 is used throughout and
    roundoff sets a floor near ``1e-16 / eps**order``.
    """
    kind = Topology(kind)
    if kind not in (Topology.ONE_END, Topology.TWO_END):
        raise InvalidParams("derivatives exist for one-end and two-end maps only")
    if order not in (1, 2):
        raise InvalidParams("order must be 1 or 2")
    top = l_s if kind is Topology.TWO_END else h
    fn = gateaux_d1 if order == 1 else gateaux_d2
    analytic = float(fn(kind, p, psi, tau, h, l_s))
    if eps is None:
        eps = default_eps(p, psi, tau, top, rel=1e-3 if not exact else 1e-5)
    steps = [eps / 2 ** k for k in range(halvings + 1)]
    if exact:
        idx = [tau, tau + h, tau + top]
        pts = [Fraction(float(np.asarray(p)[i])) for i in idx]
        sp = [Fraction(float(np.asarray(psi)[i])) for i in idx]
        ref = _exact_analytic(kind, order, pts, sp)

        def f(e):
            return _exact_map(kind, *[x + e * s for x, s in zip(pts, sp)])

        errs = []
        for step in steps:
            e = Fraction(step)
            d = (f(e) - f(-e)) / (2 * e) if order == 1 else (f(e) - 2 * f(0) + f(-e)) / (e * e)
            errs.append(float(abs(d - ref)))
    else:
        errs = [abs(float(central_difference(kind, p, psi, tau, h, l_s, 1.0, order, e)) - analytic)
                for e in steps]
    orders = [math.log2(a / b) if b > 0 else math.inf for a, b in zip(errs, errs[1:])]
    return VerifyReport(analytic, steps, errs, min(orders) if orders else math.nan,
                        "exact" if exact else "float64")


def gateaux_series(kind, p, psi, l_s: int, order: int = 1, stride: int = 1,
                   h: int | None = None):
    """Closed-form derivative at fixed ``h`` (default ``l_s // 2``) for every window.

    Windows touching an undefined (nan) psi value are dropped. Returns
    ``(taus, values)``.
    """
    kind = Topology(kind)
    if kind not in (Topology.ONE_END, Topology.TWO_END):
        raise InvalidParams("derivatives exist for one-end and two-end maps only")
    if order not in (1, 2):
        raise InvalidParams("order must be 1 or 2")
    p = np.asarray(p, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if p.shape != psi.shape:
        raise GridMismatch(f"series lengths differ: {len(p)} vs {len(psi)}")
    h = l_s // 2 if h is None else h
    if not 0 <= h <= l_s:
        raise IndexOutOfRange("h outside [0, l_s]", l_s=l_s)
    taus = np.arange(0, len(p) - l_s, stride)
    if len(taus) == 0:
        raise SeriesTooShort("series too short for the string length", l_s=l_s)
    ok = np.isfinite(psi[taus]) & np.isfinite(psi[taus + h]) & np.isfinite(psi[taus + l_s])
    taus = taus[ok]
    p0, ph, pl = p[taus], p[taus + h], p[taus + l_s]
    s0, sh, sl = psi[taus], psi[taus + h], psi[taus + l_s]
    if kind is Topology.ONE_END:
        return taus, (_du if order == 1 else _d2u)(p0, ph, s0, sh)
    return taus, _exact_analytic(kind, order, (p0, ph, pl), (s0, sh, sl))


def cross_currency_gateaux(p, psi, l_s: int, stride: int = 1):
    """``dP_1^(2)({p}; {psi})`` at ``h = l_s // 2`` for every window start.

    ``p`` and ``psi`` are aligned arrays or grid series (their mid prices are
    used and their timestamps must agree). Returns ``(taus, values)``.
    """
    if hasattr(p, "t") and hasattr(psi, "t"):
        if not np.array_equal(p.t, psi.t):
            raise GridMismatch("series are not on a common grid")
    p = np.asarray(getattr(p, "mid", p), dtype=np.float64)
    psi = np.asarray(getattr(psi, "mid", psi), dtype=np.float64)
    return gateaux_series(Topology.TWO_END, p, psi, l_s, 1, stride)
