"""Strings polarized by the buy condition, distances and correlation sums.

Two latched string states follow the unconditioned map: the ``plus``
branch is overwritten whenever a buy at ``tau`` closes at ``tau + l_s``
without loss (``bid[tau+l_s] >= ask[tau]``), the ``minus`` branch otherwise.
The polarization measure, inter-string distances and the correlation sum
with its log-log slope are computed over the latched history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from .brane import BraneState
from .errors import (
    AllDenominatorsZero,
    EmptyDistances,
    InsufficientFitPoints,
    InvalidParams,
    LengthMismatch,
    SeriesTooShort,
    ShapeMismatch,
)
from .maps import Quotes, StringConfig, StringState, window_starts, window_values
from .stats import CHUNK_CELLS, buy_condition

DEFAULT_EPS_POINTS = 64


@dataclass
class PolarizedPair:
    plus: StringState | None = None
    minus: StringState | None = None

    @property
    def warm(self) -> tuple[bool, bool]:
        return self.plus is not None, self.minus is not None

    @property
    def ready(self) -> bool:
        return self.plus is not None and self.minus is not None


def polarize_step(pair: PolarizedPair, P: StringState, ask_tau: float,
                  bid_tau_ls: float) -> PolarizedPair:
    """Latch ``P`` into ``plus`` if ``bid_tau_ls >= ask_tau``, else into ``minus``."""
    if bid_tau_ls >= ask_tau:
        return PolarizedPair(P, pair.minus)
    return PolarizedPair(pair.plus, P)


def _values(s):
    return np.asarray(getattr(s, "values", s), dtype=np.float64)


def window_ratio(plus, minus) -> float:
    """``sum|P+ - P-| / sum|P+ + P-|`` for one window (nan if the denominator is 0)."""
    a, b = _values(plus), _values(minus)
    den = np.abs(a + b).sum()
    return float(np.abs(a - b).sum() / den) if den > 0 else math.nan


def polarization_measure(history) -> float:
    """Average window ratio over a history of :class:`PolarizedPair`.

    Pairs without both branches assigned and windows whose denominator is
    zero are left out of the average.
    """
    ratios = [window_ratio(p.plus, p.minus) for p in history if p.ready]
    ratios = [r for r in ratios if not math.isnan(r)]
    if not ratios:
        raise AllDenominatorsZero("no window with a non-zero denominator")
    return float(np.mean(ratios))


def string_distance(a, b) -> float:
    """Mean absolute difference over ``h = 0..l_s``."""
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise LengthMismatch(f"string lengths differ: {va.shape} vs {vb.shape}")
    return float(np.abs(va - vb).sum() / va.size)


def brane_distance(a: BraneState, b: BraneState) -> float:
    """Mean absolute cell difference over the ``(l_s+1)**2`` grid."""
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise ShapeMismatch(f"brane shapes differ: {va.shape} vs {vb.shape}")
    return float(np.abs(va - vb).sum() / va.size)


def latch_indices(cond: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Window index last latched into each branch after each step (-1 if none).

    Entry ``i`` describes the pair after processing window ``i`` of the
    sequence, matching repeated :func:`polarize_step` calls.
    """
    cond = np.asarray(cond, dtype=bool)
    idx = np.arange(len(cond))
    plus = np.maximum.accumulate(np.where(cond, idx, -1)) if len(cond) else idx
    minus = np.maximum.accumulate(np.where(~cond, idx, -1)) if len(cond) else idx
    return plus, minus


@dataclass
class PolarizationSeries:
    """Per-window polarization output, restricted to warm windows."""

    tau: np.ndarray
    ratio: np.ndarray  # nan where the denominator vanishes
    distance: np.ndarray
    excluded: int = 0  # warm windows with zero denominator
    cold: int = 0  # windows before both branches were assigned
    t: np.ndarray | None = field(default=None, repr=False)

    @property
    def g(self) -> float:
        r = self.ratio[~np.isnan(self.ratio)]
        if len(r) == 0:
            raise AllDenominatorsZero("no window with a non-zero denominator")
        return float(np.mean(r))


def polarization_series(ask, bid, cfg: StringConfig, stride: int = 1, t=None) -> PolarizationSeries:
    """Run the latch over all window starts and collect ratios and distances.

    ``cfg`` selects the unconditioned map and channel. ``t`` (milliseconds)
    is carried through for export.
    """
    quotes = Quotes.of(None, ask, bid)
    taus = window_starts(len(quotes), cfg, stride)
    if len(taus) == 0:
        raise SeriesTooShort("series too short for polarization", l_s=cfg.l_s)
    cond = buy_condition(quotes.ask, quotes.bid, taus, cfg.l_s)
    ip, im = latch_indices(cond)
    warm = (ip >= 0) & (im >= 0)
    cold = int((~warm).sum())
    ip, im, wt = ip[warm], im[warm], taus[warm]
    hs = np.arange(cfg.l_s + 1)
    ratio = np.empty(len(wt))
    dist = np.empty(len(wt))
    rows = max(1, CHUNK_CELLS // (2 * len(hs)))
    for s in range(0, len(wt), rows):
        a = window_values(quotes, taus[ip[s:s + rows]], hs, cfg)
        b = window_values(quotes, taus[im[s:s + rows]], hs, cfg)
        num = np.abs(a - b).sum(axis=1)
        den = np.abs(a + b).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio[s:s + rows] = np.where(den > 0, num / den, np.nan)
        dist[s:s + rows] = num / len(hs)
    tt = None if t is None else np.asarray(t)[wt]
    return PolarizationSeries(wt, ratio, dist, int(np.isnan(ratio).sum()), cold, tt)


# ---------------------------------------------------------------------------
# correlation sum and fractal dimension
# ---------------------------------------------------------------------------

@dataclass
class CorrelationSum:
    epsilon: np.ndarray
    raw: np.ndarray  # fraction of distances <= epsilon
    C: np.ndarray  # raw / trapezoid integral of raw over the epsilon grid


def default_epsilon_grid(distances, points: int = DEFAULT_EPS_POINTS) -> np.ndarray:
    """Log grid from half the smallest positive distance to twice the largest."""
    d = np.asarray(distances, dtype=np.float64)
    pos = d[d > 0]
    if len(pos) == 0:
        raise EmptyDistances("no positive distances to span a grid")
    return np.geomspace(pos.min() / 2.0, 2.0 * pos.max(), points)


def correlation_sum(distances, epsilons=None) -> CorrelationSum:
    d = np.sort(np.asarray(distances, dtype=np.float64))
    if len(d) == 0:
        raise EmptyDistances("correlation sum needs at least one distance")
    eps = default_epsilon_grid(d) if epsilons is None else np.asarray(epsilons, dtype=np.float64)
    if np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
        raise InvalidParams("epsilons must be positive and strictly ascending")
    raw = np.searchsorted(d, eps, side="right") / len(d)
    norm = np.trapezoid(raw, eps) if len(eps) > 1 else 1.0
    C = raw / norm if norm > 0 else np.zeros_like(raw)
    return CorrelationSum(eps, raw, C)


@dataclass
class FractalFit:
    dimension: float
    stderr: float
    fit_lo: float
    fit_hi: float
    points: int

    def to_dict(self):
        return {"D_F": self.dimension, "stderr": self.stderr, "fit_lo": self.fit_lo,
                "fit_hi": self.fit_hi, "points": self.points}


def fractal_dimension(epsilons, C, fit_lo: float, fit_hi: float) -> FractalFit:
    """Least-squares slope of ``ln C`` against ``ln eps`` inside the fit range.

    Points with ``C == 0`` are dropped; at least three must remain.
    """
    eps = np.asarray(epsilons, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    sel = (eps >= fit_lo) & (eps <= fit_hi) & (C > 0)
    if sel.sum() < 3:
        raise InsufficientFitPoints(f"only {int(sel.sum())} usable points in [{fit_lo}, {fit_hi}]")
    fit = sstats.linregress(np.log(eps[sel]), np.log(C[sel]))
    return FractalFit(float(fit.slope), float(fit.stderr), float(fit_lo), float(fit_hi),
                      int(sel.sum()))
