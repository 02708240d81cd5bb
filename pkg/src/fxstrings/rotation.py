"""Inter-currency string comparisons on a regular time grid.

Two pairs I, J (or the ask and bid sides of one pair) are each mapped to
a 2-end string P and its time integral X. The ell-1 distance between the
strings and the angular momentum ``sum_h P_I X_J - P_J X_I`` are tracked
over grid time; ``<|M|> / (2 pi l_s**2)`` plays the role of a Regge slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyHistory, GridMismatch, InvalidParams, LengthMismatch, SeriesTooShort
from .ingest import GridSeries
from .maps import (
    ConjugateState,
    StringState,
    conjugate_X,
    conjugate_X_matrix,
    string_2end,
    two_end_kernel,
)
from .stats import CHUNK_CELLS

SECONDS_PER_HOUR = 3600.0


@dataclass
class PairedStrings:
    t: float
    P_I: StringState
    P_J: StringState
    X_I: ConjugateState
    X_J: ConjugateState

    def __post_init__(self):
        n = {len(self.P_I.values), len(self.P_J.values),
             len(self.X_I.values), len(self.X_J.values)}
        if len(n) != 1:
            raise LengthMismatch("paired strings must share one length")


def _vals(s):
    return np.asarray(getattr(s, "values", s), dtype=np.float64)


def pair_distance(ps: PairedStrings) -> float:
    a, b = _vals(ps.P_I), _vals(ps.P_J)
    if a.shape != b.shape:
        raise LengthMismatch("string lengths differ")
    return float(np.abs(a - b).sum() / a.size)


def angular_momentum(ps: PairedStrings) -> float:
    pi, pj, xi, xj = _vals(ps.P_I), _vals(ps.P_J), _vals(ps.X_I), _vals(ps.X_J)
    if not (pi.shape == pj.shape == xi.shape == xj.shape):
        raise LengthMismatch("string lengths differ")
    return float(np.sum(pi * xj - pj * xi))


def paired_strings(p_I, p_J, tau: int, l_s: int, q: float, times) -> PairedStrings:
    """Two-end strings of two series over the same window, with their X."""
    P_I = string_2end(p_I, tau, l_s, q)
    P_J = string_2end(p_J, tau, l_s, q)
    times = np.asarray(times, dtype=np.float64)
    return PairedStrings(float(times[tau]), P_I, P_J,
                         conjugate_X(P_I, times), conjugate_X(P_J, times))


def spread_rotation(p_ask, p_bid, times, tau: int, l_s: int, q: float = 1.0):
    """``(d_ab, M_ab)`` between the ask-side and bid-side strings of one pair."""
    ps = paired_strings(p_ask, p_bid, tau, l_s, q, times)
    return pair_distance(ps), angular_momentum(ps)


def regge_slope(m_history, l_s: float, time_unit: float = 1.0) -> float:
    """``<|M|> / (2 pi (l_s * time_unit)**2)``.

    ``time_unit`` is the duration of one unit of ``l_s`` in the reporting
    unit (hours by convention): ``l_s=360, time_unit=10/3600`` is a one-hour
    string on a 10-second grid.
    """
    m = np.asarray(m_history, dtype=np.float64)
    if m.size == 0:
        raise EmptyHistory("angular momentum history is empty")
    length = l_s * time_unit
    if not length > 0:
        raise InvalidParams("string length must be positive")
    return float(np.mean(np.abs(m)) / (2.0 * math.pi * length ** 2))


@dataclass
class RotationSeries:
    t: np.ndarray  # grid timestamps, ms
    d: np.ndarray
    M: np.ndarray
    l_s: int
    step: float  # grid step, seconds

    def alpha(self, time_unit_seconds: float = SECONDS_PER_HOUR) -> float:
        return regge_slope(self.M, self.l_s, self.step / time_unit_seconds)


def _two_end_rows(p, taus, l_s, q):
    h = np.arange(l_s + 1)
    T = taus[:, None]
    return two_end_kernel(p[T], p[T + h[None, :]], p[T + l_s], q)


def rotation_arrays(p_I, p_J, l_s: int, q: float, dt: float, stride: int = 1):
    """Distance and angular momentum for every window of two aligned series."""
    p_I = np.asarray(p_I, dtype=np.float64)
    p_J = np.asarray(p_J, dtype=np.float64)
    if p_I.shape != p_J.shape:
        raise GridMismatch("series must share one grid")
    taus = np.arange(0, len(p_I) - l_s, stride, dtype=np.int64)
    if len(taus) == 0:
        raise SeriesTooShort("grid too short for the string length", l_s=l_s)
    d = np.empty(len(taus))
    M = np.empty(len(taus))
    rows = max(1, CHUNK_CELLS // (4 * (l_s + 1)))
    for s in range(0, len(taus), rows):
        tt = taus[s:s + rows]
        A = _two_end_rows(p_I, tt, l_s, q)
        B = _two_end_rows(p_J, tt, l_s, q)
        XA = conjugate_X_matrix(A, dt)
        XB = conjugate_X_matrix(B, dt)
        d[s:s + rows] = np.abs(A - B).sum(axis=1) / (l_s + 1)
        M[s:s + rows] = (A * XB - B * XA).sum(axis=1)
    return taus, d, M


def _check_grid(g: GridSeries, other: GridSeries | None = None):
    if not isinstance(g, GridSeries):
        raise GridMismatch("rotation works on grid series; resample ticks first")
    if other is not None and (g.step != other.step or not np.array_equal(g.t, other.t)):
        raise GridMismatch("grids differ; align both pairs on common timestamps")


def align_grids(a: GridSeries, b: GridSeries) -> tuple[GridSeries, GridSeries]:
    """Restrict two grids with the same step to their common timestamps."""
    if a.step != b.step:
        raise GridMismatch("grid steps differ")
    common, ia, ib = np.intersect1d(a.t, b.t, return_indices=True)
    if len(common) < 2:
        raise GridMismatch("grids share fewer than two timestamps")
    return (GridSeries(common, a.ask[ia], a.bid[ia], a.step, a.pair),
            GridSeries(common, b.ask[ib], b.bid[ib], b.step, b.pair))


def rotation_series(grid_I: GridSeries, grid_J: GridSeries, l_s: int, q: float = 6.0,
                    stride: int = 1) -> RotationSeries:
    """d and M between the mid-price strings of two pairs on a shared grid."""
    _check_grid(grid_I, grid_J)
    taus, d, M = rotation_arrays(grid_I.mid, grid_J.mid, l_s, q, grid_I.step, stride)
    return RotationSeries(grid_I.t[taus], d, M, l_s, grid_I.step)


def spread_rotation_series(grid: GridSeries, l_s: int, q: float = 6.0,
                           stride: int = 1) -> RotationSeries:
    """d and M between the ask-side and bid-side strings of one pair."""
    _check_grid(grid)
    taus, d, M = rotation_arrays(grid.ask, grid.bid, l_s, q, grid.step, stride)
    return RotationSeries(grid.t[taus], d, M, l_s, grid.step)
