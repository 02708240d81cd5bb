"""Two-dimensional brane maps over ask/bid quotes and product-form branes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidParams, ShapeMismatch
from .maps import _as_prices, _window, f_q, one_end_kernel

MAX_BRANE_LENGTH = 4096  # (l_s+1)**2 doubles per state


@dataclass
class BraneState:
    tau: int
    values: np.ndarray  # (l_s+1, l_s+1), indexed [h1, h2]

    @property
    def l_s(self) -> int:
        return self.values.shape[0] - 1

    @property
    def T(self) -> "BraneState":
        return BraneState(self.tau, self.values.T.copy())


def ask_factor(ask: np.ndarray) -> np.ndarray:
    """Two-segment ask product along h1 for one window."""
    return ((ask - ask[0]) / ask) * ((ask[-1] - ask) / ask[-1])


def bid_factor(bid: np.ndarray) -> np.ndarray:
    """Two-segment bid product along h2 (orientation reversed w.r.t. ask)."""
    return ((bid[0] - bid) / bid[0]) * ((bid - bid[-1]) / bid)


def brane_2d(p_ask, p_bid, tau: int, l_s: int, q: float = 1.0) -> BraneState:
    """``f_q(A(h1) * B(h2))`` with A, B the ask and bid two-segment products.

    f_q is multiplicative, so the grid is formed as the outer product of the
    deformed factors; every edge row/column is zero exactly.
    """
    if l_s > MAX_BRANE_LENGTH:
        raise InvalidParams(f"brane length {l_s} exceeds cap {MAX_BRANE_LENGTH}")
    A = ask_factor(_window(p_ask, tau, l_s))
    B = bid_factor(_window(p_bid, tau, l_s))
    return BraneState(tau, np.multiply.outer(f_q(A, q), f_q(B, q)))


def brane_symmetrize(brane: BraneState, sign: int = 1) -> BraneState:
    """``B + sign * B^T``: (anti)symmetric combination under coordinate swap."""
    v = brane.values
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ShapeMismatch("brane grid must be square")
    if sign not in (1, -1):
        raise InvalidParams("sign must be +1 or -1")
    return BraneState(brane.tau, v + sign * v.T)


def compact_partial_sum(p, tau: int, l_j: int, n_m: int, direction: int = 1):
    """``sum_{m<n_m} p[tau + direction*m*l_j]``; no ``1/n_m`` normalisation.

    ``tau`` may be an integer array.
    """
    p = _as_prices(p)
    tau = np.asarray(tau)
    lo = np.min(tau) + min(0, direction * (n_m - 1) * l_j)
    hi = np.max(tau) + max(0, direction * (n_m - 1) * l_j)
    if lo < 0 or hi >= len(p):
        raise IndexOutOfRange("compactified sum leaves the series", l_s=l_j)
    acc = np.zeros(tau.shape)
    for m in range(n_m):
        acc = acc + p[tau + direction * m * l_j]
    return acc


def brane_general(p, tau: int, h: Sequence[int], scales: Sequence[int] = (),
                  counts: Sequence[int] = (), q: float = 1.0,
                  directions: Sequence[int] = ()) -> float:
    """Product of a plain 1-end factor in ``h[0]`` and one 1-end factor per
    extra dimension ``j`` built on the partially compactified sum
    ``sum_m p[tau +/- m * scales[j]]`` over ``counts[j]`` terms.
    """
    p = _as_prices(p)
    h = [int(x) for x in h]
    d = len(h) - 1
    if d < 0:
        raise InvalidParams("need at least the coordinate h0")
    scales = list(scales) or [1] * d
    counts = list(counts) or [1] * d
    directions = list(directions) or [1] * d
    if not (len(scales) == len(counts) == len(directions) == d):
        raise InvalidParams("per-dimension lists must have one entry per extra coordinate")
    if tau < 0 or tau + h[0] >= len(p):
        raise IndexOutOfRange("h0 outside series", tau=tau)
    out = one_end_kernel(p[tau], p[tau + h[0]], q)
    for hj, l_j, n_j, s_j in zip(h[1:], scales, counts, directions):
        if s_j not in (1, -1):
            raise InvalidParams("directions must be +1 or -1")
        base = compact_partial_sum(p, tau, l_j, n_j, s_j)
        moved = compact_partial_sum(p, tau + hj, l_j, n_j, s_j)
        out *= one_end_kernel(base, moved, q)
    return float(out)


def write_matrix_csv(brane: BraneState, fh) -> None:
    for row in brane.values:
        fh.write(",".join(repr(float(x)) for x in row) + "\n")


def write_long_csv(brane: BraneState, fh) -> None:
    fh.write("h1,h2,value\n")
    n = brane.values.shape[0]
    for i in range(n):
        for j in range(n):
            fh.write(f"{i},{j},{float(brane.values[i, j])!r}\n")
