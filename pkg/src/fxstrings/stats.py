"""Statistics over sliding string windows.

Covers midpoint sweeps over string length, midpoint moments, the
volatility/amplitude coupling, intra-string mean and dispersion profiles,
Fourier modes of string states, and closed-form references for
log-linear and Gaussian-trend inputs.

Reductions are deterministic: every mean or variance is taken over a fixed
contiguous array (numpy's pairwise summation) or merged chunk by chunk in a
fixed order, so results do not depend on how many worker threads run.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import InvalidParams, NoQualifyingWindows, SeriesTooShort
from .ingest import mean_window_time
from .maps import Quotes, StringConfig, window_starts, window_values

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = 14
CHUNK_CELLS = 1 << 21  # cells per block when materialising (windows, h) arrays


@dataclass
class SweepResult:
    lengths: np.ndarray
    real_time: np.ndarray  # seconds
    mean: np.ndarray
    dispersion: np.ndarray
    sample_count: np.ndarray
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None

    def rows(self):
        for i in range(len(self.lengths)):
            yield (int(self.lengths[i]), float(self.real_time[i]), float(self.mean[i]),
                   float(self.dispersion[i]), int(self.sample_count[i]))


@dataclass
class ProfileResult:
    h_axis: np.ndarray
    mean: np.ndarray
    dispersion: np.ndarray
    windows: int = 0


@dataclass
class _Moments:
    """Running count/mean/M2 per column, merged with Chan's update."""

    n: int = 0
    mean: np.ndarray | float = 0.0
    m2: np.ndarray | float = 0.0

    def add_block(self, block: np.ndarray) -> None:
        nb = block.shape[0]
        if nb == 0:
            return
        mb = block.mean(axis=0)
        m2b = ((block - mb) ** 2).sum(axis=0)
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mb, m2b
            return
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2b + delta ** 2 * (self.n * nb / n)
        self.n = n

    @property
    def std(self):
        return np.sqrt(self.m2 / self.n)


def mean_dispersion(x) -> tuple[float, float]:
    """Mean and population standard deviation of a 1-D sample."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    m = float(np.mean(x))
    return m, float(np.sqrt(np.mean((x - m) ** 2)))


def standard_error(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.std(x, ddof=1) / math.sqrt(len(x)))


def bootstrap_ci(x, n_resamples: int = 1000, level: float = 0.95, seed: int = 0,
                 block: int = 1) -> tuple[float, float]:
    """Percentile bootstrap interval of the mean.

    ``block > 1`` switches to the moving-block bootstrap, which keeps the
    serial correlation of overlapping windows inside each block.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise InvalidParams("cannot bootstrap an empty sample")
    rng = np.random.default_rng(seed)
    block = max(1, min(int(block), n))
    nb = -(-n // block)
    offs = np.arange(block)
    means = np.empty(n_resamples)
    for r in range(n_resamples):
        starts = rng.integers(0, n - block + 1, size=nb)
        idx = (starts[:, None] + offs[None, :]).ravel()[:n]
        means[r] = x[idx].mean()
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [a, 1.0 - a])
    return float(lo), float(hi)


def _quotes(p) -> Quotes:
    if isinstance(p, Quotes):
        return p
    if hasattr(p, "ask") and hasattr(p, "bid"):
        return Quotes.of(None, p.ask, p.bid)
    return Quotes.of(p)


def _times_ms(p, t):
    if t is not None:
        return np.asarray(t)
    return getattr(p, "t", None)


def midpoint(l_s: int) -> int:
    return l_s // 2


def midpoint_values(p, cfg: StringConfig, stride: int = 1) -> np.ndarray:
    """``P(tau, l_s // 2)`` for every window start on the stride grid."""
    quotes = _quotes(p)
    taus = window_starts(len(quotes), cfg, stride)
    if len(taus) == 0:
        raise SeriesTooShort(f"series of {len(quotes)} too short for l_s={cfg.l_s}",
                             l_s=cfg.l_s)
    return np.ascontiguousarray(window_values(quotes, taus, [midpoint(cfg.l_s)], cfg)[:, 0])


def midpoint_sweep(p, lengths: Sequence[int], cfg: StringConfig, stride: int = 1,
                   t=None, workers: int = 1, bootstrap: int = 0,
                   seed: int = 0) -> SweepResult:
    """Mean and dispersion of the midpoint amplitude for each string length.

    ``cfg.l_s`` is replaced by each entry of ``lengths``. ``t`` gives tick
    timestamps in milliseconds for the real-time axis; tick series carry
    their own. Without timestamps the axis counts one second per tick.
    Lengths the series cannot accommodate are skipped with a warning.
    """
    quotes = _quotes(p)
    t = _times_ms(p, t)

    def one(l_s):
        c = replace(cfg, l_s=int(l_s))
        try:
            v = midpoint_values(quotes, c, stride)
        except SeriesTooShort:
            logger.warning("skipping l_s=%d: series too short", l_s)
            return None
        m, s = mean_dispersion(v)
        T = mean_window_time(t, c.l_s) if t is not None else float(c.l_s)
        ci = (math.nan, math.nan)
        if bootstrap:
            ci = bootstrap_ci(v, bootstrap, seed=seed, block=-(-c.l_s // stride))
        return int(l_s), T, m, s, len(v), ci

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, lengths))
    else:
        out = [one(l) for l in lengths]
    out = [o for o in out if o is not None]
    col = lambda i, dt=np.float64: np.array([o[i] for o in out], dtype=dt)  # noqa: E731
    res = SweepResult(col(0, np.int64), col(1), col(2), col(3), col(4, np.int64))
    if bootstrap:
        res.ci_low = np.array([o[5][0] for o in out])
        res.ci_high = np.array([o[5][1] for o in out])
    return res


def midpoint_moments(p, cfg: StringConfig, xi: float, stride: int = 1) -> float:
    """``< |P(tau, l_s/2)| ** (xi / q) >`` over windows."""
    if not xi > 0:
        raise InvalidParams("xi must be positive")
    v = midpoint_values(p, cfg, stride)
    return float(np.mean(np.abs(v) ** (xi / cfg.q)))


def _step_returns(p):
    p = np.asarray(p, dtype=np.float64)
    return (p[1:] - p[:-1]) / p[1:]


def return_volatility(p, tau: int, L: int, normalize: bool = False) -> float:
    """``sqrt(r2 - r1**2)`` with ``r_m = sum_{h=1..L} x_h**m`` and
    ``x_h = (p[tau+h] - p[tau+h-1]) / p[tau+h]``.

    The sums are taken literally; ``normalize=True`` uses means instead,
    which is the ordinary standard deviation of the step returns. A negative
    discriminant is clamped to zero.
    """
    p = np.asarray(p, dtype=np.float64)
    if tau < 0 or L < 1 or tau + L >= len(p):
        raise SeriesTooShort("volatility window outside series", tau=tau)
    x = _step_returns(p[tau:tau + L + 1])
    r1, r2 = x.sum(), (x * x).sum()
    if normalize:
        r1, r2 = r1 / L, r2 / L
    return math.sqrt(max(r2 - r1 * r1, 0.0))


def rolling_return_volatility(p, taus, L: int, normalize: bool = False) -> np.ndarray:
    """Vectorised :func:`return_volatility` over window starts (prefix sums)."""
    x = _step_returns(p)
    c1 = np.concatenate(([0.0], np.cumsum(x)))
    c2 = np.concatenate(([0.0], np.cumsum(x * x)))
    taus = np.asarray(taus)
    r1 = c1[taus + L] - c1[taus]
    r2 = c2[taus + L] - c2[taus]
    if normalize:
        r1, r2 = r1 / L, r2 / L
    return np.sqrt(np.maximum(r2 - r1 * r1, 0.0))


def volatility_amplitude_scatter(p, cfg: StringConfig, stride: int = 1,
                                 normalize: bool = False):
    """Pairs ``(sigma_r(tau, l_s/2), P(tau, l_s/2))``, one per window."""
    quotes = _quotes(p)
    taus = window_starts(len(quotes), cfg, stride)
    if len(taus) == 0:
        raise SeriesTooShort("series too short for the volatility scatter", l_s=cfg.l_s)
    L = midpoint(cfg.l_s)
    sigma = rolling_return_volatility(quotes.p, taus, L, normalize)
    amp = window_values(quotes, taus, [L], cfg)[:, 0]
    return sigma, amp


def buy_condition(ask, bid, taus, l_s: int) -> np.ndarray:
    """``bid[tau + l_s] >= ask[tau]``: a buy at tau closes without loss."""
    taus = np.asarray(taus)
    return np.asarray(bid)[taus + l_s] >= np.asarray(ask)[taus]


def intra_string_profile(p, cfg: StringConfig, stride: int = 1,
                         condition=None) -> ProfileResult:
    """Per-h mean and dispersion of the string over window starts.

    ``condition`` is an optional boolean array over the window starts on the
    stride grid (see :func:`buy_condition`); only true windows aggregate.
    """
    quotes = _quotes(p)
    taus = window_starts(len(quotes), cfg, stride)
    if len(taus) == 0:
        raise SeriesTooShort("series too short for the profile", l_s=cfg.l_s)
    if condition is not None:
        condition = np.asarray(condition, dtype=bool)
        if condition.shape != taus.shape:
            raise InvalidParams("condition must have one entry per window start")
        taus = taus[condition]
        if len(taus) == 0:
            raise NoQualifyingWindows("no window satisfies the condition", l_s=cfg.l_s)
    hs = np.arange(cfg.l_s + 1)
    acc = _Moments()
    rows = max(1, CHUNK_CELLS // len(hs))
    for i in range(0, len(taus), rows):
        acc.add_block(window_values(quotes, taus[i:i + rows], hs, cfg))
    return ProfileResult(hs, np.asarray(acc.mean), np.asarray(acc.std), acc.n)


# ---------------------------------------------------------------------------
# Fourier modes
# ---------------------------------------------------------------------------

def dft_modes(P) -> np.ndarray:
    """``sum_h P[h] exp(-2 pi i k h / (l_s+1))`` for ``k = 0..l_s``."""
    return np.fft.fft(np.asarray(getattr(P, "values", P), dtype=np.float64))


def idft_modes(modes) -> np.ndarray:
    """Inverse of :func:`dft_modes`, normalised by ``1/(l_s+1)``."""
    return np.fft.ifft(np.asarray(modes)).real


def mean_fourier_modes(p, cfg: StringConfig, stride: int = 1, k_max: int | None = DEFAULT_K_MAX,
                       condition=None) -> np.ndarray:
    """Window-averaged Fourier modes ``k = 0..k_max`` (all modes if None).

    The transform is linear, so the average of the modes equals the modes of
    the mean profile; that is how it is computed.
    """
    prof = intra_string_profile(p, cfg, stride, condition)
    modes = dft_modes(prof.mean)
    return modes if k_max is None else modes[:k_max + 1]


# ---------------------------------------------------------------------------
# closed-form references
# ---------------------------------------------------------------------------

def exp_invariant_reference(b, l_s, h):
    """q=1 string values on ``ln p = ln p0 + b*tau``; independent of tau.

    Returns ``(1 - e^{-hb}, 1 - e^{(h-l_s)b} - e^{-hb} + e^{-l_s b})``, the
    latter evaluated in the equivalent factored form
    ``(1 - e^{-hb}) (1 - e^{(h-l_s)b})`` to avoid cancellation.
    """
    h = np.asarray(h, dtype=np.float64)
    one = -np.expm1(-h * b)
    two = one * -np.expm1((h - l_s) * b)
    if one.ndim == 0:
        return float(one), float(two)
    return one, two


def gaussian_mean_1end(h, sigma_b):
    """Mean of ``1 - e^{-hb}`` for ``b ~ N(0, sigma_b**2)``: ``1 - e^{h^2 s^2 / 2}``."""
    if sigma_b < 0:
        raise InvalidParams("sigma_b must be non-negative")
    h = np.asarray(h, dtype=np.float64)
    out = -np.expm1(0.5 * (h * sigma_b) ** 2)
    return float(out) if out.ndim == 0 else out


def gaussian_mean_2end(h, l_s, sigma_b):
    """Mean of the q=1 two-end invariant form for Gaussian ``b``."""
    if sigma_b < 0:
        raise InvalidParams("sigma_b must be non-negative")
    h = np.asarray(h, dtype=np.float64)
    s2 = 0.5 * sigma_b ** 2
    # 1 - e^{a} - e^{c} + e^{d} regrouped as -(e^a - 1) - (e^c - 1) + (e^d - 1)
    out = -np.expm1(s2 * h ** 2) - np.expm1(s2 * (h - l_s) ** 2) + np.expm1(s2 * l_s ** 2)
    return float(out) if out.ndim == 0 else out


def cosine_two_end_bracket(h, l_s, omega):
    """Phase-averaged shape of the q=1 two-end string on ``a1 + a2 cos(w tau)``.

    To leading order in ``a2/a1`` the mean equals ``(a2/a1)**2 / 2`` times
    ``cos(h w) + cos((h - l_s) w) - cos(l_s w) - 1``.
    """
    h = np.asarray(h, dtype=np.float64)
    return np.cos(h * omega) + np.cos((h - l_s) * omega) - np.cos(l_s * omega) - 1.0
