import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fxstrings.brane import BraneState, brane_2d
from fxstrings.errors import (
    AllDenominatorsZero,
    EmptyDistances,
    InsufficientFitPoints,
    InvalidParams,
    LengthMismatch,
    ShapeMismatch,
)
from fxstrings.maps import Quotes, StringConfig, StringState, evaluate, window_starts
from fxstrings.polarization import (
    PolarizedPair,
    brane_distance,
    correlation_sum,
    default_epsilon_grid,
    fractal_dimension,
    latch_indices,
    polarization_measure,
    polarization_series,
    polarize_step,
    string_distance,
    window_ratio,
)

from conftest import random_quotes


def S(*v):
    return StringState(0, np.array(v, dtype=float))


def test_latch_semantics():
    pair = PolarizedPair()
    a, b, c = S(0, 1, 0), S(0, 2, 0), S(0, 3, 0)
    pair = polarize_step(pair, a, 1.0, 1.0)  # tie is a buy
    assert pair.plus is a and pair.minus is None and pair.warm == (True, False)
    pair = polarize_step(pair, b, 1.0, 0.9)
    assert pair.plus is a and pair.minus is b and pair.ready
    pair = polarize_step(pair, c, 1.0, 1.5)
    assert pair.plus is c and pair.minus is b


def test_rising_market_never_warms_minus():
    pair = PolarizedPair()
    for i in range(10):
        pair = polarize_step(pair, S(0, i, 0), 1.0 + i, 2.0 + i)
    assert pair.minus is None


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=60))
def test_latch_indices_match_sequential(cond):
    ip, im = latch_indices(np.array(cond))
    pair = PolarizedPair()
    for i, c in enumerate(cond):
        pair = polarize_step(pair, S(i), 0.0, 1.0 if c else -1.0)
        exp_p = -1 if pair.plus is None else int(pair.plus.values[0])
        exp_m = -1 if pair.minus is None else int(pair.minus.values[0])
        assert ip[i] == exp_p and im[i] == exp_m


def test_measure_examples():
    a = S(0, 1, 2, 0)
    assert window_ratio(a, a) == 0
    assert math.isnan(window_ratio(a, S(0, -1, -2, 0)))
    assert window_ratio(a, S(0, 0, 0, 0)) == 1
    hist = [PolarizedPair(a, a), PolarizedPair(a, S(0, -1, -2, 0)), PolarizedPair(a, S(0, 0, 0, 0)),
            PolarizedPair(a, None)]
    assert polarization_measure(hist) == 0.5
    with pytest.raises(AllDenominatorsZero):
        polarization_measure([PolarizedPair(a, S(0, -1, -2, 0))])


def test_distances():
    assert string_distance(S(0, 1, 0), S(0, 0, 0)) == pytest.approx(1 / 3)
    with pytest.raises(LengthMismatch):
        string_distance(S(0, 1), S(0, 1, 0))
    z = np.zeros((3, 3))
    one = z.copy()
    one[1, 2] = 0.7
    assert brane_distance(BraneState(0, one), BraneState(0, z)) == pytest.approx(0.7 / 9)
    with pytest.raises(ShapeMismatch):
        brane_distance(BraneState(0, z), BraneState(0, np.zeros((2, 2))))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distance_metric_properties(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (StringState(0, rng.normal(size=11)) for _ in range(3))
    dab, dbc, dac = string_distance(a, b), string_distance(b, c), string_distance(a, c)
    assert dab >= 0 and dab == string_distance(b, a) and string_distance(a, a) == 0
    assert dac <= dab + dbc + 1e-15
    A, B, C = (BraneState(0, rng.normal(size=(5, 5))) for _ in range(3))
    assert brane_distance(A, B) == brane_distance(B, A)
    assert brane_distance(A, C) <= brane_distance(A, B) + brane_distance(B, C) + 1e-15


def test_series_matches_sequential(rng):
    ask, bid = random_quotes(rng, 600, spread=5e-4)
    cfg = StringConfig(l_s=25, channel="symmetric", q=2.0)
    ps = polarization_series(ask, bid, cfg, stride=3, t=np.arange(600) * 1000)
    taus = window_starts(600, cfg, 3)
    pair, ratios, dists = PolarizedPair(), [], []
    for tau in taus:
        P = evaluate(cfg, int(tau), ask=ask, bid=bid)
        pair = polarize_step(pair, P, ask[tau], bid[tau + 25])
        if pair.ready:
            ratios.append(window_ratio(pair.plus, pair.minus))
            dists.append(string_distance(pair.plus, pair.minus))
    np.testing.assert_allclose(ps.ratio, ratios, rtol=1e-12)
    np.testing.assert_allclose(ps.distance, dists, rtol=1e-12)
    assert ps.cold == len(taus) - len(ratios)
    assert ps.g == pytest.approx(np.nanmean(ratios), rel=1e-12)
    assert np.all(ps.t == ps.tau * 1000)


def test_correlation_sum_examples():
    cs = correlation_sum([1.0, 2.0, 3.0], [1.5, 2.5, 3.5])
    assert cs.raw[1] == pytest.approx(2 / 3)
    assert np.all(np.diff(cs.raw) >= 0)
    sat = correlation_sum([0.1, 0.2], [1.0, 2.0, 4.0])
    assert np.all(sat.raw == 1)
    np.testing.assert_allclose(sat.C, 1 / 3.0)
    with pytest.raises(EmptyDistances):
        correlation_sum([])
    with pytest.raises(InvalidParams):
        correlation_sum([1.0], [2.0, 1.0])
    assert correlation_sum([0.0, 1.0], [0.0 + 1e-9, 2.0]).raw[0] == 0.5


def test_default_grid():
    g = default_epsilon_grid([0.0, 0.1, 1.0, 2.0])
    assert len(g) == 64
    assert g[0] == pytest.approx(0.05) and g[-1] == pytest.approx(4.0)
    with pytest.raises(EmptyDistances):
        default_epsilon_grid([0.0])


def test_fractal_dimension():
    eps = np.geomspace(1e-3, 1.0, 40)
    fit = fractal_dimension(eps, 3.0 * eps ** 2, 1e-3, 1.0)
    assert abs(fit.dimension - 2.0) < 1e-6
    assert fit.points == 40 and fit.to_dict()["D_F"] == fit.dimension
    with pytest.raises(InsufficientFitPoints):
        fractal_dimension(eps, eps, 0.5, 0.6)


def test_fractal_dimension_power_law_distances():
    rng = np.random.default_rng(15)
    d = rng.uniform(size=200_000) ** (1 / 1.5)  # P(d <= e) = e**1.5
    cs = correlation_sum(d, np.geomspace(1e-2, 1.0, 40))
    fit = fractal_dimension(cs.epsilon, cs.C, 1e-2, 0.9)
    assert abs(fit.dimension - 1.5) <= 0.075
