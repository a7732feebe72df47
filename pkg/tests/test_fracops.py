import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import cumulative_trapezoid

from kdvgraph.fracops import (
    SampledSignal,
    _interior_weights,
    bump_signal,
    frac_derivative,
    frac_integral,
    power_signal,
    smooth_bump,
)


def test_signal_validation():
    with pytest.raises(ValueError, match="start"):
        SampledSignal(np.array([0.1, 0.2, 0.3]), np.zeros(3))
    with pytest.raises(ValueError, match="uniform"):
        SampledSignal(np.array([0.0, 0.1, 0.3]), np.zeros(3))
    with pytest.raises(ValueError, match="finite"):
        SampledSignal(np.array([0.0, 0.1, 0.2]), np.array([0.0, np.nan, 0.0]))
    with pytest.raises(ValueError, match="samples"):
        SampledSignal(np.array([0.0, 0.1, 0.2]), np.zeros(4))
    with pytest.raises(ValueError, match="different grids"):
        bump_signal(1.0, 0.1) + bump_signal(1.0, 0.05)


def test_bump_support_and_peak():
    t = np.linspace(0, 1.2, 1201)
    b = smooth_bump(t)
    assert b.max() == pytest.approx(1.0)
    assert np.all(b[(t <= 0.35) | (t >= 0.85)] == 0)


def test_unit_order_is_cumulative_trapezoid():
    # I_1 of the piecewise-linear interpolant is exactly the trapezoid running sum
    f = bump_signal(1.2, 1e-3) + power_signal(1.2, 1e-3, 2.0)
    want = cumulative_trapezoid(f.values, f.t, initial=0.0)
    assert np.max(np.abs(frac_integral(f, 1.0).values - want)) < 1e-13


@pytest.mark.parametrize("alpha", [1 / 3, 2 / 3, 1.5])
def test_power_law_exact_and_second_order(alpha):
    # I_alpha t^2 = Gamma(3)/Gamma(3+alpha) t^(2+alpha)
    errs = []
    for dt in (2e-3, 1e-3):
        f = power_signal(1.0, dt, 2.0)
        want = math.gamma(3.0) / math.gamma(3.0 + alpha) * f.t ** (2.0 + alpha)
        errs.append(np.max(np.abs(frac_integral(f, alpha).values - want)))
    assert errs[1] < 1e-5
    assert errs[0] / errs[1] > 3.5


def test_weights_match_direct_formula():
    alpha = 0.37
    j = np.arange(2, 40, dtype=float)
    direct = (j + 1) ** (alpha + 1) - 2 * j ** (alpha + 1) + (j - 1) ** (alpha + 1)
    assert np.allclose(_interior_weights(alpha, 40)[2:], direct, rtol=1e-12)


def test_derivative_undoes_integral_on_bump():
    f = bump_signal(1.2, 5e-4)
    for alpha in (1 / 3, 2 / 3, 1.0):
        back = frac_derivative(frac_integral(f, alpha), alpha)
        assert np.max(np.abs(back.values - f.values)) < 2e-3


def test_inverse_pair_relative_l2():
    f = bump_signal(1.2, 1e-3)
    back = frac_derivative(frac_integral(f, 1 / 3), 1 / 3)
    assert np.linalg.norm(back.values - f.values) <= 1e-3 * np.linalg.norm(f.values)


def test_negative_order_dispatches_to_derivative():
    f = bump_signal(1.2, 1e-3)
    assert np.array_equal(frac_integral(f, -0.4).values, frac_derivative(f, 0.4).values)
    assert np.array_equal(frac_derivative(f, -0.4).values, frac_integral(f, 0.4).values)
    with pytest.raises(ValueError):
        frac_integral(f, np.inf)


def test_complex_and_stacked_signals():
    f = bump_signal(1.2, 1e-3)
    z = frac_integral(f * (1 + 2j), 0.5).values
    assert np.allclose(z, (1 + 2j) * frac_integral(f, 0.5).values)
    stacked = f.with_values(np.vstack([f.values, 2 * f.values]))
    rows = [frac_integral(f.with_values(v), 0.5).values for v in stacked.values]
    assert np.allclose(frac_integral(stacked.with_values(stacked.values[0]), 0.5).values, rows[0])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.8), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(alpha, a, b):
    f = bump_signal(1.0, 1e-2)
    g = power_signal(1.0, 1e-2, 1.5)
    lhs = frac_integral(a * f + b * g, alpha).values
    rhs = a * frac_integral(f, alpha).values + b * frac_integral(g, alpha).values
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_csv_output():
    text = bump_signal(0.2, 0.1).to_csv()
    assert text.splitlines()[0] == "t,value"
    assert len(text.splitlines()) == 4
