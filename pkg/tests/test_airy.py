import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import airy as scipy_airy
from scipy.special import gamma, itairy

from kdvgraph import _core_py
from kdvgraph.airy import (
    PHI_MINUS,
    PHI_PLUS,
    airy_kernel,
    airy_kernel_deriv,
    airy_kernel_integral,
    airy_profile,
    profile_at_zero,
    profile_tail,
)

try:
    from kdvgraph import _core
except ImportError:
    _core = None

BACKENDS = [_core_py] + ([_core] if _core is not None else [])


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_airy_against_scipy(mod):
    x = np.linspace(-20, 20, 4001)
    ai, aip = mod.airy_ai(x)
    ref = scipy_airy(x)
    assert np.max(np.abs(ai - ref[0])) < 1e-10
    assert np.max(np.abs(aip - ref[1])) < 1e-10
    far = np.array([-60.0, -35.0, 25.0, 40.0])
    ai, aip = mod.airy_ai(far)
    ref = scipy_airy(far)
    assert np.allclose(ai, ref[0], rtol=1e-9, atol=1e-13)
    assert np.allclose(aip, ref[1], rtol=1e-9, atol=1e-13)


def test_backends_agree():
    if _core is None:
        pytest.skip("extension not built")
    x = np.linspace(-30, 30, 3001)
    for a, b in zip(_core.airy_ai(x), _core_py.airy_ai(x)):
        assert np.max(np.abs(a - b)) < 1e-11


def test_kernel_derivative_identities():
    x = np.linspace(-6, 6, 601)
    d = 1e-3
    fd = lambda f: (f(x - 2 * d) - 8 * f(x - d) + 8 * f(x + d) - f(x + 2 * d)) / (12 * d)  # noqa: E731
    for order in range(3):
        got = fd(lambda y: airy_kernel_deriv(y, order))
        assert np.max(np.abs(got - airy_kernel_deriv(x, order + 1))) < 1e-9
    with pytest.raises(ValueError):
        airy_kernel_deriv(x, 4)


def test_kernel_integral():
    for x in (-7.0, -1.0, 0.5, 3.0):
        want = quad(airy_kernel, 0, x, limit=200)[0]
        assert airy_kernel_integral(x) == pytest.approx(want, abs=1e-12)
    assert airy_kernel_integral(20.0) == pytest.approx(PHI_PLUS, abs=1e-12)
    # integral over (-x, 0) equals that of Ai over (-x 3^(-1/3), 0), which itairy tabulates
    for x in (4.0, 15.0, 60.0):
        assert airy_kernel_integral(-x) == pytest.approx(-itairy(x * 3 ** (-1 / 3))[2], abs=2e-7)  # itairy is good to ~1e-7
    assert itairy(1e8)[2] == pytest.approx(-PHI_MINUS, abs=1e-5)


@pytest.mark.parametrize("side", ["-", "+"])
@pytest.mark.parametrize("mu", [0.44, 0.2, -0.3, -0.56, -1.56])
def test_profile_value_at_zero(mu, side):
    assert airy_profile(np.array([0.0]), mu, side)[0] == pytest.approx(profile_at_zero(mu, side), abs=1e-11)


@pytest.mark.parametrize("mu", [0.44, 0.2])
def test_plus_profile_against_real_line_integral(mu):
    # A_mu^+(z) = e^(i pi mu)/Gamma(mu) int_0^inf u^(mu-1) A(z+u) du converges absolutely
    for z in (-40.0, -6.0, -2.0, 0.7, 3.0):
        val = quad(lambda u: airy_kernel(z + u), 0, abs(z) + 40, weight="alg", wvar=(mu - 1, 0), limit=5000, epsabs=1e-13)[0]
        want = np.exp(1j * np.pi * mu) * val / gamma(mu)
        assert airy_profile(np.array([z]), mu, "+")[0] == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("side", ["-", "+"])
@pytest.mark.parametrize("mu", [0.44, -0.3])
def test_profile_solves_third_order_equation(mu, side):
    # 3 A''' - z A' - (1 - mu) A = 0, from differentiating under the convolution
    z = np.linspace(-8, 6, 57)
    d = 2e-2
    f = lambda y: airy_profile(y, mu, side)  # noqa: E731
    p1 = (f(z - 2 * d) - 8 * f(z - d) + 8 * f(z + d) - f(z + 2 * d)) / (12 * d)
    p3 = (f(z - 3 * d) - 8 * f(z - 2 * d) + 13 * f(z - d) - 13 * f(z + d) + 8 * f(z + 2 * d) - f(z + 3 * d)) / (8 * d**3)
    res = 3 * p3 - z * p1 - (1 - mu) * f(z)
    assert np.max(np.abs(res)) < 1e-5


@pytest.mark.parametrize("side", ["-", "+"])
def test_profile_continuous_across_contour_switch(side):
    z = np.array([-3.0 - 1e-9, -3.0 + 1e-9])
    v = airy_profile(z, 0.44, side)
    assert abs(v[0] - v[1]) < 1e-9


def test_integer_orders_are_real_derivatives():
    z = np.linspace(-5, 5, 11)
    for n in range(3):
        for side in "-+":
            assert np.allclose(airy_profile(z, -n, side), airy_kernel_deriv(z, n))


def test_algebraic_tail():
    # on the '-' side the profile is purely algebraic for z > 0; on the '+' side (z < 0) an
    # oscillation of size |z|^(-1/4 - mu/2) rides on top, so only the '-' side is checked here
    mu = 0.44
    c, sign = profile_tail(mu, "-")
    z = sign * np.array([40.0, 80.0])
    rel = np.abs(airy_profile(z, mu, "-") / (c * np.abs(z) ** (mu - 1)) - 1)
    assert rel[1] < rel[0] < 1e-3
    assert profile_tail(mu, "+")[1] == -1.0
    assert profile_tail(-1.0, "-") is None


def test_profile_argument_checks():
    with pytest.raises(ValueError):
        airy_profile(0.0, 0.7, "-")
    with pytest.raises(ValueError):
        airy_profile(0.0, 0.3, "left")
    with pytest.raises(ValueError):
        airy_profile(0.0, -4.0, "-")


def test_kernel_matches_scaled_scipy():
    x = np.linspace(-10, 10, 201)
    want = 3 ** (-1 / 3) * scipy_airy(3 ** (-1 / 3) * x)[0]
    assert np.max(np.abs(airy_kernel(x) - want)) < 1e-11
