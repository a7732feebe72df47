"""Scaled Airy kernel A(x) = 3^(-1/3) Ai(3^(-1/3) x) and its one-sided fractional relatives.

A solves 3A'' = xA. The profiles A_mu^- = (x_+^(mu-1)/Gamma(mu)) * A and
A_mu^+ = e^(i pi mu) ((-x)_+^(mu-1)/Gamma(mu)) * A are evaluated from their Fourier
representation (1/2pi) int e^(i(x xi + xi^3)) m(xi) d xi with m = (i xi)^(-mu) or
e^(i pi mu)(-i xi)^(-mu), along contours on which the integrand decays.
"""
from __future__ import annotations

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre

from kdvgraph._kernels import airy_ai

C13 = 3.0 ** (-1.0 / 3.0)
C23 = 3.0 ** (-2.0 / 3.0)
A0 = 1.0 / (3.0 * gamma(2.0 / 3.0))
AP0 = -1.0 / (3.0 * gamma(1.0 / 3.0))
PHI_PLUS = 1.0 / 3.0  # integral of A over (0, inf)
PHI_MINUS = -2.0 / 3.0  # minus the integral of A over (-inf, 0)

RAY_SWITCH = -3.0
RAY_NODES = 96
SEG_NODES = 80
CHUNK = 2048


def airy_kernel(x):
    x = np.asarray(x, dtype=float)
    return C13 * airy_ai(C13 * x)[0]


def airy_kernel_prime(x):
    x = np.asarray(x, dtype=float)
    return C23 * airy_ai(C13 * x)[1]


def airy_kernel_both(x):
    x = np.asarray(x, dtype=float)
    ai, aip = airy_ai(C13 * x)
    return C13 * ai, C23 * aip


def airy_kernel_deriv(x, order: int):
    """A^(order) for order 0..3, using A'' = xA/3 and A''' = (A + xA')/3."""
    x = np.asarray(x, dtype=float)
    a, ap = airy_kernel_both(x)
    if order == 0:
        return a
    if order == 1:
        return ap
    if order == 2:
        return x * a / 3.0
    if order == 3:
        return (a + x * ap) / 3.0
    raise ValueError("derivative order must be 0..3")


def airy_kernel_integral(x):
    """Phi(x) = int_0^x A, by panelled Gauss-Legendre; Phi(+inf) = 1/3, Phi(-inf) = -2/3."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    g, w = roots_legendre(24)
    out = np.empty_like(xs)
    for i, xv in enumerate(xs):
        npan = max(1, int(np.ceil(abs(xv) / 0.5 * (1 + np.sqrt(abs(xv)) / 4))))
        edges = np.linspace(0.0, xv, npan + 1)
        a, b = edges[:-1, None], edges[1:, None]
        nodes = (a + b) / 2 + (b - a) / 2 * g
        out[i] = np.sum(w * airy_kernel(nodes) * (b - a) / 2)
    return out.reshape(np.shape(x))


def profile_at_zero(mu: float, side: str) -> complex:
    """Closed form of A_mu^(side)(0) from the Mellin transform of A."""
    _check_side(side)
    if side == "-":
        return 2.0 * np.sin(np.pi * mu / 3.0 + np.pi / 6.0) / (3.0 * gamma((mu + 2.0) / 3.0))
    return np.exp(1j * np.pi * mu) / (3.0 * gamma((mu + 2.0) / 3.0))


def _check_side(side):
    if side not in ("-", "+"):
        raise ValueError(f"side must be '-' or '+', got {side!r}")


def _multiplier(xi, mu, side):
    if side == "-":
        return np.exp(-mu * np.log(1j * xi))
    return np.exp(1j * np.pi * mu - mu * np.log(-1j * xi))


def _jacobi01(n, mu):
    """Nodes/weights on [0, 1] for int_0^1 f(r) r^(-mu) dr."""
    x, w = roots_jacobi(n, 0.0, -mu)
    return (1.0 + x) / 2.0, w * 0.5 ** (1.0 - mu)


def _rays(z, mu, side):
    """Two rays from the origin at angles pi/6 and 5 pi/6; fine for z >= -3."""
    r01, w01 = _jacobi01(RAY_NODES, mu)
    R = np.where(z > 0, np.minimum(4.0, 60.0 / np.maximum(z, 1e-300)), 4.0)[:, None]
    r = R * r01
    w = w01 * R ** (1.0 - mu)
    total = 0.0
    for theta, sgn in ((np.pi / 6.0, 1.0), (5.0 * np.pi / 6.0, -1.0)):
        e = np.exp(1j * theta)
        if side == "-":
            phase = np.exp(-1j * mu * np.angle(1j * e))
        else:
            phase = np.exp(1j * np.pi * mu - 1j * mu * np.angle(-1j * e))
        xi = r * e
        total = total + sgn * e * phase * np.sum(w * np.exp(1j * (z[:, None] * xi + xi**3)), axis=1)
    return total / (2.0 * np.pi)


def _segment(z, a, b, mu, side, g, w):
    xi = (a + b)[:, None] / 2 + (b - a)[:, None] / 2 * g
    f = np.exp(1j * (z[:, None] * xi + xi**3)) * _multiplier(xi, mu, side)
    return np.sum(w * f, axis=1) * (b - a) / 2


def _saddles(z, mu, side):
    """Polygon through the real saddles +-s, passing below the origin; z < -3."""
    g, w = roots_legendre(SEG_NODES)
    s = np.sqrt(-z / 3.0)
    U = np.maximum(np.sqrt(40.0 / (3.0 * s)), 4.0)
    pts = [-s + U * np.exp(3j * np.pi / 4), -s + 0j, -1j * s, s + 0j, s + U * np.exp(1j * np.pi / 4)]
    total = sum(_segment(z, pts[i], pts[i + 1], mu, side, g, w) for i in range(4))
    total = total / (2.0 * np.pi)
    if side == "+":
        # the polygon crosses the downward branch cut; add the cut's contribution on (0, -is)
        y01, wy01 = _jacobi01(RAY_NODES, mu)
        Y = np.minimum(s, 40.0 / np.abs(z))[:, None]
        y = Y * y01
        cut = np.sum(wy01 * Y ** (1.0 - mu) * np.exp(z[:, None] * y - y**3), axis=1)
        total = total + np.exp(1j * np.pi * mu) * np.sin(np.pi * mu) / np.pi * cut
    return total


def airy_profile(z, mu: float, side: str):
    """A_mu^(side)(z); integer mu <= 0 gives the real derivative A^(-mu) on both sides."""
    _check_side(side)
    mu = float(mu)
    if mu > 0.5 + 1e-12:
        raise ValueError("profile order must not exceed 1/2")
    z = np.asarray(z, dtype=float)
    if mu == round(mu):
        order = -int(round(mu))
        if order > 3:
            raise ValueError("integer profile order must be in 0..-3")
        return airy_kernel_deriv(z, order).astype(complex)
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for lo in range(0, flat.size, CHUNK):
        zz = flat[lo : lo + CHUNK]
        ray = zz >= RAY_SWITCH
        res = np.empty(zz.shape, dtype=complex)
        if ray.any():
            res[ray] = _rays(zz[ray], mu, side)
        if (~ray).any():
            res[~ray] = _saddles(zz[~ray], mu, side)
        out[lo : lo + CHUNK] = res
    return out.reshape(z.shape)


def profile_tail(mu: float, side: str):
    """Algebraic term c |z|^(mu-1) on the side that is not exponentially small, as (c, sign of z), or None.

    On the '+' side an oscillation decaying like |z|^(-1/4 - mu/2) comes on top of it.
    """
    if mu == round(mu):
        return None
    c = 1.0 / gamma(mu)
    if side == "-":
        return c, 1.0
    return np.exp(1j * np.pi * mu) * c, -1.0
