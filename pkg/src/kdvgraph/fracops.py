"""Riemann-Liouville fractional integrals and derivatives of sampled causal signals.

Signals live on a uniform grid t_n = n dt starting at 0 and are taken to vanish for t < 0.
Positive orders use product integration against the piecewise-linear interpolant, which is
second-order accurate for signals that are smooth and flat at t = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gamma

from kdvgraph._kernels import causal_convolve

GRID_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class SampledSignal:
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("time grid needs at least two points")
        if v.shape[-1] != t.size:
            raise ValueError(f"values have {v.shape[-1]} samples, grid has {t.size}")
        if t[0] != 0.0:
            raise ValueError("time grid must start at t = 0")
        steps = np.diff(t)
        dt = steps.mean()
        if dt <= 0 or np.max(np.abs(steps - dt)) > GRID_RTOL * max(dt, abs(t[-1])):
            raise ValueError("time grid must be uniform and increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def n(self) -> int:
        return self.t.size

    def with_values(self, values) -> "SampledSignal":
        return SampledSignal(self.t, values)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], T: float, dt: float) -> "SampledSignal":
        n = int(round(T / dt))
        t = dt * np.arange(n + 1)
        return cls(t, np.asarray(fn(t)))

    def __add__(self, other):
        _same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def to_csv(self) -> str:
        cplx = np.iscomplexobj(self.values)
        lines = ["t,re,im" if cplx else "t,value"]
        for t, v in zip(self.t, self.values):
            lines.append(f"{t:.6g},{v.real:.6g},{v.imag:.6g}" if cplx else f"{t:.6g},{v:.6g}")
        return "\n".join(lines) + "\n"


def _same_grid(a: SampledSignal, b: SampledSignal):
    if a.n != b.n or not np.allclose(a.t, b.t, rtol=0, atol=GRID_RTOL * a.dt):
        raise ValueError("signals live on different grids")


def _interior_weights(alpha: float, n: int) -> np.ndarray:
    """c_0 = 1, c_j = (j+1)^(a+1) - 2 j^(a+1) + (j-1)^(a+1), evaluated without cancellation."""
    c = np.empty(n)
    c[0] = 1.0
    if n > 1:
        c[1] = 2.0 ** (alpha + 1.0) - 2.0
    if n > 2:
        j = np.arange(2, n, dtype=float)
        e = alpha + 1.0
        c[2:] = j**e * (np.expm1(e * np.log1p(1.0 / j)) + np.expm1(e * np.log1p(-1.0 / j)))
    return c


def _start_weights(alpha: float, n: int) -> np.ndarray:
    """Weight of f_0 in I_alpha f(t_j): (j-1)^(a+1) - (j-a-1) j^a, for j >= 1."""
    a0 = np.zeros(n)
    if n > 1:
        j = np.arange(1, n, dtype=float)
        a0[1:] = (j - 1.0) ** (alpha + 1.0) - (j - alpha - 1.0) * j**alpha
    return a0


def _integral(values: np.ndarray, dt: float, alpha: float) -> np.ndarray:
    n = values.shape[-1]
    c = _interior_weights(alpha, n)
    a0 = _start_weights(alpha, n)
    conv = causal_convolve(c, values)
    out = conv + (a0 - c) * values[0]
    out[0] = 0.0
    out *= dt**alpha / gamma(alpha + 2.0)
    return out if np.iscomplexobj(values) else out.real


def _derivative(values: np.ndarray, dt: float, order: int) -> np.ndarray:
    out = values
    for _ in range(order):
        out = np.gradient(out, dt, edge_order=2)
    return out


def frac_integral(f: SampledSignal, alpha: float) -> SampledSignal:
    """I_alpha f. Negative alpha is a fractional derivative, alpha = 0 the identity."""
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ValueError("order must be finite")
    if alpha == 0.0:
        return f.with_values(f.values.copy())
    if alpha < 0.0:
        return frac_derivative(f, -alpha)
    return f.with_values(_integral(f.values, f.dt, alpha))


def frac_derivative(f: SampledSignal, alpha: float) -> SampledSignal:
    """I_{-alpha} f = d^k/dt^k I_{k-alpha} f with k = ceil(alpha); output at t = 0 is set to 0."""
    alpha = float(alpha)
    if alpha < 0.0:
        return frac_integral(f, -alpha)
    if alpha == 0.0:
        return f.with_values(f.values.copy())
    k = math.ceil(alpha)
    base = f.values if k == alpha else _integral(f.values, f.dt, k - alpha)
    out = np.array(_derivative(base, f.dt, k))
    out[0] = 0.0
    return f.with_values(out)


def smooth_bump(t, center: float = 0.6, width: float = 0.25, amplitude: complex = 1.0):
    """C-infinity bump supported on (center - width, center + width)."""
    s = (np.asarray(t, dtype=float) - center) / width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return amplitude * out


def bump_signal(T: float, dt: float, center: float = 0.6, width: float = 0.25, amplitude: complex = 1.0):
    return SampledSignal.from_function(lambda t: smooth_bump(t, center, width, amplitude), T, dt)


def power_signal(T: float, dt: float, power: float) -> SampledSignal:
    """t_+^power, handy because I_alpha t^p = Gamma(p+1)/Gamma(p+1+alpha) t^(p+alpha)."""
    return SampledSignal.from_function(lambda t: np.where(t > 0, t, 0.0) ** power, T, dt)
