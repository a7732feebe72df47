"""Duhamel boundary-forcing operators of the linear KdV flow and the vertex solve.

Every operator here has the form

    W(x, t) = 3 int_0^t P(x tau^(-1/3)) tau^p h(t - tau) d tau,   p = (mu - 1)/3,

with a profile P (the Airy kernel, a derivative of it, or a one-sided fractional profile)
and h a fractional derivative of the boundary datum g. The tau integral is done by product
integration against the piecewise-linear interpolant of h, with the kernel moments on each
time cell computed by Gauss-Legendre quadrature. The first cell, where the kernel varies on
all scales, is integrated in the similarity variable z = x tau^(-1/3) instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.special import gamma, roots_legendre

from kdvgraph._kernels import causal_convolve
from kdvgraph.airy import PHI_MINUS, PHI_PLUS, airy_kernel_integral, airy_profile, profile_tail
from kdvgraph.fracops import SampledSignal, bump_signal, frac_integral
from kdvgraph.graph import StarGraphSpec
from kdvgraph.matrix import (
    COND_CAP,
    DET_TOL,
    SpectralParams,
    VertexMatrix,
    condition_estimate,
    determinant,
    term_d,
    term_rho,
)

LAMBDA_MIN, LAMBDA_MAX = -2.0, 0.5
GL_NODES = 6
Z_NODES = 8
Z_SMOOTH_END = 40.0  # A and the '+' profile decay like exp(-2/3 (z/3)^(3/2)) for z > 0
Z_ALGEBRAIC_END = 60.0
FD_STEP = 1e-2


class SingularMatrixError(ArithmeticError):
    """The vertex matrix is numerically singular for the chosen parameters."""


@dataclass(frozen=True, eq=False)
class ForcingEvaluation:
    """Values on x_grid (rows) times t_grid (columns)."""

    x_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    lam: float
    side: str | None
    deriv: int = 0

    def at(self, x: float) -> SampledSignal:
        i = int(np.argmin(np.abs(self.x_grid - x)))
        return SampledSignal(self.t_grid, self.values[i])


@dataclass(frozen=True)
class _Kernel:
    mu: float
    side: str

    @property
    def p(self) -> float:
        return (self.mu - 1.0) / 3.0

    def profile(self, z):
        return airy_profile(z, self.mu, self.side)

    @property
    def is_integer(self) -> bool:
        return self.mu == round(self.mu)


def _osc_end(mu: float) -> float:
    """Where to stop the oscillatory z-integral: the neglected tail is about Z^-(q+1/2), q = 3.25 + 1.5 mu."""
    q = 3.25 + 1.5 * mu
    return float(np.clip(1e9 ** (1.0 / (q + 0.5)), 40.0, 400.0))


def _z_panels(z_start: float, z_end: float, oscillatory: bool) -> np.ndarray:
    edges = [z_start]
    e = z_start
    while e < z_end:
        width = min(0.5 * e, 2.0)
        if oscillatory:
            width = min(width, 1.5 * np.sqrt(3.0 / e))
        e = min(e + max(width, 1e-12), z_end)
        edges.append(e)
    return np.asarray(edges)


def _first_cell(x: float, dt: float, kern: _Kernel) -> tuple[complex, complex]:
    """Moments of cell (0, dt] in z = x tau^(-1/3), over |z| >= |x| dt^(-1/3)."""
    sgn = np.sign(x)
    ax = abs(x)
    z1 = ax * dt ** (-1.0 / 3.0)
    oscillatory = sgn < 0
    tail = profile_tail(kern.mu, kern.side) if not kern.is_integer else None
    algebraic_here = tail is not None and tail[1] == sgn
    if oscillatory:
        z_end = _osc_end(kern.mu)
    else:
        z_end = Z_ALGEBRAIC_END if algebraic_here else Z_SMOOTH_END
    m0 = m1 = 0.0 + 0.0j
    p = kern.p
    if z1 < z_end:
        edges = _z_panels(z1, z_end, oscillatory)
        g, w = roots_legendre(Z_NODES)
        a, b = edges[:-1, None], edges[1:, None]
        r = (a + b) / 2 + (b - a) / 2 * g  # |z|
        wr = w * (b - a) / 2
        P = kern.profile(sgn * r)
        dens = 3.0 * ax ** (3.0 + 3.0 * p) * r ** (-4.0 - 3.0 * p)
        frac = (ax / r) ** 3 / dt  # tau / dt
        if kern.mu == -2.0:
            m0 = np.nan  # filled from the antiderivative below
        else:
            m0 = np.sum(wr * dens * P)
        m1 = np.sum(wr * dens * P * frac)
    if kern.mu == -2.0:
        # kernel A''(z)/tau has moment sign(x) int A over the cell: use Phi(+-inf) exactly
        phi = airy_kernel_integral(sgn * z1)
        m0 = (PHI_PLUS - phi) if sgn > 0 else -(phi - PHI_MINUS)
    if algebraic_here:
        c = tail[0]
        Z = max(z_end, z1)
        m0 = m0 + c * ax ** (kern.mu + 2.0) * Z**-3.0
        m1 = m1 + c * ax ** (kern.mu + 5.0) / dt * Z**-6.0 / 2.0
    return complex(m0), complex(m1)


def _later_cells(x: float, dt: float, ncell: int, kern: _Kernel) -> tuple[np.ndarray, np.ndarray]:
    """Moments of cells [j dt, (j+1) dt], j = 1..ncell-1, by panelled Gauss-Legendre in tau."""
    if ncell <= 1:
        return np.zeros(0, complex), np.zeros(0, complex)
    j = np.arange(1, ncell, dtype=float)
    ax = abs(x)
    z_lo = ax * ((j + 1.0) * dt) ** (-1.0 / 3.0)
    z_hi = ax * (j * dt) ** (-1.0 / 3.0)
    # panels resolve the change of z and, for x < 0, the local oscillation of P
    scale = (z_hi - z_lo) * np.maximum(1.0, np.sqrt(z_hi / 3.0))
    npan = 1 + np.floor(scale / 1.5).astype(int)
    cell = np.repeat(np.arange(ncell - 1), npan)
    first = np.cumsum(npan) - npan
    sub = np.arange(cell.size) - np.repeat(first, npan)
    frac_lo = sub / npan[cell]
    frac_hi = (sub + 1) / npan[cell]
    g, w = roots_legendre(GL_NODES)
    s = (frac_lo + frac_hi)[:, None] / 2 + (frac_hi - frac_lo)[:, None] / 2 * g  # position inside cell
    tau = (j[cell][:, None] + s) * dt
    wt = w * (frac_hi - frac_lo)[:, None] / 2 * dt
    K = kern.profile(x * tau ** (-1.0 / 3.0)) * tau**kern.p
    m0p = np.sum(wt * K, axis=1)
    m1p = np.sum(wt * K * s, axis=1)
    return np.add.reduceat(m0p, first), np.add.reduceat(m1p, first)


def _moments(x: float, dt: float, ncell: int, kern: _Kernel):
    m0_0, m1_0 = _first_cell(x, dt, kern)
    m0r, m1r = _later_cells(x, dt, ncell, kern)
    return np.concatenate([[m0_0], m0r]), np.concatenate([[m1_0], m1r])


def _convolve_moments(m0, m1, h: np.ndarray) -> np.ndarray:
    n = h.size
    wts = m0 - m1
    wts[1:] += m1[:-1]
    out = causal_convolve(wts, h) - (m0 - m1)[:n] * h[0]
    out[0] = 0.0
    return 3.0 * out


def _duhamel_offaxis(h: SampledSignal, x: float, kern: _Kernel) -> np.ndarray:
    m0, m1 = _moments(x, h.dt, h.n, kern)
    return _convolve_moments(m0, m1, np.asarray(h.values, dtype=complex))


def _duhamel_axis(h: SampledSignal, kern: _Kernel, zero_side: str | None) -> np.ndarray:
    if kern.mu == -2.0:
        if zero_side is None:
            raise ValueError("second x-derivative jumps at x = 0; pass side='-' or '+' for a one-sided limit")
        factor = PHI_PLUS if zero_side == "+" else PHI_MINUS
        out = 3.0 * factor * np.asarray(h.values, dtype=complex)
    else:
        if kern.mu <= -2.0:
            raise ValueError("kernel is not integrable at x = 0")
        P0 = complex(kern.profile(np.zeros(1))[0])
        q = kern.p + 1.0
        out = 3.0 * P0 * gamma(q) * np.asarray(frac_integral(h, q).values, dtype=complex)
    out = np.array(out)
    out[0] = 0.0
    return out


def _duhamel(h: SampledSignal, x: float, kern: _Kernel, zero_side: str | None) -> np.ndarray:
    if x == 0.0:
        return _duhamel_axis(h, kern, zero_side)
    if kern.mu < -1.0 and not kern.is_integer:
        # slowly decaying oscillatory tail: differentiate the next profile in x instead
        up = _Kernel(kern.mu + 1.0, kern.side)
        d = FD_STEP
        f = [_duhamel_offaxis(h, x + s * d, up) for s in (-2, -1, 1, 2)]
        return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * d)
    return _duhamel_offaxis(h, x, kern)


def _evaluate(g: SampledSignal, lam: float, side: str, x, deriv: int, zero_side=None) -> ForcingEvaluation:
    if not isinstance(g, SampledSignal):
        raise TypeError("boundary datum must be a SampledSignal")
    if deriv not in (0, 1, 2):
        raise ValueError("deriv must be 0, 1 or 2")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xs)):
        raise ValueError("x must be finite")
    mu = lam - deriv
    if mu < -2.0:
        raise ValueError("operator order below -2 is not supported")
    h = frac_integral(g, -(2.0 + lam) / 3.0)
    kern = _Kernel(mu, side)
    vals = np.vstack([_duhamel(h, float(xv), kern, zero_side) for xv in xs])
    return ForcingEvaluation(xs, g.t.copy(), vals, lam, side, deriv)


def forcing_V(g: SampledSignal, x, deriv: int = 0, side: str | None = None) -> ForcingEvaluation:
    """V g and its x-derivatives; side picks the one-sided limit of the second derivative at x = 0."""
    return _evaluate(g, 0.0, "-", x, deriv, zero_side=side)


def forcing_V_inv(g: SampledSignal, x, deriv: int = 0) -> ForcingEvaluation:
    """V^{-1} g = d/dx V I_{1/3} g."""
    return _evaluate(g, -1.0, "-", x, deriv)


def forcing_V_class(g: SampledSignal, lam: float, side: str, x, deriv: int = 0) -> ForcingEvaluation:
    """One-sided family V_-^lam (side '-') or V_+^lam (side '+'), lam in [-2, 1/2].

    Integer orders reduce to Airy derivatives; lam = -2 at x = 0 returns the limit from the
    edge's own side (x -> 0- for '-', x -> 0+ for '+').
    """
    if side not in ("-", "+"):
        raise ValueError(f"side must be '-' or '+', got {side!r}")
    lam = float(lam)
    if not (LAMBDA_MIN <= lam <= LAMBDA_MAX):
        raise ValueError(f"lambda must lie in [-2, 1/2], got {lam}")
    return _evaluate(g, lam, side, x, deriv, zero_side=side)


def trace_factor(lam: float, side: str) -> complex:
    """Value of V_side^lam g at x = 0 divided by g."""
    return complex(term_rho(lam)) if side == "-" else complex(term_d(lam))


# ---------------------------------------------------------------------------
# vertex solve


@dataclass(frozen=True, eq=False)
class TraceData:
    """Boundary traces at x = 0 of the free evolutions, one row per edge.

    f0, f1, f2: value, first and second x-derivative on the k negative edges (shape (k, nt));
    g0, g1, g2: the same on the m positive edges (shape (m, nt)).
    """

    t: np.ndarray
    f0: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        nt = np.asarray(self.t).size
        kk = np.atleast_2d(self.f0).shape[0]
        mm = np.atleast_2d(self.g0).shape[0]
        for name in ("f0", "f1", "f2", "g0", "g1", "g2"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=complex))
            rows = kk if name[0] == "f" else mm
            if arr.shape != (rows, nt):
                raise ValueError(f"{name} has shape {arr.shape}, expected {(rows, nt)}")
            object.__setattr__(self, name, arr)

    @property
    def k(self):
        return self.f0.shape[0]

    @property
    def m(self):
        return self.g0.shape[0]

    def _apply(self, arr, alpha):
        return np.vstack([frac_integral(SampledSignal(self.t, row), alpha).values for row in arr])


def build_rhs(spec: StarGraphSpec, traces: TraceData) -> SampledSignal:
    """Right-hand side of M (gamma, theta) = rhs, one row per vertex condition."""
    k, m = spec.k, spec.m
    if traces.k != k or traces.m != m:
        raise ValueError(f"traces are for k={traces.k}, m={traces.m}; graph has k={k}, m={m}")
    a = np.asarray(spec.a, dtype=float)
    B = np.asarray(spec.B, dtype=float)
    f0, g0 = traces.f0, traces.g0
    rows = []
    for i in range(1, k):
        rows.append(-f0[0] + a[i] * f0[i])
    for j in range(m):
        rows.append(-f0[0] + a[k + j] * g0[j])
    If1 = traces._apply(traces.f1, 1.0 / 3.0)
    Ig1 = traces._apply(traces.g1, 1.0 / 3.0)
    for i in range(k):
        rows.append(If1[i] - B[i] @ Ig1)
    If2 = traces._apply(traces.f2, 2.0 / 3.0)
    Ig2 = traces._apply(traces.g2, 2.0 / 3.0)
    rows.append(-(If2.T @ (1.0 / a[:k])) + Ig2.T @ (1.0 / a[k:]))
    return SampledSignal(np.asarray(traces.t, dtype=float), np.vstack(rows))


@dataclass(frozen=True, eq=False)
class ForcingSolution:
    """gamma[i, 0], gamma[i, 1] drive V_-^{lambda1_i}, V_-^{lambda2_i} on edge i; theta[j] drives V_+^{beta_j}."""

    t: np.ndarray
    gamma: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)

    def gamma_signal(self, i: int, which: int) -> SampledSignal:
        return SampledSignal(self.t, self.gamma[i, which])

    def theta_signal(self, j: int) -> SampledSignal:
        return SampledSignal(self.t, self.theta[j])


def solve_forcing(M: VertexMatrix, rhs: SampledSignal, det_tol: float = DET_TOL, cond_cap: float = COND_CAP) -> ForcingSolution:
    """Solve M (gamma_11, gamma_12, ..., gamma_k1, gamma_k2, theta_1..theta_m) = rhs at every time."""
    k, m = M.spec.k, M.spec.m
    R = np.atleast_2d(rhs.values)
    if R.shape[0] != M.n:
        raise ValueError(f"rhs has {R.shape[0]} rows, matrix has order {M.n}")
    if abs(determinant(M)) <= det_tol or condition_estimate(M) >= cond_cap:
        raise SingularMatrixError("vertex matrix is singular or too ill-conditioned for these parameters")
    sol = sla.lu_solve(sla.lu_factor(M.entries), R.astype(complex))
    gam = sol[: 2 * k].reshape(k, 2, -1)
    return ForcingSolution(rhs.t, gam, sol[2 * k :])


def trace_check(op: str, lam: float = 0.44, dt: float = 1e-3, T: float = 1.2) -> dict:
    """Relative L2 error of the x = 0 trace of one operator against its exact multiple of a smooth bump g."""
    g = bump_signal(T, dt)
    if op == "V":
        ev, c = forcing_V(g, 0.0), 1.0
    elif op == "Vinv":
        ev, c = forcing_V_inv(g, 0.0), -1.0
    elif op in ("Vminus", "Vplus"):
        side = "-" if op == "Vminus" else "+"
        ev, c = forcing_V_class(g, lam, side, 0.0), trace_factor(lam, side)
    else:
        raise ValueError(f"unknown operator {op!r}")
    tr = ev.values[0]
    ref = c * g.values
    err = float(np.linalg.norm(tr - ref) / np.linalg.norm(ref))
    fitted = complex(np.vdot(g.values, tr) / np.vdot(g.values, g.values))
    return {"op": op, "lambda": lam if op in ("Vminus", "Vplus") else None, "dt": dt, "exact": complex(c), "measured": fitted, "rel_error": err}

