"""Method-of-lines solver for w_t + w_xxx (+ w w_x) = 0 on a truncated star graph.

Negative edges are discretized on [-L, 0], positive edges on [0, L], all with spacing h.
Time stepping is Crank-Nicolson for the dispersive term; the optional nonlinearity is
advanced explicitly (second-order Adams-Bashforth). Vertex conditions and homogeneous
closures at the far ends (w = 0 on negative edges, w = w_x = 0 on positive ones) enter as algebraic rows of the per-step
sparse system, which is factorized once per run.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from kdvgraph.graph import ConfigError, StarGraphSpec

GROWTH_LIMIT = 10.0
FAR_TOL = 1e-6
FAR_ZONE = 0.05  # fraction of each edge, at the far end, watched for truncation effects


class SimulationError(ArithmeticError):
    """The discrete solution blew up or became non-finite."""


def fd_weights(offsets, deriv: int) -> np.ndarray:
    """Finite-difference weights (unit spacing) for the given derivative at offset 0."""
    offs = np.asarray(offsets, dtype=float)
    n = offs.size
    V = np.vander(offs, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = np.prod(np.arange(1, deriv + 1))
    return np.linalg.solve(V, rhs)


# second-order stencils used by the scheme
D3_CENTER = (np.arange(-2, 3), fd_weights(np.arange(-2, 3), 3))
D3_SHIFTED = (np.arange(-1, 4), fd_weights(np.arange(-1, 4), 3))
D1_ONESIDED = fd_weights([0, 1, 2], 1)
D2_ONESIDED = fd_weights([0, 1, 2, 3], 2)
# fourth-order stencils used only to measure vertex residuals
D1_CHECK = fd_weights(np.arange(5), 1)
D2_CHECK = fd_weights(np.arange(6), 2)


@dataclass(frozen=True, eq=False)
class InitialData:
    """Samples u0 (k rows, x from -L to 0) and v0 (m rows, x from 0 to L) with spacing h."""

    L: float
    h: float
    u0: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        if self.h <= 0 or self.L <= 0:
            raise ConfigError("L and h must be positive")
        n = int(round(self.L / self.h))
        if abs(n * self.h - self.L) > 1e-9 * self.L:
            raise ConfigError("L must be a multiple of h")
        u0 = np.atleast_2d(np.asarray(self.u0, dtype=float))
        v0 = np.atleast_2d(np.asarray(self.v0, dtype=float))
        for name, arr in (("u0", u0), ("v0", v0)):
            if arr.shape[1] != n + 1:
                raise ConfigError(f"{name} rows need {n + 1} samples, got {arr.shape[1]}")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} must be finite")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "v0", v0)

    @property
    def n_nodes(self) -> int:
        return self.u0.shape[1]

    @classmethod
    def from_functions(cls, spec: StarGraphSpec, L: float, h: float, funcs: dict[int, Callable]) -> "InitialData":
        """funcs maps a 1-based edge number to a profile of x; other edges start at rest."""
        n = int(round(L / h))
        xneg = -L + h * np.arange(n + 1)
        xpos = h * np.arange(n + 1)
        u0 = np.zeros((spec.k, n + 1))
        v0 = np.zeros((spec.m, n + 1))
        for e, fn in funcs.items():
            if not 1 <= e <= spec.n_edges:
                raise ConfigError(f"edge {e} out of range 1..{spec.n_edges}")
            if e <= spec.k:
                u0[e - 1] = fn(xneg)
            else:
                v0[e - 1 - spec.k] = fn(xpos)
        return cls(L, h, u0, v0)


@dataclass(eq=False)
class GraphGridState:
    t: float
    w: np.ndarray  # (k + m, n_nodes); rows 0..k-1 negative edges, then positive edges
    h: float
    L: float
    spec: StarGraphSpec = field(repr=False)

    def edge_norms(self) -> np.ndarray:
        wts = np.full(self.w.shape[1], self.h)
        wts[[0, -1]] *= 0.5
        return np.sqrt(np.sum(wts * self.w**2, axis=1))

    def total_norm(self) -> float:
        return float(np.sqrt(np.sum(self.edge_norms() ** 2)))


def vertex_values(state: GraphGridState, order: int = 0, check: bool = True) -> np.ndarray:
    """Per-edge value, first or second x-derivative at the vertex by one-sided differences."""
    k = state.spec.k
    w = state.w
    if order == 0:
        return np.concatenate([w[:k, -1], w[k:, 0]])
    st = {1: D1_CHECK if check else D1_ONESIDED, 2: D2_CHECK if check else D2_ONESIDED}[order]
    n = st.size
    fwd = w[k:, :n] @ st / state.h**order
    bwd = w[:k, ::-1][:, :n] @ st * (-1) ** order / state.h**order
    return np.concatenate([bwd, fwd])


def vertex_residual(state: GraphGridState) -> tuple[float, float, float]:
    """(value, first-derivative, second-derivative) vertex residuals, from fourth-order differences."""
    spec = state.spec
    k = spec.k
    a = np.asarray(spec.a, dtype=float)
    v0 = vertex_values(state, 0)
    r_val = v0[0] - a[1:] * v0[1:]
    v1 = vertex_values(state, 1)
    r_d1 = v1[:k] - np.asarray(spec.B) @ v1[k:]
    v2 = vertex_values(state, 2)
    r_d2 = np.sum(v2[:k] / a[:k]) - np.sum(v2[k:] / a[k:])
    return float(np.linalg.norm(r_val)), float(np.linalg.norm(r_d1)), float(abs(r_d2))


class GraphStepper:
    """Pre-factorized Crank-Nicolson stepper for a fixed graph, grid and time step."""

    def __init__(self, spec: StarGraphSpec, L: float, h: float, dt: float, nonlinear: bool = False):
        if dt == 0 or not np.isfinite(dt):
            raise ConfigError("time step must be finite and nonzero")
        n = int(round(L / h))
        if n < 8:
            raise ConfigError("need at least 8 cells per edge")
        self.spec, self.L, self.h, self.dt, self.nonlinear = spec, L, h, dt, nonlinear
        self.n_nodes = n + 1
        self._build()
        self._prev_nl = None

    def _idx(self, e, i):
        return e * self.n_nodes + i

    def _build(self):
        spec, h, dt, nn = self.spec, self.h, self.dt, self.n_nodes
        k, m = spec.k, spec.m
        size = (k + m) * nn
        lhs_r, lhs_c, lhs_v = [], [], []
        rhs_r, rhs_c, rhs_v = [], [], []
        pde_rows, pde_nodes = [], []
        row = 0

        def add(r, e, offs, coefs, target):
            for o, c in zip(offs, coefs):
                target[0].append(r)
                target[1].append(self._idx(e, o))
                target[2].append(c)

        L_ = (lhs_r, lhs_c, lhs_v)
        R_ = (rhs_r, rhs_c, rhs_v)
        d3s = {}
        for e in range(k + m):
            negative = e < k
            nodes = range(1, nn - 2)
            for i in nodes:
                offs, co = D3_CENTER if i >= 2 else D3_SHIFTED
                co = co / h**3
                add(row, e, [i], [1.0], L_)
                add(row, e, i + offs, 0.5 * dt * co, L_)
                add(row, e, [i], [1.0], R_)
                add(row, e, i + offs, -0.5 * dt * co, R_)
                d3s[(e, i)] = (i + offs, co)
                pde_rows.append(row)
                pde_nodes.append(self._idx(e, i))
                row += 1
            # far ends: a left boundary takes one condition, a right boundary two
            if negative:
                add(row, e, [0], [1.0], L_)
                row += 1
            else:
                add(row, e, [nn - 1], [1.0], L_)
                add(row + 1, e, [nn - 1, nn - 2, nn - 3], -D1_ONESIDED, L_)
                row += 2

        a = np.asarray(spec.a, dtype=float)
        B = np.asarray(spec.B, dtype=float)
        vnode = lambda e: nn - 1 if e < k else 0  # noqa: E731

        def deriv_stencil(e, order):
            st = D1_ONESIDED if order == 1 else D2_ONESIDED
            if e < k:
                return [nn - 1 - j for j in range(st.size)], st * (-1) ** order
            return list(range(st.size)), st

        for e in range(1, k + m):  # u_1 = a_e w_e at the vertex
            add(row, 0, [vnode(0)], [1.0], L_)
            add(row, e, [vnode(e)], [-a[e]], L_)
            row += 1
        for i in range(k):  # dU = B dV
            offs, co = deriv_stencil(i, 1)
            add(row, i, offs, co, L_)
            for j in range(m):
                if B[i, j] != 0:
                    offs, co = deriv_stencil(k + j, 1)
                    add(row, k + j, offs, -B[i, j] * co, L_)
            row += 1
        for e in range(k + m):  # sum a^-1 u'' = sum a^-1 v''
            offs, co = deriv_stencil(e, 2)
            add(row, e, offs, (1.0 if e < k else -1.0) / a[e] * co, L_)
        row += 1
        if row != size:
            raise RuntimeError(f"system has {row} rows for {size} unknowns")

        A = sp.csc_matrix((lhs_v, (lhs_r, lhs_c)), shape=(size, size))
        self._rhs = sp.csr_matrix((rhs_v, (rhs_r, rhs_c)), shape=(size, size))
        self._lu = spla.splu(A)
        self._pde_rows = np.asarray(pde_rows)
        self._pde_nodes = np.asarray(pde_nodes)

    def _nonlinear(self, flat: np.ndarray) -> np.ndarray:
        q = 0.5 * flat**2
        j = self._pde_nodes
        return (q[j + 1] - q[j - 1]) / (2.0 * self.h)

    def step(self, state: GraphGridState) -> GraphGridState:
        flat = state.w.ravel()
        b = self._rhs @ flat
        if self.nonlinear:
            nl = self._nonlinear(flat)
            extrap = nl if self._prev_nl is None else 1.5 * nl - 0.5 * self._prev_nl
            b[self._pde_rows] -= self.dt * extrap
            self._prev_nl = nl
        new = self._lu.solve(b)
        return GraphGridState(state.t + self.dt, new.reshape(state.w.shape), self.h, self.L, self.spec)


def initial_state(spec: StarGraphSpec, init: InitialData) -> GraphGridState:
    if init.u0.shape[0] != spec.k or init.v0.shape[0] != spec.m:
        raise ConfigError(f"initial data has {init.u0.shape[0]}+{init.v0.shape[0]} edges, graph has {spec.k}+{spec.m}")
    return GraphGridState(0.0, np.vstack([init.u0, init.v0]), init.h, init.L, spec)


def check_compatibility(spec: StarGraphSpec, init: InitialData, tol: float = 1e-8) -> list[str]:
    """Vertex value mismatches of the initial data larger than tol."""
    st = initial_state(spec, init)
    a = np.asarray(spec.a, dtype=float)
    vals = vertex_values(st, 0)
    out = []
    for e in range(1, spec.n_edges):
        gap = abs(vals[0] - a[e] * vals[e])
        if gap > tol:
            out.append(f"edge {e + 1}: |u_1(0) - a_{e + 1} w_{e + 1}(0)| = {gap:.3g} > {tol:g}")
    return out


def step(state: GraphGridState, dt: float, nonlinear: bool = False) -> GraphGridState:
    """One time step from scratch; use GraphStepper to reuse the factorization."""
    return GraphStepper(state.spec, state.L, state.h, dt, nonlinear).step(state)


@dataclass
class RunResult:
    times: np.ndarray
    edge_norms: np.ndarray  # (n_records, k + m)
    residuals: np.ndarray  # (n_records, 3)
    final: GraphGridState
    far_ratio: float

    @property
    def total_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.edge_norms**2, axis=1))

    @property
    def truncation_ok(self) -> bool:
        return self.far_ratio <= FAR_TOL

    def to_csv(self) -> str:
        ne = self.edge_norms.shape[1]
        head = ["t", "l2_total"] + [f"l2_edge_{e + 1}" for e in range(ne)] + ["r_value", "r_deriv", "r_second"]
        lines = [",".join(head)]
        for t, tot, en, r in zip(self.times, self.total_norms, self.edge_norms, self.residuals):
            vals = [t, tot, *en, *r]
            lines.append(",".join(f"{v:.6g}" for v in vals))
        return "\n".join(lines) + "\n"


def _far_amplitude(state: GraphGridState) -> float:
    k = state.spec.k
    zone = max(3, int(FAR_ZONE * state.w.shape[1]))
    return float(max(np.abs(state.w[:k, :zone]).max(initial=0.0), np.abs(state.w[k:, -zone:]).max(initial=0.0)))


def run(
    spec: StarGraphSpec,
    init: InitialData,
    T: float,
    dt: float,
    nonlinear: bool = False,
    record_every: int = 1,
    check_initial: bool = False,
    trace_tol: float = 1e-8,
) -> RunResult:
    """Advance to time T, recording norms and vertex residuals every record_every steps."""
    if check_initial:
        problems = check_compatibility(spec, init, trace_tol)
        if problems:
            raise ConfigError("incompatible initial data: " + "; ".join(problems))
    if T < 0 or dt <= 0:
        raise ConfigError("need T >= 0 and dt > 0")
    nsteps = int(round(T / dt))
    stepper = GraphStepper(spec, init.L, init.h, dt, nonlinear)
    state = initial_state(spec, init)
    amp0 = max(float(np.abs(state.w).max()), 1e-300)
    times, norms, res = [0.0], [state.edge_norms()], [vertex_residual(state)]
    far = _far_amplitude(state) / amp0
    prev = state.total_norm()
    for n in range(1, nsteps + 1):
        state = stepper.step(state)
        cur = state.total_norm()
        if not np.isfinite(cur) or (prev > 0 and cur > GROWTH_LIMIT * prev):
            raise SimulationError(f"norm grew from {prev:.3g} to {cur:.3g} at t = {state.t:.6g}")
        prev = cur
        if n % record_every == 0 or n == nsteps:
            times.append(state.t)
            norms.append(state.edge_norms())
            res.append(vertex_residual(state))
            far = max(far, _far_amplitude(state) / amp0)
    return RunResult(np.asarray(times), np.vstack(norms), np.asarray(res), state, far)


def gaussian(center: float, width: float, amplitude: float = 1.0):
    return lambda x: amplitude * np.exp(-(((x - center) / width) ** 2))


def load_initial(path: str | Path, spec: StarGraphSpec, L: float | None = None, h: float | None = None) -> InitialData:
    """JSON: {"L": 40, "h": 0.01, "profiles": [{"edge": 2, "type": "gaussian", "center": 2, "width": 0.5}]}.

    Profile types: "gaussian" (center, width, amplitude) and "samples" (values on the edge grid).
    Explicit L or h arguments override the file.
    """
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise ConfigError(f"initial data not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"initial data is not valid JSON: {err}") from err
    L = float(L if L is not None else d.get("L", 40.0))
    h = float(h if h is not None else d.get("h", 0.01))
    funcs = {}
    for prof in d.get("profiles", []):
        e = int(prof["edge"])
        kind = prof.get("type", "gaussian")
        if kind == "gaussian":
            funcs[e] = gaussian(float(prof.get("center", 2.0)), float(prof.get("width", 0.5)), float(prof.get("amplitude", 1.0)))
        elif kind == "samples":
            vals = np.asarray(prof["values"], dtype=float)
            funcs[e] = lambda x, vals=vals: vals if vals.size == x.size else _bad_samples(vals.size, x.size)
        else:
            raise ConfigError(f"unknown profile type {kind!r}")
    return InitialData.from_functions(spec, L, h, funcs)


def _bad_samples(got, want):
    raise ConfigError(f"sample profile has {got} values, edge grid has {want}")
