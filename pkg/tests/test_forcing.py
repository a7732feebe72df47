import numpy as np
import pytest
from scipy.special import gamma, roots_jacobi, roots_legendre

from kdvgraph.forcing import (
    ForcingSolution,
    SingularMatrixError,
    TraceData,
    build_rhs,
    forcing_V,
    forcing_V_class,
    forcing_V_inv,
    solve_forcing,
    trace_check,
    trace_factor,
)
from kdvgraph.fracops import bump_signal, frac_integral, smooth_bump
from kdvgraph.graph import StarGraphSpec, y_junction
from kdvgraph.matrix import SpectralParams, assemble, term_d, term_rho

from oracles import duhamel_substitution

G = bump_signal(1.2, 1e-3)
TIMES = (400, 1100)


def test_trace_factors():
    assert trace_factor(0.44, "-") == pytest.approx(2 * np.sin(np.pi * 0.44 / 3 + np.pi / 6))
    assert trace_factor(0.44, "+") == pytest.approx(np.exp(1j * np.pi * 0.44))
    assert trace_factor(0.0, "-") == pytest.approx(1.0)


@pytest.mark.parametrize(
    "label,fn,lam,mu,side",
    [
        ("V", lambda x: forcing_V(G, x), 0.0, 0.0, "-"),
        ("V_x", lambda x: forcing_V(G, x, 1), 0.0, -1.0, "-"),
        ("Vinv", lambda x: forcing_V_inv(G, x), -1.0, -1.0, "-"),
    ],
)
@pytest.mark.parametrize("x", [-1.0, -0.3, 0.3, 1.0])
def test_integer_order_operators_against_substitution_oracle(label, fn, lam, mu, side, x):
    got = fn(x).values[0]
    for n in TIMES:
        assert abs(got[n] - duhamel_substitution(G, lam, mu, side, x, n)) < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("side", ["-", "+"])
@pytest.mark.parametrize("x", [-0.3, 1.0])
def test_fractional_class_against_substitution_oracle(side, x):
    got = forcing_V_class(G, 0.44, side, x).values[0]
    for n in TIMES:
        assert abs(got[n] - duhamel_substitution(G, 0.44, 0.44, side, x, n)) < 2e-6


def _spatial_convolution_oracle(g, lam, x):
    # V_+^lam g = e^(i pi lam)/Gamma(lam) int_0^inf u^(lam-1) W(x+u) du with W = V I_{-lam/3} g.
    # W decays like exp(-c y^(3/2)) for y > 0, so the u-integral converges fast.
    gj, wj = roots_jacobi(40, 0.0, lam - 1.0)
    u_near, w_near = (1 + gj) / 2, wj * 0.5**lam  # on (0, 1) with weight u^(lam-1)
    gl, wl = roots_legendre(16)
    edges = np.linspace(1.0, 30.0, 59)
    a, b = edges[:-1, None], edges[1:, None]
    u_far = ((a + b) / 2 + (b - a) / 2 * gl).ravel()
    w_far = ((b - a) / 2 * wl).ravel() * u_far ** (lam - 1)
    u = np.concatenate([u_near, u_far])
    w = np.concatenate([w_near, w_far])
    W = forcing_V(frac_integral(g, -lam / 3), x + u).values  # (nodes, nt)
    return np.exp(1j * np.pi * lam) / gamma(lam) * (w @ W)


@pytest.mark.slow
@pytest.mark.parametrize("x", [-0.3, 0.3])
def test_plus_class_against_spatial_convolution(x):
    # the oracle composes two discrete fractional derivatives, so the two routes agree only
    # up to the O(dt^2) time discretization; check the gap and its rate
    lam, errs = 0.44, []
    for dt in (1e-3, 5e-4):
        g = bump_signal(1.2, dt)
        got = forcing_V_class(g, lam, "+", x).values[0]
        errs.append(np.max(np.abs(got - _spatial_convolution_oracle(g, lam, x))) / np.max(np.abs(got)))
    assert errs[1] < 5e-5
    assert errs[0] / errs[1] > 3.0


def test_second_derivative_class_matches_x_difference():
    # order lam - 2 < -1 goes through a difference of the lam - 1 operator; check against an
    # independent difference of the lam operator's first derivative at a larger step
    lam, x, d = 0.44, -0.6, 0.05
    got = forcing_V_class(G, lam, "+", x, deriv=2).values[0]
    f = forcing_V_class(G, lam, "+", [x - 2 * d, x - d, x + d, x + 2 * d], deriv=1).values
    fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * d)
    assert np.max(np.abs(got - fd)) < 2e-3 * np.max(np.abs(got))


@pytest.mark.parametrize(
    "deriv,factor",
    [(1, lambda lam, side: term_rho(lam - 1) if side == "-" else term_d(lam - 1)),
     (2, lambda lam, side: term_rho(lam - 2) if side == "-" else term_d(lam - 2))],
)
@pytest.mark.parametrize("side", ["-", "+"])
def test_derivative_traces(deriv, factor, side):
    # d^j/dx^j V^lam g at x = 0 equals factor * I_{-j/3} g
    lam = 0.3
    g = bump_signal(1.2, 5e-4)
    got = forcing_V_class(g, lam, side, 0.0, deriv).values[0]
    want = factor(lam, side) * frac_integral(g, -deriv / 3).values
    assert np.linalg.norm(got - want) <= 1e-3 * np.linalg.norm(want)


def test_second_derivative_of_V_jumps_at_vertex():
    lo = forcing_V(G, 0.0, 2, side="-").values[0]
    hi = forcing_V(G, 0.0, 2, side="+").values[0]
    assert np.allclose(hi - lo, 3.0 * frac_integral(G, -2 / 3).values)
    with pytest.raises(ValueError, match="one-sided"):
        forcing_V(G, 0.0, 2)


def test_argument_checks():
    with pytest.raises(ValueError):
        forcing_V_class(G, 0.7, "-", 0.3)
    with pytest.raises(ValueError):
        forcing_V_class(G, 0.2, "left", 0.3)
    with pytest.raises(ValueError):
        forcing_V(G, 0.3, 3)
    with pytest.raises(ValueError):
        forcing_V(G, np.nan)
    with pytest.raises(TypeError):
        forcing_V(G.values, 0.3)
    with pytest.raises(ValueError):
        forcing_V_class(G, -2.0, "-", 0.3, deriv=1)
    with pytest.raises(ValueError):
        trace_check("W")


def test_evaluation_grid_and_lookup():
    ev = forcing_V(G, [-0.5, 0.0, 0.5])
    assert ev.values.shape == (3, G.n)
    assert np.array_equal(ev.at(0.01).values, ev.values[1])


def _traces(spec, t):
    rng = np.random.default_rng(5)
    rows = lambda n: np.vstack([smooth_bump(t, rng.uniform(0.4, 0.8), 0.3, rng.uniform(0.5, 1.5)) for _ in range(n)])  # noqa: E731
    return TraceData(t, rows(spec.k), rows(spec.k), rows(spec.k), rows(spec.m), rows(spec.m), rows(spec.m))


def test_solve_inverts_matrix_rowwise():
    spec = StarGraphSpec.build(2, 3, [1, 2, 1, 0.5, 1], np.full((2, 3), 0.4))
    M = assemble(spec, SpectralParams.tied(2, 3, 0.44, 0.22, 0.44))
    rhs = build_rhs(spec, _traces(spec, G.t))
    sol = solve_forcing(M, rhs)
    stacked = np.vstack([sol.gamma.reshape(4, -1), sol.theta])
    assert np.allclose(M.entries @ stacked, rhs.values)
    assert isinstance(sol, ForcingSolution) and sol.gamma_signal(1, 0).n == G.n


def test_singular_matrix_refused():
    spec = y_junction()
    M = assemble(spec, SpectralParams.tied(1, 2, 0.3, 0.3, 0.4))
    with pytest.raises(SingularMatrixError):
        solve_forcing(M, build_rhs(spec, _traces(spec, G.t)))


def test_rhs_shape_checks():
    spec = y_junction()
    with pytest.raises(ValueError):
        build_rhs(StarGraphSpec.build(2, 2), _traces(spec, G.t))
    with pytest.raises(ValueError):
        TraceData(G.t, np.zeros((1, 5)), np.zeros((1, 5)), np.zeros((1, 5)), np.zeros((2, 5)), np.zeros((2, 5)), np.zeros((2, 5)))


@pytest.mark.slow
def test_forcing_restores_vertex_conditions():
    # Free traces that violate the vertex conditions, corrected by the forcing operators
    # evaluated at x = 0; the corrected traces must satisfy every condition.
    spec = StarGraphSpec.build(1, 2, [1.0, 2.0, 0.5], [[0.6, 0.8]])
    lam1, lam2, beta = 0.44, 0.22, 0.44
    g = bump_signal(1.2, 5e-4)
    tr = _traces(spec, g.t)
    sol = solve_forcing(assemble(spec, SpectralParams.tied(1, 2, lam1, lam2, beta)), build_rhs(spec, tr))

    def neg(j):
        out = tr.f0[0] if j == 0 else (tr.f1[0] if j == 1 else tr.f2[0])
        for which, lam in ((0, lam1), (1, lam2)):
            out = out + forcing_V_class(sol.gamma_signal(0, which), lam, "-", 0.0, j).values[0]
        return out

    def pos(e, j):
        out = (tr.g0, tr.g1, tr.g2)[j][e]
        return out + forcing_V_class(sol.theta_signal(e), beta, "+", 0.0, j).values[0]

    a, B = np.asarray(spec.a), spec.B
    scale = np.max(np.abs(tr.f0))
    for e in range(2):
        assert np.max(np.abs(neg(0) - a[1 + e] * pos(e, 0))) < 1e-4 * scale
    d = neg(1) - (B[0, 0] * pos(0, 1) + B[0, 1] * pos(1, 1))
    assert np.linalg.norm(d) < 2e-3 * np.linalg.norm(tr.f1)
    k2 = neg(2) / a[0] - pos(0, 2) / a[1] - pos(1, 2) / a[2]
    assert np.linalg.norm(k2) < 2e-3 * np.linalg.norm(tr.f2)


def test_trace_check_report():
    r = trace_check("Vplus", 0.3, 1e-3)
    assert r["exact"] == pytest.approx(np.exp(0.3j * np.pi))
    assert abs(r["measured"] - r["exact"]) < 1e-3
    assert r["rel_error"] < 1e-3


def test_inverse_operator_is_x_derivative_of_smoothed_V():
    xs = np.array([-0.8, -0.3, 0.4, 0.9])
    d = 1e-3
    I13 = frac_integral(G, 1 / 3)
    fd = (forcing_V(I13, xs + d).values - forcing_V(I13, xs - d).values) / (2 * d)
    want = forcing_V_inv(G, xs).values
    assert np.linalg.norm(fd - want) <= 5e-2 * np.linalg.norm(want)


def test_rhs_for_single_value_trace():
    # F_1 = bump and everything else at rest: value rows are -bump, derivative rows vanish
    spec = y_junction()
    z = np.zeros((1, G.n))
    tr = TraceData(G.t, G.values[None, :], z, z, np.zeros((2, G.n)), np.zeros((2, G.n)), np.zeros((2, G.n)))
    rhs = build_rhs(spec, tr).values
    assert rhs.shape == (4, G.n)
    assert np.array_equal(rhs[0], -G.values) and np.array_equal(rhs[1], -G.values)
    assert np.all(rhs[2:] == 0)


def test_rhs_derivative_rows_use_one_third_order():
    spec = y_junction()
    tr = _traces(spec, G.t)
    rhs = build_rhs(spec, tr).values
    B = np.asarray(spec.B)
    want = frac_integral(G.with_values(tr.f1[0]), 1 / 3).values - sum(
        B[0, j] * frac_integral(G.with_values(tr.g1[j]), 1 / 3).values for j in range(2)
    )
    assert np.allclose(rhs[2], want)
    a = np.asarray(spec.a)
    want2 = -frac_integral(G.with_values(tr.f2[0]), 2 / 3).values / a[0] + sum(
        frac_integral(G.with_values(tr.g2[j]), 2 / 3).values / a[1 + j] for j in range(2)
    )
    assert np.allclose(rhs[3], want2)


def test_solve_residual_bound():
    rng = np.random.default_rng(11)
    spec = StarGraphSpec.build(3, 2, rng.uniform(0.5, 2, 5), rng.uniform(-0.5, 0.5, (3, 2)))
    M = assemble(spec, SpectralParams.broadcast(3, 2, rng.uniform(0.05, 0.45, 3), rng.uniform(0.05, 0.45, 3), rng.uniform(0.05, 0.45, 2)))
    rhs = build_rhs(spec, _traces(spec, G.t))
    sol = solve_forcing(M, rhs)
    x = np.vstack([sol.gamma.reshape(6, -1), sol.theta])
    assert np.max(np.abs(M.entries @ x - rhs.values)) <= 1e-10 * np.max(np.abs(rhs.values))
