"""Command-line entry point: ``kdvgraph <group> <action> [options]``.

Exit codes: 0 success, 1 invalid input or a required matrix is not invertible, 2 numeric failure.
Results go to stdout (or --out), diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from kdvgraph.forcing import SingularMatrixError, trace_check
from kdvgraph.fracops import bump_signal, frac_integral, power_signal
from kdvgraph.graph import ConfigError, coupling_class, load_graph, operator_norm
from kdvgraph.matrix import (
    COND_CAP,
    DEFAULT_PARAMS,
    DET_TOL,
    SpectralParams,
    assemble,
    condition_estimate,
    determinant,
    invertibility,
    sweep,
)
from kdvgraph.regularity import admissible_s, check_bounds, search_params
from kdvgraph.simulator import InitialData, SimulationError, gaussian, load_initial, run

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
TRACE_OPS = ("V", "Vinv", "Vminus", "Vplus")


def _fmt(v) -> str:
    return f"{v:.6g}"


def _cjson(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _emit(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _params(args, spec) -> SpectralParams:
    return SpectralParams.tied(spec.k, spec.m, args.lambda1, args.lambda2, args.beta)


# ---------------------------------------------------------------------------
# handlers


def cmd_graph_validate(args) -> int:
    spec = load_graph(args.config)
    info = {
        "k": spec.k,
        "m": spec.m,
        "matrix_order": spec.size,
        "operator_norm": operator_norm(spec.B),
        "coupling": coupling_class(spec.B),
    }
    if args.format == "json":
        _emit(args, _dump({"valid": True, **info}))
    else:
        _emit(args, f"valid: k={spec.k} m={spec.m} order={spec.size} |B|={_fmt(info['operator_norm'])} coupling={info['coupling']}")
    return EXIT_OK


def cmd_matrix_det(args) -> int:
    spec = load_graph(args.config)
    M = assemble(spec, _params(args, spec))
    det = determinant(M.entries)
    ok = invertibility(M.entries, args.det_tol, args.cond_cap)
    if args.format == "json":
        _emit(args, _dump({"det": _cjson(det), "abs_det": abs(det), "cond": condition_estimate(M.entries), "invertible": ok}))
    else:
        _emit(args, f"{_fmt(det.real)},{_fmt(det.imag)}")
    if args.require_invertible and not ok:
        print("vertex matrix is not invertible", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def _sweep_pairs(args):
    if args.pairs:
        try:
            return [tuple(int(v) for v in p.split(",")) for p in args.pairs.split(";") if p.strip()]
        except ValueError as err:
            raise ConfigError(f"--pairs expects 'k,m;k,m;...', got {args.pairs!r}") from err
    if args.kmax < 1:
        raise ConfigError("--kmax must be at least 1")
    if args.family == "balanced":
        return [(k, k) for k in range(1, args.kmax + 1)]
    mmax = args.mmax or args.kmax
    return [(k, m) for k in range(1, args.kmax + 1) for m in range(1, mmax + 1)]


def cmd_matrix_sweep(args) -> int:
    rows = sweep(
        args.family,
        _sweep_pairs(args),
        (args.lambda1, args.lambda2, args.beta),
        args.coupling,
        args.det_tol,
        args.cond_cap,
    )
    if args.format == "json":
        recs = [
            {"k": r.k, "m": r.m, "det": None if r.error else _cjson(r.det), "abs_det": None if r.error else abs(r.det),
             "invertible": r.invertible, "error": r.error}
            for r in rows
        ]
        _emit(args, _dump(recs))
    else:
        lines = ["k,m,det_re,det_im,abs_det,invertible"]
        for r in rows:
            if r.error:
                lines.append(f"{r.k},{r.m},nan,nan,nan,error")
            else:
                lines.append(f"{r.k},{r.m},{_fmt(r.det.real)},{_fmt(r.det.imag)},{_fmt(abs(r.det))},{str(r.invertible).lower()}")
        _emit(args, "\n".join(lines))
    for r in rows:
        if r.error:
            print(f"k={r.k} m={r.m}: {r.error}", file=sys.stderr)
    return EXIT_OK


def cmd_regularity_interval(args) -> int:
    iv = admissible_s(SpectralParams.tied(1, 1, args.lambda1, args.lambda2, args.beta))
    if args.format == "json":
        d = {"empty": iv.empty} if iv.empty else {"empty": False, "lo": iv.lo, "hi": iv.hi, "excludes_half": iv.excludes_half}
        _emit(args, _dump(d))
    else:
        _emit(args, str(iv))
    return EXIT_OK


def cmd_regularity_search(args) -> int:
    spec = load_graph(args.config)
    lo, hi = check_bounds((args.lo, args.hi))
    res = search_params(spec, args.s, args.step, (lo, hi), not args.untied, args.det_tol, args.cond_cap)
    if args.format == "json":
        _emit(args, _dump(res.to_dict()))
    elif res.params is None:
        _emit(args, "none")
    else:
        p = res.params
        join = lambda arr: ";".join(_fmt(v) for v in arr)  # noqa: E731
        _emit(
            args,
            "lambda1,lambda2,beta,det_re,det_im,abs_det\n"
            f"{join(p.lambda1)},{join(p.lambda2)},{join(p.beta)},{_fmt(res.det.real)},{_fmt(res.det.imag)},{_fmt(res.abs_det)}",
        )
    if res.params is None:
        print(f"no invertible admissible configuration among {res.evaluated} grid points", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_fracops_demo(args) -> int:
    if args.dt <= 0 or args.T <= args.dt:
        raise ConfigError("need dt > 0 and T > dt")
    f = bump_signal(args.T, args.dt) if args.signal == "bump" else power_signal(args.T, args.dt, args.power)
    out = frac_integral(f, args.alpha)
    if args.format == "json":
        _emit(args, _dump({"alpha": args.alpha, "t": f.t.tolist(), "input": f.values.tolist(), "output": out.values.tolist()}))
    else:
        lines = ["t,input,output"] + [f"{_fmt(t)},{_fmt(a)},{_fmt(b)}" for t, a, b in zip(f.t, f.values, out.values)]
        _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_forcing_trace_check(args) -> int:
    ops = TRACE_OPS if args.op == "all" else (args.op,)
    results = [trace_check(op, args.lam, args.dt, args.T) for op in ops]
    if args.format == "json":
        recs = [{**r, "exact": _cjson(r["exact"]), "measured": _cjson(r["measured"])} for r in results]
        _emit(args, _dump(recs))
    else:
        lines = ["op,lambda,dt,exact_re,exact_im,measured_re,measured_im,rel_error"]
        for r in results:
            lam = "" if r["lambda"] is None else _fmt(r["lambda"])
            e, m = r["exact"], r["measured"]
            lines.append(f"{r['op']},{lam},{_fmt(r['dt'])},{_fmt(e.real)},{_fmt(e.imag)},{_fmt(m.real)},{_fmt(m.imag)},{_fmt(r['rel_error'])}")
        _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = load_graph(args.config)
    if args.initial:
        init = load_initial(args.initial, spec, args.L, args.h)
    else:
        init = InitialData.from_functions(spec, args.L or 80.0, args.h or 0.02, {spec.k + 1: gaussian(8.0, 1.5)})
    every = max(1, int(args.record_every))
    res = run(spec, init, args.T, args.dt, args.nonlinear, every, args.check_compat)
    if not res.truncation_ok:
        print(f"warning: solution reached the far ends (relative amplitude {res.far_ratio:.3g}); enlarge L", file=sys.stderr)
    if args.format == "json":
        _emit(
            args,
            _dump(
                {
                    "t": res.times.tolist(),
                    "l2_total": res.total_norms.tolist(),
                    "l2_edges": res.edge_norms.tolist(),
                    "residuals": res.residuals.tolist(),
                    "far_ratio": res.far_ratio,
                }
            ),
        )
    else:
        _emit(args, res.to_csv())
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation failures (exit 1), keeping exit 2 for numeric trouble."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p, out=True):
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    if out:
        p.add_argument("--out", default=None, help="write results to this file instead of stdout")


def _spectral(p):
    p.add_argument("--lambda1", type=float, default=DEFAULT_PARAMS[0], help="lambda_{i1}, shared by all negative edges")
    p.add_argument("--lambda2", type=float, default=DEFAULT_PARAMS[1], help="lambda_{i2}, shared by all negative edges")
    p.add_argument("--beta", type=float, default=DEFAULT_PARAMS[2], help="beta_j, shared by all positive edges")


def _tolerances(p):
    p.add_argument("--det-tol", type=float, default=DET_TOL, help="|det| at or below this counts as singular")
    p.add_argument("--cond-cap", type=float, default=COND_CAP, help="1-norm condition estimate at or above this counts as singular")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="kdvgraph", description="Linear KdV vertex problems on star graphs.", formatter_class=fmt)
    groups = parser.add_subparsers(dest="group", required=True)

    def action(group_parser, name, handler, help_text):
        p = group_parser.add_parser(name, help=help_text, description=help_text, formatter_class=fmt)
        p.set_defaults(handler=handler)
        return p

    g = groups.add_parser("graph", help="graph descriptions", formatter_class=fmt).add_subparsers(dest="action", required=True)
    p = action(g, "validate", cmd_graph_validate, "check a graph JSON file and classify its coupling")
    p.add_argument("--config", required=True, help="graph JSON with k, m, a, B")
    _common(p)

    g = groups.add_parser("matrix", help="vertex matrix", formatter_class=fmt).add_subparsers(dest="action", required=True)
    p = action(g, "det", cmd_matrix_det, "determinant of the vertex matrix, printed as re,im")
    p.add_argument("--config", required=True, help="graph JSON with k, m, a, B")
    _spectral(p)
    _tolerances(p)
    p.add_argument("--require-invertible", action="store_true", help="exit 1 when the matrix is not invertible")
    _common(p)
    p = action(g, "sweep", cmd_matrix_sweep, "determinants over a family of graphs")
    p.add_argument("--family", choices=("balanced", "uniform"), default="balanced", help="balanced: k=m, B=I; uniform: B filled by --coupling")
    p.add_argument("--kmax", type=int, default=51, help="largest k")
    p.add_argument("--mmax", type=int, default=None, help="largest m for the uniform family (defaults to kmax)")
    p.add_argument("--pairs", default=None, help="explicit list 'k,m;k,m;...' overriding kmax/mmax")
    p.add_argument("--coupling", choices=("inv-sqrt", "inv-quarter"), default="inv-sqrt", help="entry rule for the uniform family")
    _spectral(p)
    _tolerances(p)
    _common(p)

    g = groups.add_parser("regularity", help="admissible Sobolev indices", formatter_class=fmt).add_subparsers(dest="action", required=True)
    p = action(g, "interval", cmd_regularity_interval, "admissible s for one parameter choice")
    _spectral(p)
    _common(p)
    p = action(g, "search", cmd_regularity_search, "grid search for the invertible configuration with largest |det| at a given s")
    p.add_argument("--config", required=True, help="graph JSON with k, m, a, B")
    p.add_argument("--s", type=float, required=True, help="Sobolev index")
    p.add_argument("--step", type=float, default=0.02, help="grid spacing")
    p.add_argument("--lo", type=float, default=0.0, help="lower grid bound (exclusive)")
    p.add_argument("--hi", type=float, default=0.5, help="upper grid bound (exclusive)")
    p.add_argument("--untied", action="store_true", help="search every edge parameter separately")
    _tolerances(p)
    _common(p)

    g = groups.add_parser("fracops", help="fractional integrals", formatter_class=fmt).add_subparsers(dest="action", required=True)
    p = action(g, "demo", cmd_fracops_demo, "apply I_alpha to a sample signal")
    p.add_argument("--alpha", type=float, default=1.0 / 3.0, help="order; negative values differentiate")
    p.add_argument("--signal", choices=("bump", "power"), default="bump", help="smooth bump or t^power")
    p.add_argument("--power", type=float, default=1.0, help="exponent for --signal power")
    p.add_argument("--T", type=float, default=1.2, help="final time")
    p.add_argument("--dt", type=float, default=1e-3, help="time step")
    _common(p)

    g = groups.add_parser("forcing", help="boundary forcing operators", formatter_class=fmt).add_subparsers(dest="action", required=True)
    p = action(g, "trace-check", cmd_forcing_trace_check, "compare x = 0 traces with their exact multiples")
    p.add_argument("--op", choices=("all",) + TRACE_OPS, default="all", help="operator to check")
    p.add_argument("--lambda", dest="lam", type=float, default=0.44, help="class order for Vminus and Vplus")
    p.add_argument("--dt", type=float, default=1e-3, help="time step")
    p.add_argument("--T", type=float, default=1.2, help="final time")
    _common(p)

    p = groups.add_parser("simulate", help="linear or KdV evolution on the graph", description="time-step the graph problem", formatter_class=fmt)
    p.set_defaults(handler=cmd_simulate)
    p.add_argument("--config", required=True, help="graph JSON with k, m, a, B")
    p.add_argument("--initial", default=None, help="initial data JSON; default is a Gaussian on the first positive edge")
    p.add_argument("--L", type=float, default=None, help="edge length (overrides the initial data file; 80 without one)")
    p.add_argument("--h", type=float, default=None, help="grid spacing (overrides the initial data file; 0.02 without one)")
    p.add_argument("--T", type=float, default=1.0, help="final time")
    p.add_argument("--dt", type=float, default=1e-4, help="time step")
    p.add_argument("--record-every", type=int, default=100, help="record norms and residuals every this many steps")
    p.add_argument("--nonlinear", action="store_true", help="include the KdV term u u_x")
    p.add_argument("--check-compat", action="store_true", help="reject initial data violating vertex value continuity")
    _common(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (SimulationError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except SingularMatrixError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, ValueError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
