"""Vertex matrix M(lambda, beta) of the boundary-forcing construction and its determinant."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from kdvgraph.graph import ConfigError, StarGraphSpec

DET_TOL = 1e-9
COND_CAP = 1e12
DEFAULT_PARAMS = (0.44, 0.22, 0.44)


# Trace factors of the one-sided forcing operators and their first two x-derivatives.
def term_rho(lam):
    return 2.0 * np.sin(np.pi * np.asarray(lam) / 3.0 + np.pi / 6.0)


def term_rho1(lam):
    return 2.0 * np.sin(np.pi * np.asarray(lam) / 3.0 - np.pi / 6.0)


def term_rho2(lam):
    return 2.0 * np.sin(np.pi * np.asarray(lam) / 3.0 - np.pi / 2.0)


def term_d(beta):
    return np.exp(1j * np.pi * np.asarray(beta))


def term_d1(beta):
    return np.exp(1j * np.pi * (np.asarray(beta) - 1.0))


def term_d2(beta):
    return np.exp(1j * np.pi * (np.asarray(beta) - 2.0))


@dataclass(frozen=True, eq=False)
class SpectralParams:
    """Per-edge exponents: lambda1, lambda2 on the k negative edges, beta on the m positive ones."""

    lambda1: np.ndarray
    lambda2: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "beta"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=1)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def tied(cls, k: int, m: int, lambda1: float, lambda2: float, beta: float) -> "SpectralParams":
        return cls(np.full(k, lambda1), np.full(k, lambda2), np.full(m, beta))

    @classmethod
    def broadcast(cls, k: int, m: int, lambda1, lambda2, beta) -> "SpectralParams":
        """Accept a scalar or one value per edge for each family."""

        def expand(v, n, name):
            v = np.atleast_1d(np.asarray(v, dtype=float))
            if v.size == 1:
                return np.full(n, v[0])
            if v.size != n:
                raise ConfigError(f"{name} needs 1 or {n} values, got {v.size}")
            return v

        return cls(expand(lambda1, k, "lambda1"), expand(lambda2, k, "lambda2"), expand(beta, m, "beta"))

    def values(self) -> np.ndarray:
        return np.concatenate([self.lambda1, self.lambda2, self.beta])

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1.tolist(), "lambda2": self.lambda2.tolist(), "beta": self.beta.tolist()}


@dataclass(frozen=True, eq=False)
class VertexMatrix:
    entries: np.ndarray
    spec: StarGraphSpec = field(repr=False)
    params: SpectralParams = field(repr=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _check_params(spec: StarGraphSpec, params: SpectralParams):
    k, m = spec.k, spec.m
    if params.lambda1.shape != (k,) or params.lambda2.shape != (k,):
        raise ConfigError(f"lambda1/lambda2 must have {k} entries")
    if params.beta.shape != (m,):
        raise ConfigError(f"beta must have {m} entries")


def assemble_batch(spec: StarGraphSpec, lambda1, lambda2, beta) -> np.ndarray:
    """Stack of vertex matrices for parameter arrays of shape (N, k), (N, k), (N, m)."""
    k, m = spec.k, spec.m
    l1 = np.atleast_2d(lambda1)
    l2 = np.atleast_2d(lambda2)
    bt = np.atleast_2d(beta)
    N = l1.shape[0]
    n = 2 * k + m
    a = np.asarray(spec.a, dtype=float)
    aneg, apos = a[:k], a[k:]
    B = np.asarray(spec.B, dtype=float)
    M = np.zeros((N, n, n), dtype=complex)
    cols_g1 = 2 * np.arange(k)  # gamma_{v,1}
    cols_g2 = cols_g1 + 1  # gamma_{v,2}
    cols_th = 2 * k + np.arange(m)  # theta_j
    nv = k + m - 1

    # values: u_1 - a_v u_v = 0 (v=2..k) and u_1 - a_{k+j} v_j = 0 (j=1..m)
    M[:, :nv, 0] = term_rho(l1[:, :1])
    M[:, :nv, 1] = term_rho(l2[:, :1])
    if k > 1:
        rows = np.arange(k - 1)
        M[:, rows, cols_g1[1:]] = -aneg[1:] * term_rho(l1[:, 1:])
        M[:, rows, cols_g2[1:]] = -aneg[1:] * term_rho(l2[:, 1:])
    M[:, k - 1 + np.arange(m), cols_th] = -apos * term_d(bt)

    # first derivatives: dU = B dV
    rows = nv + np.arange(k)
    M[:, rows, cols_g1] = -term_rho1(l1)
    M[:, rows, cols_g2] = -term_rho1(l2)
    M[:, nv : nv + k, 2 * k :] = B[None, :, :] * term_d1(bt)[:, None, :]

    # second derivatives: weighted Kirchhoff balance
    M[:, -1, cols_g1] = term_rho2(l1) / aneg
    M[:, -1, cols_g2] = term_rho2(l2) / aneg
    M[:, -1, cols_th] = -term_d2(bt) / apos
    return M


def assemble(spec: StarGraphSpec, params: SpectralParams) -> VertexMatrix:
    _check_params(spec, params)
    M = assemble_batch(spec, params.lambda1[None], params.lambda2[None], params.beta[None])[0]
    M.setflags(write=False)
    return VertexMatrix(M, spec, params)


def _lu(M: np.ndarray):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(np.asarray(M, dtype=complex), check_finite=True)


def determinant(M) -> complex:
    """LU with partial pivoting: product of pivots times the permutation sign."""
    entries = M.entries if isinstance(M, VertexMatrix) else np.asarray(M, dtype=complex)
    lu, piv = _lu(entries)
    swaps = np.count_nonzero(piv != np.arange(piv.size))
    sign = -1.0 if swaps % 2 else 1.0
    return complex(sign * np.prod(np.diag(lu)))


def condition_estimate(M) -> float:
    """1-norm condition number estimated from the LU factors."""
    entries = M.entries if isinstance(M, VertexMatrix) else np.asarray(M, dtype=complex)
    lu, _ = _lu(entries)
    if np.any(np.diag(lu) == 0):
        return np.inf
    anorm = np.linalg.norm(entries, 1)
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0:
        return np.inf
    return float(1.0 / rcond)


def invertibility(M, det_tol: float = DET_TOL, cond_cap: float = COND_CAP) -> bool:
    if abs(determinant(M)) <= det_tol:
        return False
    return condition_estimate(M) < cond_cap


@dataclass(frozen=True)
class SweepRow:
    k: int
    m: int
    det: complex
    invertible: bool
    error: str | None = None


def coupling_rule(name: str):
    """Entry value b(k, m) for uniform coupling families."""
    rules = {
        "inv-sqrt": lambda k, m: np.sqrt(k * m) / (k * m),
        "inv-quarter": lambda k, m: (k * m) ** -0.25,
    }
    if name not in rules:
        raise ConfigError(f"unknown coupling rule {name!r}; choose from {sorted(rules)}")
    return rules[name]


def family_graph(family: str, k: int, m: int, coupling: str = "inv-sqrt") -> StarGraphSpec:
    if family == "balanced":
        if k != m:
            raise ConfigError("balanced family needs k == m")
        return StarGraphSpec.build(k, m)
    if family == "uniform":
        b = coupling_rule(coupling)(k, m)
        return StarGraphSpec.build(k, m, None, np.full((k, m), b))
    raise ConfigError(f"unknown family {family!r}")


def sweep(
    family: str,
    pairs: Iterable[Sequence[int]],
    params: Sequence[float] = DEFAULT_PARAMS,
    coupling: str = "inv-sqrt",
    det_tol: float = DET_TOL,
    cond_cap: float = COND_CAP,
) -> list[SweepRow]:
    """Determinants over a graph family; rows are ordered by (k, m) and errors are kept per row."""
    if family not in ("balanced", "uniform"):
        raise ConfigError(f"unknown family {family!r}")
    coupling_rule(coupling)
    rows = []
    for k, m in sorted({(int(k), int(m)) for k, m in pairs}):
        try:
            spec = family_graph(family, k, m, coupling)
            M = assemble(spec, SpectralParams.tied(k, m, *params))
            rows.append(SweepRow(k, m, determinant(M), invertibility(M, det_tol, cond_cap)))
        except (ConfigError, ValueError) as err:
            rows.append(SweepRow(k, m, complex(np.nan, np.nan), False, str(err)))
    return rows
