"""Star graph description: k incoming half-lines, m outgoing half-lines, vertex weights and coupling matrix."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

CONTRACTION_TOL = 1e-12


class ConfigError(ValueError):
    """Raised for malformed or invalid graph descriptions."""


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message} [{self.rule}]"


@dataclass(frozen=True, eq=False)
class StarGraphSpec:
    """Edges 1..k are negative half-lines, edges k+1..k+m positive ones.

    ``a`` holds the k+m vertex weights, ``B`` is the real k x m coupling matrix.
    """

    k: int
    m: int
    a: tuple
    B: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, k, m, a=None, B=None) -> "StarGraphSpec":
        a = tuple(float(v) for v in (np.ones(k + m) if a is None else a))
        if B is None:
            B = np.eye(k, m)
        B = np.array(B, dtype=float, copy=True)
        if B.ndim == 1 and k == 1:
            B = B.reshape(1, -1)
        B.setflags(write=False)
        spec = cls(int(k), int(m), a, B)
        problems = validate_graph(spec)
        if problems:
            raise ConfigError("; ".join(str(p) for p in problems))
        return spec

    @property
    def n_edges(self) -> int:
        return self.k + self.m

    @property
    def size(self) -> int:
        """Order of the vertex matrix."""
        return 2 * self.k + self.m

    def to_dict(self) -> dict:
        return {"k": self.k, "m": self.m, "a": list(self.a), "B": np.asarray(self.B).tolist()}


def validate_graph(spec: StarGraphSpec) -> list[Violation]:
    """List every violated rule; an empty list means the description is usable."""
    out = []
    if not isinstance(spec.k, (int, np.integer)) or spec.k < 1:
        out.append(Violation("k", "k>=1", f"need at least one negative edge, got {spec.k!r}"))
    if not isinstance(spec.m, (int, np.integer)) or spec.m < 1:
        out.append(Violation("m", "m>=1", f"need at least one positive edge, got {spec.m!r}"))
    if out:
        return out
    a = np.asarray(spec.a, dtype=float)
    if a.shape != (spec.k + spec.m,):
        out.append(Violation("a", "len(a)=k+m", f"expected {spec.k + spec.m} weights, got {a.size}"))
    else:
        if not np.all(np.isfinite(a)):
            out.append(Violation("a", "finite", "weights must be finite"))
        elif np.any(a == 0):
            bad = [i + 1 for i in np.flatnonzero(a == 0)]
            out.append(Violation("a", "a_i!=0", f"zero weight on edge(s) {bad}"))
    B = np.asarray(spec.B)
    if B.shape != (spec.k, spec.m):
        out.append(Violation("B", "shape=k x m", f"expected {(spec.k, spec.m)}, got {B.shape}"))
    elif not np.all(np.isfinite(B)):
        out.append(Violation("B", "finite", "coupling entries must be finite"))
    elif not np.isrealobj(B):
        out.append(Violation("B", "real", "complex couplings are not supported"))
    return out


def operator_norm(B) -> float:
    """Largest singular value."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.size == 0:
        return 0.0
    return float(np.linalg.norm(B, 2))


def coupling_class(B, tol: float = CONTRACTION_TOL) -> str:
    """'unitary-group' for square orthogonal B, 'contraction-semigroup' when the norm is at most 1, else 'outside-theory'."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    k, m = B.shape
    if k == m and np.allclose(B.T @ B, np.eye(m), atol=tol, rtol=0.0):
        return "unitary-group"
    if operator_norm(B) <= 1.0 + tol:
        return "contraction-semigroup"
    return "outside-theory"


def graph_from_dict(d: dict) -> StarGraphSpec:
    missing = [key for key in ("k", "m") if key not in d]
    if missing:
        raise ConfigError(f"missing field(s): {', '.join(missing)}")
    k, m = d["k"], d["m"]
    if not isinstance(k, int) or not isinstance(m, int):
        raise ConfigError("k and m must be integers")
    B = d.get("B")
    if B is not None:
        B = np.asarray(B, dtype=float)
        if B.ndim == 1 and k == 1:
            B = B.reshape(1, -1)
    return StarGraphSpec.build(k, m, d.get("a"), B)


def load_graph(path: str | Path) -> StarGraphSpec:
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise ConfigError(f"config not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return graph_from_dict(d)


def uniform_coupling(k: int, m: int, b: float) -> np.ndarray:
    return np.full((k, m), float(b))


def y_junction(B: Sequence[float] = (np.sqrt(2) / 2, np.sqrt(2) / 2)) -> StarGraphSpec:
    """One incoming and two outgoing edges with unit weights."""
    return StarGraphSpec.build(1, 2, None, np.reshape(B, (1, 2)))
