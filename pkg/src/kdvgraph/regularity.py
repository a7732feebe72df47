"""Sobolev indices s reachable by a parameter choice, and a grid search for good parameters."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from kdvgraph.graph import ConfigError, StarGraphSpec
from kdvgraph.matrix import COND_CAP, DET_TOL, SpectralParams, assemble_batch, condition_estimate

S_MIN, S_MAX = Fraction(-1, 2), Fraction(3, 2)
EXCLUDED = Fraction(1, 2)
HALF = Fraction(1, 2)
MAX_GRID = 2_000_000


def _exact(v) -> Fraction:
    return Fraction(float(v))


def _all_values(params: SpectralParams) -> list[Fraction]:
    return [_exact(v) for v in params.values()]


@dataclass(frozen=True)
class RegularityInterval:
    """Open interval (lo, hi) with s = 1/2 removed. Membership is decided in exact arithmetic."""

    lo: float
    hi: float
    empty: bool = False
    _lo: Fraction = field(default=Fraction(0), repr=False, compare=False)
    _hi: Fraction = field(default=Fraction(0), repr=False, compare=False)

    def __contains__(self, s) -> bool:
        if self.empty:
            return False
        q = _exact(s)
        return self._lo < q < self._hi and q != EXCLUDED

    @property
    def excludes_half(self) -> bool:
        return not self.empty and self._lo < EXCLUDED < self._hi

    def __str__(self):
        if self.empty:
            return "empty"
        text = f"({self.lo:.6g}, {self.hi:.6g})"
        return text + " \\ {0.5}" if self.excludes_half else text


EMPTY = RegularityInterval(float("nan"), float("nan"), True)


def admissible_s(params: SpectralParams) -> RegularityInterval:
    """All s with max(s-1, 0) < p < min(s+1/2, 1/2) for every parameter p, s in (-1/2, 3/2), s != 1/2."""
    vals = _all_values(params)
    if not vals or any(not (0 < p < HALF) for p in vals):
        return EMPTY
    lo = max(max(vals) - HALF, S_MIN)
    hi = min(min(vals) + 1, S_MAX)
    if lo >= hi:
        return EMPTY
    return RegularityInterval(float(lo), float(hi), False, lo, hi)


def admits_s(params: SpectralParams, s: float) -> bool:
    """Pointwise admissibility test, kept separate from the interval formula."""
    q = _exact(s)
    if not (S_MIN < q < S_MAX) or q == EXCLUDED:
        return False
    lo = max(q - 1, Fraction(0))
    hi = min(q + HALF, HALF)
    return all(lo < p < hi for p in _all_values(params))


@dataclass(frozen=True)
class SearchResult:
    params: SpectralParams | None
    det: complex | None
    abs_det: float
    evaluated: int

    def to_dict(self) -> dict:
        if self.params is None:
            return {"found": False, "evaluated": self.evaluated}
        return {
            "found": True,
            **self.params.to_dict(),
            "det_re": self.det.real,
            "det_im": self.det.imag,
            "abs_det": self.abs_det,
            "evaluated": self.evaluated,
        }


def grid_axis(lo: float, hi: float, step: float) -> np.ndarray:
    """Points lo+step, lo+2 step, ... strictly inside (lo, hi), rounded to kill accumulation noise."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(np.floor((hi - lo) / step + 1e-9))
    pts = np.round(lo + step * np.arange(1, n + 1), 12)
    return pts[(pts > lo) & (pts < hi)]


def search_params(
    spec: StarGraphSpec,
    s: float,
    step: float = 0.02,
    bounds: tuple[float, float] = (0.0, 0.5),
    tied: bool = True,
    det_tol: float = DET_TOL,
    cond_cap: float = COND_CAP,
) -> SearchResult:
    """Grid search maximizing |det M| over admissible, invertible parameter choices.

    Tied mode shares (lambda1, lambda2, beta) across edges. Ties in |det| go to the
    lexicographically smallest parameter vector. Returns params=None when nothing qualifies.
    """
    axis = grid_axis(bounds[0], bounds[1], step)
    if axis.size == 0:
        raise ValueError("empty parameter grid")
    k, m = spec.k, spec.m
    probe = lambda p: admits_s(SpectralParams.tied(1, 1, p, p, p), s)  # noqa: E731
    axis = np.array([p for p in axis if probe(p)])
    if axis.size == 0:
        return SearchResult(None, None, 0.0, 0)
    nfree = 3 if tied else 2 * k + m
    if axis.size**nfree > MAX_GRID:
        raise ValueError(f"grid of {axis.size}^{nfree} points is too large")
    grid = np.array(list(itertools.product(axis, repeat=nfree)))
    if tied:
        l1 = np.repeat(grid[:, :1], k, axis=1)
        l2 = np.repeat(grid[:, 1:2], k, axis=1)
        bt = np.repeat(grid[:, 2:3], m, axis=1)
    else:
        l1, l2, bt = grid[:, :k], grid[:, k : 2 * k], grid[:, 2 * k :]

    dets = np.empty(grid.shape[0], dtype=complex)
    chunk = max(1, 200_000 // (2 * k + m) ** 2)
    for i in range(0, grid.shape[0], chunk):
        dets[i : i + chunk] = np.linalg.det(assemble_batch(spec, l1[i : i + chunk], l2[i : i + chunk], bt[i : i + chunk]))
    mags = np.abs(dets)
    # itertools.product is lexicographic, so a stable sort on -|det| breaks ties toward smaller params
    order = np.argsort(-mags, kind="stable")
    for idx in order:
        if mags[idx] <= det_tol:
            break
        M = assemble_batch(spec, l1[idx], l2[idx], bt[idx])[0]
        if condition_estimate(M) < cond_cap:
            params = SpectralParams(l1[idx], l2[idx], bt[idx])
            return SearchResult(params, complex(dets[idx]), float(mags[idx]), grid.shape[0])
    return SearchResult(None, None, 0.0, grid.shape[0])


def check_bounds(bounds) -> tuple[float, float]:
    lo, hi = (float(b) for b in bounds)
    if not lo < hi:
        raise ConfigError("search bounds need lo < hi")
    return lo, hi
