"""Global minimization of the penalized contrast over a compact box.

Cyclic exact coordinate descent from a deterministic multistart set, with a
brute-force nested-grid oracle for low dimensions. Exact zeros come from the
scalar prox, never from thresholding, so zero-hit events are well defined.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .contrast import Contrast, contrast_on_points, contrast_value
from .errors import InvalidInputError, InvalidSpecError
from .penalty import scalar_prox_interval

MAX_STARTS = 64


def tiebreak_key(objective: float, theta: np.ndarray) -> tuple:
    """Order candidates by objective, then coordinate magnitudes, then sign.

    Magnitudes come before the signed lexicographic order so that exact-zero
    coordinates beat ulp-level perturbations when objectives tie; this keeps
    zero-hit events and noiseless recovery well defined.
    """
    return (objective, tuple(np.abs(theta)), tuple(theta))


@dataclass(frozen=True)
class Box:
    """Per-coordinate closed intervals [lo_j, hi_j]; the compact parameter space."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise InvalidSpecError("box lo/hi lengths differ")
        if any(not (a < b) for a, b in zip(self.lo, self.hi)):
            raise InvalidSpecError("box needs lo_j < hi_j in every coordinate")

    @classmethod
    def cube(cls, p: int, half: float = 10.0) -> "Box":
        return cls(lo=(-half,) * p, hi=(half,) * p)

    @property
    def p(self) -> int:
        return len(self.lo)

    def lo_array(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    def hi_array(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float)

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lo_array()) and np.all(theta <= self.hi_array()))

    def clip(self, theta) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self.lo_array(), self.hi_array())

    def on_boundary(self, theta, tol: float = 1e-9) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.any(theta - self.lo_array() <= tol) or
                    np.any(self.hi_array() - theta <= tol))


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-10
    max_sweeps: int = 10_000

    def __post_init__(self):
        if not (self.tolerance > 0.0):
            raise InvalidSpecError("tolerance must be positive")
        if self.max_sweeps < 1:
            raise InvalidSpecError("max_sweeps must be >= 1")


@dataclass
class EstimateResult:
    """Minimizer of the contrast over the box, with exact-zero bookkeeping."""

    theta_hat: np.ndarray
    z_hat: np.ndarray
    rho_hat: np.ndarray
    objective: float
    exact_zero_flags: np.ndarray
    restarts_used: int
    converged: bool
    iterations: int


def _multistart_points(c: Contrast, box: Box) -> list[np.ndarray]:
    """OLS projection, origin, generating truth, and zero-support patterns of OLS.

    Support patterns target the support-indexed basins of the nonconvex
    penalties; capped at MAX_STARTS starts.
    """
    X, Y = c.dataset.X, c.dataset.Y
    p = c.p
    ols, *_ = np.linalg.lstsq(X, Y, rcond=None)
    starts = [box.clip(ols), box.clip(np.zeros(p)), box.clip(c.dataset.truth.theta)]
    k = min(p, 6)
    for mask in itertools.product((False, True), repeat=k):
        if len(starts) >= MAX_STARTS:
            break
        point = box.clip(ols).copy()
        for j in range(k):
            if mask[j]:
                point[j] = 0.0 if box.lo[j] <= 0.0 <= box.hi[j] else box.clip(np.zeros(p))[j]
        starts.append(point)
    seen = set()
    unique = []
    for s in starts:
        key = s.tobytes()
        if key not in seen:
            seen.add(key)
            unique.append(s)
    return unique


def _coordinate_descent(c: Contrast, box: Box, opts: SolverOptions,
                        start: np.ndarray) -> tuple[np.ndarray, bool, int]:
    X, Y = c.dataset.X, c.dataset.Y
    pen, n = c.penalty, c.n
    col_sq = np.einsum("ij,ij->j", X, X)
    lo, hi = box.lo_array(), box.hi_array()
    theta = start.astype(float).copy()
    converged = False
    sweeps = 0
    for sweep in range(opts.max_sweeps):
        sweeps = sweep + 1
        resid = Y - X @ theta
        max_move = 0.0
        for j in range(theta.size):
            if col_sq[j] == 0.0:
                # column identically zero: only the penalty sees theta_j
                new = 0.0 if lo[j] <= 0.0 <= hi[j] else (lo[j] if abs(lo[j]) < abs(hi[j]) else hi[j])
            else:
                b = theta[j] + float(X[:, j] @ resid) / col_sq[j]
                new = scalar_prox_interval(pen, n, col_sq[j], b, lo[j], hi[j])
            if new != theta[j]:
                resid += X[:, j] * (theta[j] - new)
                move = abs(new - theta[j])
                if move > max_move:
                    max_move = move
                theta[j] = new
        if max_move <= opts.tolerance:
            converged = True
            break
    return theta, converged, sweeps


def minimize(c: Contrast, box: Box | None = None,
             opts: SolverOptions | None = None) -> EstimateResult:
    """Best terminal point of coordinate descent over the multistart set.

    Deterministic: identical inputs give bit-identical results; ties across
    restarts break toward the smaller objective, then smaller coordinate
    magnitudes, then the lexicographically smaller point. A start is kept
    verbatim if descent cannot improve it, so the returned objective never
    exceeds any multistart objective.
    """
    if box is None:
        box = Box.cube(c.p)
    if box.p != c.p:
        raise InvalidInputError(f"box has {box.p} coordinates, contrast has {c.p}")
    if opts is None:
        opts = SolverOptions()
    X, Y = c.dataset.X, c.dataset.Y
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise InvalidInputError("design or responses contain non-finite values")

    starts = _multistart_points(c, box)
    best = None
    for start in starts:
        theta, conv, sweeps = _coordinate_descent(c, box, opts, start)
        obj = contrast_value(c, theta)
        start_obj = contrast_value(c, start)
        if obj > start_obj:  # float-pathological sweep; keep the start itself
            theta, obj, conv, sweeps = start.copy(), start_obj, True, 0
        key = tiebreak_key(obj, theta)
        if best is None or key < best[0]:
            best = (key, theta, obj, conv, sweeps)

    _, theta, obj, conv, sweeps = best
    p0 = c.dataset.p0
    z_hat = theta[:p0].copy()
    return EstimateResult(
        theta_hat=theta,
        z_hat=z_hat,
        rho_hat=theta[p0:].copy(),
        objective=obj,
        exact_zero_flags=(z_hat == 0.0),
        restarts_used=len(starts),
        converged=conv,
        iterations=sweeps,
    )


def _lattice_points(center: np.ndarray, span: np.ndarray, box: Box,
                    points_per_axis: int, zero_coords: tuple[int, ...]) -> np.ndarray:
    lo = np.maximum(box.lo_array(), center - span)
    hi = np.minimum(box.hi_array(), center + span)
    axes = [np.linspace(lo[j], hi[j], points_per_axis) for j in range(center.size)]
    blocks = []
    free_all = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, center.size)
    blocks.append(free_all)
    # every subset of zero-block coordinates pinned to exactly 0, so exact-zero
    # minima are representable on the lattice
    pinnable = [j for j in zero_coords if box.lo[j] <= 0.0 <= box.hi[j]]
    for r in range(1, len(pinnable) + 1):
        for subset in itertools.combinations(pinnable, r):
            free = [j for j in range(center.size) if j not in subset]
            if free:
                grid = np.stack(np.meshgrid(*[axes[j] for j in free], indexing="ij"),
                                axis=-1).reshape(-1, len(free))
            else:
                grid = np.zeros((1, 0))
            pts = np.zeros((grid.shape[0], center.size))
            pts[:, free] = grid
            blocks.append(pts)
    return np.vstack(blocks)


def grid_oracle(c: Contrast, box: Box | None = None, stages: int = 4,
                points_per_axis: int = 41) -> EstimateResult:
    """Nested-grid brute-force argmin; the independent check for `minimize`.

    Evaluates the full lattice (plus all zero-pinned sub-lattices of the zero
    block), recenters on the best point with the span shrunk by 4/points_per_axis,
    and repeats. Monotone across stages because the running best is kept.
    Refuses p > 3 as a cost guard.
    """
    if box is None:
        box = Box.cube(c.p)
    if c.p > 3:
        raise InvalidInputError("grid oracle refuses p > 3 (cost guard)")
    if points_per_axis < 11:
        raise InvalidInputError("points_per_axis must be >= 11")
    if stages < 1:
        raise InvalidInputError("stages must be >= 1")

    zero_coords = tuple(range(c.dataset.p0))
    lo, hi = box.lo_array(), box.hi_array()
    center = 0.5 * (lo + hi)
    span = 0.5 * (hi - lo)
    best_obj = math.inf
    best_pt = center.copy()
    for _ in range(stages):
        pts = _lattice_points(center, span, box, points_per_axis, zero_coords)
        vals = contrast_on_points(c, pts)
        vmin = float(np.min(vals))
        if vmin <= best_obj:
            idx = np.flatnonzero(vals == vmin)
            cand = min(pts[idx], key=lambda q: tiebreak_key(vmin, q)[1:])
            if vmin < best_obj or tiebreak_key(vmin, cand) < tiebreak_key(best_obj, best_pt):
                best_obj = vmin
                best_pt = np.asarray(cand)
        center = best_pt.copy()
        span = span * (4.0 / points_per_axis)

    p0 = c.dataset.p0
    z_hat = best_pt[:p0].copy()
    return EstimateResult(
        theta_hat=best_pt,
        z_hat=z_hat,
        rho_hat=best_pt[p0:].copy(),
        objective=best_obj,
        exact_zero_flags=(z_hat == 0.0),
        restarts_used=stages,
        converged=True,
        iterations=stages,
    )
