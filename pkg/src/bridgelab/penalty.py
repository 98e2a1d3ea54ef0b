"""Penalty families (bridge, SCAD, seamless-L0), exact scalar subproblems, and condition checkers.

The scalar proximal solve is exact up to the one-dimensional root finds: for
each family the candidate minimizers of c(x-b)^2 + p_n(x) are enumerated
(literal 0, branch stationary points, branch junctions) and compared, so exact
zeros are produced without thresholding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidSpecError
from .util import PLAUSIBLY_BOUNDED, boundedness_verdict

FAMILIES = ("bridge", "scad", "selo", "none")

# Stable condition ids used in reports and cmd_check JSON.
COND_DIVERGENCE = "divergence-lower-bound"
COND_GROWTH_CAP = "polynomial-growth-cap"
COND_SHIFT = "root-n-shift-continuity"

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class TuningSchedule:
    """Power-form tuning sequence lambda_n = c * n**e.

    c = 0 encodes the unpenalized schedule (lambda_n identically 0); the
    regularized families require c > 0 to be effective.
    """

    c: float
    e: float

    def __post_init__(self):
        if not (self.c >= 0.0) or not math.isfinite(self.c):
            raise InvalidSpecError(f"schedule coefficient must be >= 0, got {self.c}")
        if not math.isfinite(self.e):
            raise InvalidSpecError(f"schedule exponent must be finite, got {self.e}")

    def value(self, n: int) -> float:
        if n < 1:
            raise InvalidInputError(f"schedule evaluated at n={n} < 1")
        return self.c * float(n) ** self.e


@dataclass(frozen=True)
class PenaltySpec:
    """A penalty family p_n plus its tuning schedule.

    bridge: p_n(t) = lambda_n * |t|**gamma, gamma > 0
    scad:   three-branch form with extra parameter a > 2 (linear, quadratic
            blend, then constant n*(a+1)*lambda_n^2/2)
    selo:   (2*n*lambda_n / log 2) * log(|t|/(|t|+tau_n) + 1), bounded by
            2*n*lambda_n, with its own tau schedule
    none:   p_n identically 0 (unpenalized least squares)
    """

    family: str
    schedule: TuningSchedule
    gamma: float | None = None
    a: float | None = None
    tau: TuningSchedule | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"unknown penalty family {self.family!r}")
        if self.family == "bridge":
            if self.gamma is None or not (self.gamma > 0.0):
                raise InvalidSpecError("bridge penalty requires gamma > 0")
        elif self.family == "scad":
            if self.a is None or not (self.a > 2.0):
                raise InvalidSpecError("scad penalty requires a > 2")
        elif self.family == "selo":
            if self.tau is None or self.tau.c <= 0.0:
                raise InvalidSpecError("selo penalty requires a positive tau schedule")


def zero_penalty() -> PenaltySpec:
    """The p_n = 0 spec used for unpenalized fits and degenerate checks."""
    return PenaltySpec(family="none", schedule=TuningSchedule(c=0.0, e=0.0))


def _value_scalar(pen: PenaltySpec, n: int, t: float) -> float:
    """Scalar penalty evaluation on the hot path (pure python float math)."""
    at = abs(t)
    if pen.family == "none":
        return 0.0
    lam = pen.schedule.value(n)
    if lam == 0.0:
        return 0.0
    if pen.family == "bridge":
        return lam * at ** pen.gamma
    if pen.family == "scad":
        a = pen.a
        if at <= lam:
            return n * lam * at
        if at <= a * lam:
            return -n * (at * at - 2.0 * a * lam * at + lam * lam) / (2.0 * (a - 1.0))
        return n * (a + 1.0) * lam * lam / 2.0
    # selo
    tau = pen.tau.value(n)
    return (2.0 * n * lam / LOG2) * math.log1p(at / (at + tau))


def penalty_value(pen: PenaltySpec, n: int, t):
    """Evaluate p_n at t; accepts scalars or arrays, returns the same shape.

    Even in t, 0 at 0, and branchwise exact (no smoothing of the SCAD
    junctions or of the kink at the origin).
    """
    at = np.abs(np.asarray(t, dtype=float))
    scalar = at.ndim == 0
    if scalar:
        return _value_scalar(pen, n, float(at))
    if pen.family == "none":
        return np.zeros_like(at)
    lam = pen.schedule.value(n)
    if lam == 0.0:
        return np.zeros_like(at)
    if pen.family == "bridge":
        return lam * at ** pen.gamma
    if pen.family == "scad":
        a = pen.a
        return np.select(
            [at <= lam, at <= a * lam],
            [n * lam * at, -n * (at * at - 2.0 * a * lam * at + lam * lam) / (2.0 * (a - 1.0))],
            default=n * (a + 1.0) * lam * lam / 2.0,
        )
    tau = pen.tau.value(n)
    return (2.0 * n * lam / LOG2) * np.log1p(at / (at + tau))


def penalty_total(pen: PenaltySpec, n: int, theta) -> float:
    """Sum of p_n over the coordinates of theta."""
    theta = np.asarray(theta, dtype=float)
    return float(np.sum(penalty_value(pen, n, theta)))


# ---------------------------------------------------------------------------
# Exact scalar proximal solves
# ---------------------------------------------------------------------------


def _bracketed_newton(h, hprime, lo: float, hi: float) -> float:
    """Root of increasing h on [lo, hi] with h(lo) <= 0 <= h(hi).

    Newton from the midpoint, clipped into the shrinking bracket; bisection
    whenever the Newton step leaves it. Deterministic.
    """
    x = 0.5 * (lo + hi)
    for _ in range(200):
        hx = h(x)
        if hx == 0.0:
            return x
        if hx > 0.0:
            hi = x
        else:
            lo = x
        if hi - lo <= 1e-16 * (1.0 + abs(hi)):
            break
        d = hprime(x)
        if d > 0.0:
            step = x - hx / d
        else:
            step = lo  # force bisection
        if not (lo < step < hi):
            step = 0.5 * (lo + hi)
        x = step
    return 0.5 * (lo + hi)


def power_prox_candidates(c: float, b: float, lam: float, gamma: float) -> list[float]:
    """Candidate minimizers of c(x-b)^2 + lam*|x|**gamma (bridge-type scalar solve)."""
    if lam == 0.0:
        return [b]
    if b == 0.0:
        return [0.0]
    s = 1.0 if b > 0.0 else -1.0
    beta = abs(b)
    if gamma == 1.0:
        st = beta - lam / (2.0 * c)
        return [0.0] if st <= 0.0 else [s * st]
    if gamma == 2.0:
        return [c * b / (c + lam)]
    if gamma > 1.0:
        # h(x) = 2c(x-beta) + lam*gamma*x^(gamma-1) increases from -2c*beta to h(beta) > 0.
        h = lambda x: 2.0 * c * (x - beta) + lam * gamma * x ** (gamma - 1.0)
        hp = lambda x: 2.0 * c + lam * gamma * (gamma - 1.0) * x ** (gamma - 2.0)
        return [s * _bracketed_newton(h, hp, 0.0, beta)]
    # 0 < gamma < 1: nonconvex; at most one interior local minimum beyond the
    # dip of h, compared against the exact-zero candidate.
    x_star = (lam * gamma * (1.0 - gamma) / (2.0 * c)) ** (1.0 / (2.0 - gamma))
    if x_star >= beta:
        return [0.0]
    h = lambda x: 2.0 * c * (x - beta) + lam * gamma * x ** (gamma - 1.0)
    if h(x_star) > 0.0:
        return [0.0]
    hp = lambda x: 2.0 * c + lam * gamma * (gamma - 1.0) * x ** (gamma - 2.0)
    root = _bracketed_newton(h, hp, x_star, beta)
    return [0.0, s * root]


def _scad_candidates(c: float, b: float, lam: float, n: int, a: float) -> list[float]:
    if lam == 0.0 or b == 0.0:
        return [b]
    s = 1.0 if b > 0.0 else -1.0
    beta = abs(b)
    cands = [0.0, s * lam, s * a * lam]
    x1 = beta - n * lam / (2.0 * c)
    if 0.0 < x1 <= lam:
        cands.append(s * x1)
    denom = 2.0 * c - n / (a - 1.0)
    if denom != 0.0:
        x2 = (2.0 * c * beta - n * a * lam / (a - 1.0)) / denom
        if lam < x2 <= a * lam:
            cands.append(s * x2)
    if beta > a * lam:
        cands.append(b)
    return cands


def _selo_candidates(c: float, b: float, lam: float, n: int, tau: float) -> list[float]:
    if lam == 0.0:
        return [b]
    if b == 0.0:
        return [0.0]
    s = 1.0 if b > 0.0 else -1.0
    beta = abs(b)
    coef = 2.0 * n * lam / LOG2

    def dpen(x: float) -> float:
        return coef * tau / ((x + tau) * (2.0 * x + tau))

    def h(x: float) -> float:
        return 2.0 * c * (x - beta) + dpen(x)

    def hp(x: float) -> float:
        return 2.0 * c - coef * tau * (4.0 * x + 3.0 * tau) / ((x + tau) * (2.0 * x + tau)) ** 2

    # h is convex on [0, beta] with h(beta) > 0; an interior local minimum of
    # the objective exists only where h crosses 0 from below.
    if hp(beta) <= 0.0:
        return [0.0]
    if hp(0.0) >= 0.0:
        x_h = 0.0
    else:
        lo, hi = 0.0, beta
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            if hp(mid) < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-16 * (1.0 + hi):
                break
        x_h = 0.5 * (lo + hi)
    if h(x_h) > 0.0:
        return [0.0]
    root = _bracketed_newton(h, hp, x_h, beta)
    return [0.0, s * root]


def _prox_candidates(pen: PenaltySpec, n: int, c: float, b: float) -> list[float]:
    if pen.family == "none":
        return [b]
    lam = pen.schedule.value(n)
    if pen.family == "bridge":
        return power_prox_candidates(c, b, lam, pen.gamma)
    if pen.family == "scad":
        return _scad_candidates(c, b, lam, n, pen.a)
    return _selo_candidates(c, b, lam, n, pen.tau.value(n))


def _select_candidate(cands, objective) -> float:
    """Smallest objective; ties toward smaller |x|, then toward negative x."""
    best = None
    key = None
    for x in cands:
        k = (objective(x), abs(x), x)
        if key is None or k < key:
            key = k
            best = x
    return best


def scalar_prox(pen: PenaltySpec, n: int, c: float, b: float) -> float:
    """Global minimizer of x -> c*(x-b)^2 + p_n(x), c > 0.

    Returns a literal 0.0 when the zero candidate wins, so downstream sparsity
    events are exact rather than thresholded.
    """
    if not (c > 0.0):
        raise InvalidInputError(f"prox curvature must be positive, got {c}")
    cands = _prox_candidates(pen, n, c, b)
    if 0.0 not in cands:
        cands = cands + [0.0]

    def obj(x: float) -> float:
        d = x - b
        return c * d * d + _value_scalar(pen, n, x)

    return _select_candidate(cands, obj)


def scalar_prox_interval(pen: PenaltySpec, n: int, c: float, b: float,
                         lo: float, hi: float) -> float:
    """scalar_prox constrained to [lo, hi] by candidate/endpoint comparison."""
    if not (c > 0.0):
        raise InvalidInputError(f"prox curvature must be positive, got {c}")
    cands = [x for x in _prox_candidates(pen, n, c, b) if lo <= x <= hi]
    cands.append(lo)
    cands.append(hi)
    if lo <= 0.0 <= hi and 0.0 not in cands:
        cands.append(0.0)

    def obj(x: float) -> float:
        d = x - b
        return c * d * d + _value_scalar(pen, n, x)

    return _select_candidate(cands, obj)


# ---------------------------------------------------------------------------
# Condition checkers
# ---------------------------------------------------------------------------


@dataclass
class PenaltyConditionReport:
    """Finite-n diagnostic for one of the penalty-side conditions."""

    condition: str
    n_grid: tuple[int, ...]
    probes: tuple
    values: np.ndarray
    verdict: str
    fitted_exponent: float | None = None
    fit_error: float | None = None
    kappa: int | None = None
    detail: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        out = {
            "condition": self.condition,
            "n_grid": list(self.n_grid),
            "probes": [list(p) if isinstance(p, tuple) else p for p in self.probes],
            "values": self.values.tolist(),
            "verdict": self.verdict,
        }
        if self.fitted_exponent is not None:
            out["fitted_exponent"] = self.fitted_exponent
        if self.fit_error is not None:
            out["fit_error"] = self.fit_error
        if self.kappa is not None:
            out["kappa"] = self.kappa
        if self.detail:
            out["detail"] = self.detail
        return out


def default_divergence_scale(pen: PenaltySpec) -> TuningSchedule:
    """Family-natural q_n: lambda_n/n^(gamma/2) for bridge, the bound scale otherwise."""
    sch = pen.schedule
    if pen.family == "bridge":
        return TuningSchedule(c=max(sch.c, 0.0), e=sch.e - pen.gamma / 2.0)
    if pen.family == "scad":
        return TuningSchedule(c=max(sch.c * sch.c, 0.0), e=1.0 + 2.0 * sch.e)
    if pen.family == "selo":
        return TuningSchedule(c=sch.c, e=1.0 + sch.e)
    return TuningSchedule(c=1.0, e=0.0)


def _sphere_infimum(pen: PenaltySpec, n: int, r: float, p0: int) -> float:
    """inf over |u| = r of sum_k p_n(u_k/sqrt(n)).

    Monotone coordinatewise penalties attain the inf over |u| >= r on the
    sphere. Candidates: equal mass on k axes for k = 1..p0 (axis allocation is
    optimal for concave families, balanced for convex ones), refined by a
    dense angular scan for p0 = 2 and a pairwise exchange pass for p0 > 2.
    """
    rn = r / math.sqrt(n)
    best = min(
        k * _value_scalar(pen, n, rn / math.sqrt(k)) for k in range(1, p0 + 1)
    )
    if p0 == 2:
        ang = np.linspace(0.0, math.pi / 4.0, 181)
        vals = penalty_value(pen, n, rn * np.cos(ang)) + penalty_value(pen, n, rn * np.sin(ang))
        best = min(best, float(np.min(vals)))
    elif p0 > 2:
        k_best = int(np.argmin([
            k * _value_scalar(pen, n, rn / math.sqrt(k)) for k in range(1, p0 + 1)
        ])) + 1
        alloc = np.zeros(p0)
        alloc[:k_best] = rn / math.sqrt(k_best)
        ang = np.linspace(0.0, math.pi / 2.0, 91)
        for _ in range(3):
            improved = False
            for i in range(p0):
                for j in range(i + 1, p0):
                    m = math.hypot(alloc[i], alloc[j])
                    if m == 0.0:
                        continue
                    vals = (penalty_value(pen, n, m * np.cos(ang))
                            + penalty_value(pen, n, m * np.sin(ang)))
                    k = int(np.argmin(vals))
                    cur = _value_scalar(pen, n, alloc[i]) + _value_scalar(pen, n, alloc[j])
                    if vals[k] < cur - 1e-15 * (1.0 + cur):
                        alloc[i] = m * math.cos(ang[k])
                        alloc[j] = m * math.sin(ang[k])
                        improved = True
            if not improved:
                break
        best = min(best, float(np.sum(penalty_value(pen, n, alloc))))
    return best


def check_divergence_condition(pen: PenaltySpec, n_grid, r_grid,
                               q_n: TuningSchedule | None = None,
                               p0: int = 1) -> PenaltyConditionReport:
    """Check the scaled sphere infimum inf_{|u|=r} sum_k p_n(u_k/sqrt(n)) / q_n.

    Satisfied when, for every n on the grid, the curve in r is nondecreasing,
    grows by more than x2 from the smallest to largest r, and keeps growing by
    more than x2 over the top half of the r-grid (the saturation check that
    separates bounded penalties from divergent ones). Also fits a power r^s to
    the scaled curve.
    """
    n_grid = tuple(int(n) for n in n_grid)
    r_grid = tuple(float(r) for r in r_grid)
    if len(n_grid) == 0 or len(r_grid) < 3:
        raise InvalidInputError("divergence check needs a nonempty n-grid and >= 3 r values")
    if any(r <= 0 for r in r_grid) or any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise InvalidInputError("r-grid must be positive and strictly increasing")
    if p0 < 1:
        raise InvalidInputError("p0 must be >= 1")
    q = q_n if q_n is not None else default_divergence_scale(pen)

    vals = np.empty((len(n_grid), len(r_grid)))
    for i, n in enumerate(n_grid):
        qn = q.value(n)
        if qn <= 0.0:
            raise InvalidInputError(f"q_n must be positive, got {qn} at n={n}")
        for j, r in enumerate(r_grid):
            vals[i, j] = _sphere_infimum(pen, n, r, p0) / qn

    mid = len(r_grid) // 2
    ok = True
    for i in range(len(n_grid)):
        row = vals[i]
        nondec = bool(np.all(np.diff(row) >= -1e-9 * max(1.0, float(np.max(np.abs(row))))))
        grow_total = row[-1] > 2.0 * row[0]
        grow_tail = row[-1] > 2.0 * row[mid]
        if not (nondec and grow_total and grow_tail):
            ok = False
            break

    fitted = None
    fit_err = None
    pos = vals > 0.0
    if np.any(pos):
        logr = np.log(np.asarray(r_grid))
        xs, ys = [], []
        for i in range(len(n_grid)):
            m = pos[i]
            xs.append(logr[m])
            ys.append(np.log(vals[i][m]))
        x = np.concatenate(xs)
        y = np.concatenate(ys)
        if x.size >= 2 and float(np.ptp(x)) > 0:
            A = np.vstack([x, np.ones_like(x)]).T
            coef, *_ = np.linalg.lstsq(A, y, rcond=None)
            fitted = float(coef[0])
            fit_err = float(np.sqrt(np.mean((A @ coef - y) ** 2)))

    return PenaltyConditionReport(
        condition=COND_DIVERGENCE,
        n_grid=n_grid,
        probes=r_grid,
        values=vals,
        verdict="satisfied" if ok else "not-satisfied",
        fitted_exponent=fitted,
        fit_error=fit_err,
        detail={"q_n": {"c": q.c, "e": q.e}, "p0": p0},
    )


def check_smooth_conditions(pen: PenaltySpec, n_grid, a_probes, b_probes,
                            beta: float) -> tuple[PenaltyConditionReport, PenaltyConditionReport]:
    """Finite-n surrogates for the growth cap sup_n p_n(a)/n^(1/2+beta) < inf
    and the root-n shift bound |p_n(a + b/sqrt(n)) - p_n(a)| <= c_{a,b} |b|^kappa.

    Returns (growth_report, shift_report). The shift condition is a limsup at
    fixed probes; the probe sets are a documented knob, not a claim.
    """
    n_grid = tuple(int(n) for n in n_grid)
    a_probes = tuple(float(a) for a in a_probes)
    b_probes = tuple(float(b) for b in b_probes)
    if len(n_grid) < 3:
        raise InvalidInputError("smooth-condition check needs >= 3 grid points")
    if any(a == 0.0 for a in a_probes):
        raise InvalidInputError("shift probes require a != 0")
    if not (0.0 < beta < 0.5):
        raise InvalidInputError(f"beta must lie in (0, 1/2), got {beta}")

    growth = np.empty((len(a_probes), len(n_grid)))
    for i, a in enumerate(a_probes):
        for j, n in enumerate(n_grid):
            growth[i, j] = _value_scalar(pen, n, a) / float(n) ** (0.5 + beta)
    growth_ok = all(boundedness_verdict(growth[i]) == PLAUSIBLY_BOUNDED
                    for i in range(len(a_probes)))
    growth_report = PenaltyConditionReport(
        condition=COND_GROWTH_CAP,
        n_grid=n_grid,
        probes=a_probes,
        values=growth,
        verdict="satisfied" if growth_ok else "not-satisfied",
        detail={"beta": beta},
    )

    diffs = np.empty((len(a_probes), len(b_probes), len(n_grid)))
    for i, a in enumerate(a_probes):
        for j, b in enumerate(b_probes):
            for k, n in enumerate(n_grid):
                diffs[i, j, k] = abs(_value_scalar(pen, n, a + b / math.sqrt(n))
                                     - _value_scalar(pen, n, a))
    shift_ok = all(
        boundedness_verdict(diffs[i, j]) == PLAUSIBLY_BOUNDED
        for i in range(len(a_probes)) for j in range(len(b_probes))
    )
    # Level of each (a, b) sequence over the top half of the grid = the
    # finite-n limsup surrogate; kappa is the smallest power keeping the
    # levels bounded across |b|.
    half = len(n_grid) // 2
    levels = diffs[:, :, half:].max(axis=2)
    order = np.argsort(np.abs(np.asarray(b_probes)))
    kappa = None
    for cand in (1, 2):
        ratios = levels / np.abs(np.asarray(b_probes))[None, :] ** cand
        ok = all(boundedness_verdict(ratios[i, order]) == PLAUSIBLY_BOUNDED
                 for i in range(len(a_probes)))
        if ok:
            kappa = cand
            break
    shift_report = PenaltyConditionReport(
        condition=COND_SHIFT,
        n_grid=n_grid,
        probes=tuple((a, b) for a in a_probes for b in b_probes),
        values=diffs,
        verdict="satisfied" if shift_ok else "not-satisfied",
        kappa=kappa,
        detail={"levels": levels.tolist()},
    )
    return growth_report, shift_report
