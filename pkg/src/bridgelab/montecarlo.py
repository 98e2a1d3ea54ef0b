"""Replication engine and statistical verdicts: tail curves, selection
frequencies, moment trajectories, and distances to the limit laws.

The whole pipeline is a pure function of MCConfig: per-replication seeds are
derived from (master seed, n, rep), designs are frozen once per n, and
aggregation runs in (n, rep) order regardless of worker scheduling, so results
are bit-identical across serial and parallel execution.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import ks_2samp

from .asymptotics import (
    REGIME_SPARSE_NORMAL,
    REGIME_SPARSE_SLOW,
    REGIME_STANDARD,
    LimitLaw,
    regime_classify,
    sample_limit_argmin,
)
from .contrast import Contrast
from .errors import InvalidInputError, InvalidSpecError
from .model import Dataset, DesignSpec, NoiseSpec, TrueParameter, generate_design, gram, simulate_responses
from .penalty import PenaltySpec
from .solver import Box, SolverOptions, minimize
from .util import boundedness_verdict, derive_seed, spawn_rng

BOOTSTRAP_RESAMPLES = 200
INFORMATIVE_COUNT = 10  # p_hat >= INFORMATIVE_COUNT / R marks the informative tail range


@dataclass(frozen=True)
class MCConfig:
    """Everything a campaign needs; hashable so configs can be echoed and compared."""

    design: DesignSpec
    noise: NoiseSpec
    truth: TrueParameter
    penalty: PenaltySpec
    n_grid: tuple[int, ...]
    replications: int
    master_seed: int
    box: Box
    solver: SolverOptions = SolverOptions()
    r_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
    moment_orders: tuple[float, ...] = (2.0, 4.0)
    tail_orders: tuple[float, ...] = (2.0, 4.0)

    def __post_init__(self):
        if self.replications < 100:
            raise InvalidSpecError("need at least 100 replications per n")
        if len(self.n_grid) < 1 or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidSpecError("n-grid must be nonempty and strictly increasing")
        if any(n < self.truth.p for n in self.n_grid):
            raise InvalidSpecError("every n must be >= p")
        if any(r <= 0 for r in self.r_grid) or any(b <= a for a, b in zip(self.r_grid, self.r_grid[1:])):
            raise InvalidSpecError("r-grid must be positive and strictly increasing")
        if self.design.p != self.truth.p:
            raise InvalidSpecError("design and truth dimensions differ")
        if self.box.p != self.truth.p:
            raise InvalidSpecError("box and truth dimensions differ")


@dataclass
class ReplicationRecord:
    """One solved replication with its scaled coordinates."""

    n: int
    rep: int
    seed: int
    theta_hat: np.ndarray
    zero_flags: np.ndarray
    objective: float
    converged: bool
    u_hat: np.ndarray  # sqrt(n) * zero-block estimate
    v_hat: np.ndarray  # sqrt(n) * (nonzero-block estimate - rho0)


@dataclass
class ReplicationSet:
    config: MCConfig
    records: list[ReplicationRecord]
    designs: dict[int, np.ndarray]
    C0: np.ndarray
    c0_source: str
    warnings: list[str] = field(default_factory=list)

    def at_n(self, n: int) -> list[ReplicationRecord]:
        return [r for r in self.records if r.n == n]

    def u_norms(self, n: int) -> np.ndarray:
        return np.array([float(np.linalg.norm(r.u_hat)) for r in self.at_n(n)])

    def v_norms(self, n: int) -> np.ndarray:
        return np.array([float(np.linalg.norm(r.v_hat)) for r in self.at_n(n)])


def design_seed(master_seed: int, n: int) -> int:
    return derive_seed(master_seed, n)


def replication_seed(master_seed: int, n: int, rep: int) -> int:
    return derive_seed(master_seed, n, rep)


def _solve_one(cfg: MCConfig, X: np.ndarray, n: int, rep: int) -> ReplicationRecord:
    seed = replication_seed(cfg.master_seed, n, rep)
    Y = simulate_responses(X, cfg.truth, cfg.noise, seed)
    ds = Dataset(X=X, Y=Y, truth=cfg.truth, n=n)
    res = minimize(Contrast(dataset=ds, penalty=cfg.penalty), cfg.box, cfg.solver)
    sqrt_n = math.sqrt(n)
    return ReplicationRecord(
        n=n,
        rep=rep,
        seed=seed,
        theta_hat=res.theta_hat,
        zero_flags=res.exact_zero_flags,
        objective=res.objective,
        converged=res.converged,
        u_hat=sqrt_n * res.z_hat,
        v_hat=sqrt_n * (res.rho_hat - cfg.truth.rho0_array),
    )


def _run_block(args) -> list[tuple[int, int, ReplicationRecord]]:
    cfg, n, rep_lo, rep_hi = args
    X = generate_design(cfg.design, n, design_seed(cfg.master_seed, n))
    out = []
    for rep in range(rep_lo, rep_hi):
        out.append((n, rep, _solve_one(cfg, X, n, rep)))
    return out


def run_replications(cfg: MCConfig, threads: int = 1) -> ReplicationSet:
    """Run the campaign; records are complete (non-converged solves are kept
    and flagged, never dropped) and independent of worker scheduling."""
    if threads < 0:
        raise InvalidInputError("threads must be >= 0 (0 means auto)")
    if threads == 0:
        threads = min(os.cpu_count() or 1, 8)

    records: dict[tuple[int, int], ReplicationRecord] = {}
    try:
        designs: dict[int, np.ndarray] = {
            n: generate_design(cfg.design, n, design_seed(cfg.master_seed, n))
            for n in cfg.n_grid
        }
    except Exception as exc:
        raise InvalidInputError(
            f"dataset generation failed ({exc}); config: design={cfg.design}, "
            f"truth={cfg.truth}, n_grid={cfg.n_grid}, seed={cfg.master_seed}") from exc
    if threads == 1:
        for n in cfg.n_grid:
            X = designs[n]
            for rep in range(cfg.replications):
                records[(n, rep)] = _solve_one(cfg, X, n, rep)
    else:
        block = max(1, math.ceil(cfg.replications / (threads * 4)))
        tasks = []
        for n in cfg.n_grid:
            for lo in range(0, cfg.replications, block):
                tasks.append((cfg, n, lo, min(lo + block, cfg.replications)))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(_run_block, tasks):
                for n, rep, rec in chunk:
                    records[(n, rep)] = rec

    ordered = [records[(n, rep)] for n in cfg.n_grid for rep in range(cfg.replications)]
    if len(ordered) != len(cfg.n_grid) * cfg.replications:
        raise RuntimeError("replication records are incomplete")

    warnings = []
    for n in cfg.n_grid:
        bad = sum(1 for r in ordered if r.n == n and not r.converged)
        if bad > 0.01 * cfg.replications:
            warnings.append(f"{bad} of {cfg.replications} solves did not stabilize at n={n}")
        touching = sum(1 for r in ordered if r.n == n and cfg.box.on_boundary(r.theta_hat))
        if touching:
            warnings.append(
                f"{touching} estimates touch the box boundary at n={n}; "
                "the box, not the model, may be binding")

    n_max = cfg.n_grid[-1]
    if cfg.design.kind == "standardized-orthonormal":
        C0 = np.eye(cfg.truth.p)
        c0_source = "standardized-identity"
    else:
        C0 = gram(designs[n_max], (cfg.truth.p0, cfg.truth.p1)).C_n
        c0_source = "empirical-largest-n"
    return ReplicationSet(config=cfg, records=ordered, designs=designs,
                          C0=C0, c0_source=c0_source, warnings=warnings)


# ---------------------------------------------------------------------------
# Tail curves
# ---------------------------------------------------------------------------


@dataclass
class TailCurve:
    n: int
    r: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    censored: np.ndarray
    rl: dict[float, np.ndarray]
    slope: float | None
    note: str = ""


@dataclass
class TailReport:
    curves: list[TailCurve]
    orders: tuple[float, ...]
    cutoff: float


def survival_curve(values: np.ndarray, r_grid) -> tuple[np.ndarray, np.ndarray]:
    """Empirical survival P(value >= r) with binomial standard errors."""
    values = np.asarray(values, dtype=float)
    r = np.asarray(r_grid, dtype=float)
    R = values.size
    p_hat = np.mean(values[:, None] >= r[None, :], axis=0)
    se = np.sqrt(p_hat * (1.0 - p_hat) / R)
    return p_hat, se


def fit_tail_slope(r, p_hat, cutoff: float) -> tuple[float | None, str]:
    """Least-squares slope of log p_hat on log r over the informative range."""
    r = np.asarray(r, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    mask = p_hat >= cutoff
    if np.count_nonzero(mask) < 2 or np.ptp(np.log(r[mask])) == 0.0:
        if np.all(p_hat == 0.0):
            return None, "all mass at 0"
        return None, "informative range too short for a slope fit"
    x = np.log(r[mask])
    y = np.log(p_hat[mask])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), ""


def tail_curve(rs: ReplicationSet, r_grid=None, tail_orders=None) -> TailReport:
    """Per-n empirical survival of |u_hat| = |sqrt(n) z_hat| with r^L overlays.

    p_hat values below INFORMATIVE_COUNT/R are still reported but censored for
    slope fitting; an all-zero sample is the strongest possible tail verdict
    and leaves the slope undefined.
    """
    cfg = rs.config
    r = np.asarray(r_grid if r_grid is not None else cfg.r_grid, dtype=float)
    orders = tuple(tail_orders if tail_orders is not None else cfg.tail_orders)
    cutoff = INFORMATIVE_COUNT / cfg.replications
    curves = []
    for n in cfg.n_grid:
        norms = rs.u_norms(n)
        p_hat, se = survival_curve(norms, r)
        if np.any(np.diff(p_hat) > 0.0):
            raise RuntimeError("survival function must be non-increasing")
        rl = {L: r ** L * p_hat for L in orders}
        slope, note = fit_tail_slope(r, p_hat, cutoff)
        curves.append(TailCurve(n=n, r=r, p_hat=p_hat, se=se,
                                censored=p_hat < cutoff, rl=rl, slope=slope, note=note))
    return TailReport(curves=curves, orders=orders, cutoff=cutoff)


def pldi_probe(report: TailReport) -> dict:
    """Uniform-in-n surrogate: per order L, the max of r^L p_hat over the
    informative range must not grow monotonically by more than x2 along n."""
    out = {}
    for L in report.orders:
        per_n = []
        for curve in report.curves:
            informative = ~curve.censored
            vals = curve.rl[L][informative]
            per_n.append(float(np.max(vals)) if vals.size else 0.0)
        seq = np.asarray(per_n)
        out[L] = {
            "per_n": per_n,
            "max": float(np.max(seq)) if seq.size else 0.0,
            "verdict": boundedness_verdict(seq),
        }
    return out


# ---------------------------------------------------------------------------
# Selection frequencies and moments
# ---------------------------------------------------------------------------


@dataclass
class SelectionCurve:
    n_grid: tuple[int, ...]
    frequency: np.ndarray
    se: np.ndarray
    per_coordinate: np.ndarray  # len(n_grid) x p0


def sparsity_curve(rs: ReplicationSet) -> SelectionCurve:
    """Frequency of the exact event {every zero-block coordinate == 0} per n."""
    cfg = rs.config
    if cfg.truth.p0 < 1:
        raise InvalidInputError("selection frequencies need a nonempty zero block")
    freqs, ses, per_coord = [], [], []
    R = cfg.replications
    for n in cfg.n_grid:
        recs = rs.at_n(n)
        hits = np.array([bool(np.all(r.zero_flags)) for r in recs])
        p = float(np.mean(hits))
        freqs.append(p)
        ses.append(math.sqrt(p * (1.0 - p) / R))
        per_coord.append(np.mean(np.stack([r.zero_flags for r in recs]), axis=0))
    return SelectionCurve(n_grid=cfg.n_grid, frequency=np.asarray(freqs),
                          se=np.asarray(ses), per_coordinate=np.stack(per_coord))


@dataclass
class MomentTrajectory:
    order: float
    n_grid: tuple[int, ...]
    u_moment: np.ndarray
    u_se: np.ndarray
    v_moment: np.ndarray
    v_se: np.ndarray
    u_verdict: str
    v_verdict: str


def _bootstrap_se(values: np.ndarray, rng: np.random.Generator) -> float:
    R = values.size
    idx = rng.integers(0, R, size=(BOOTSTRAP_RESAMPLES, R))
    means = values[idx].mean(axis=1)
    return float(np.std(means, ddof=1))


def moment_trajectory(rs: ReplicationSet, orders=None) -> list[MomentTrajectory]:
    """E|u|^q and E|v|^q along the n-grid with bootstrap standard errors.

    The boundedness verdict flags a trajectory only when it grows monotonically
    by more than x2 across the grid; shrinking trajectories are bounded.
    """
    cfg = rs.config
    orders = tuple(orders if orders is not None else cfg.moment_orders)
    if any(q > 8.0 for q in orders):
        raise InvalidInputError("moment orders above 8 are numerically unreliable here")
    out = []
    for qi, q in enumerate(orders):
        u_m, u_s, v_m, v_s = [], [], [], []
        for n in cfg.n_grid:
            rng = spawn_rng(cfg.master_seed, 946, n, qi)
            u = rs.u_norms(n) ** q
            v = rs.v_norms(n) ** q
            u_m.append(float(np.mean(u)) if u.size else 0.0)
            v_m.append(float(np.mean(v)))
            u_s.append(_bootstrap_se(u, rng) if u.size else 0.0)
            v_s.append(_bootstrap_se(v, rng))
        out.append(MomentTrajectory(
            order=q, n_grid=cfg.n_grid,
            u_moment=np.asarray(u_m), u_se=np.asarray(u_s),
            v_moment=np.asarray(v_m), v_se=np.asarray(v_s),
            u_verdict=boundedness_verdict(u_m),
            v_verdict=boundedness_verdict(v_m),
        ))
    return out


# ---------------------------------------------------------------------------
# Limit-law distances
# ---------------------------------------------------------------------------


def _config_regime(cfg: MCConfig):
    if cfg.penalty.family not in ("bridge", "none"):
        raise InvalidInputError(
            "limit-law comparison is defined for the bridge family (SCAD/SELO "
            "are covered by the penalty-condition checkers)")
    gamma = cfg.penalty.gamma if cfg.penalty.family == "bridge" else 2.0
    return regime_classify(gamma, cfg.penalty.schedule)


def compare_to_limit(rs: ReplicationSet, law: LimitLaw, limit_samples=None) -> dict:
    """Distance report between the scaled estimates and the limit law.

    sparse-normal: mean gap in SE units and relative covariance gap;
    standard: per-margin ECDF sup-distance against argmin samples of matched R;
    sparse-slow: location-only check of (n/lambda_n)(rho_hat - rho0);
    pseudo-true: distance to the pseudo-true point plus exact-zero frequency.
    Refuses a law whose regime does not match the campaign's.
    """
    cfg = rs.config
    regime = _config_regime(cfg)
    if regime.tag != law.regime.tag:
        raise InvalidInputError(
            f"campaign regime {regime.tag} does not match law regime {law.regime.tag}")
    report = {"regime": law.regime.tag, "per_n": {}}
    R = cfg.replications

    if law.regime.tag == REGIME_SPARSE_NORMAL:
        bias = np.asarray(law.bias, dtype=float)
        cov = np.asarray(law.cov, dtype=float)
        for n in cfg.n_grid:
            V = np.stack([r.v_hat for r in rs.at_n(n)])
            mean = V.mean(axis=0)
            se = V.std(axis=0, ddof=1) / math.sqrt(R)
            gap = np.where(se > 0.0, np.abs(mean - bias) / np.where(se > 0, se, 1.0), np.abs(mean - bias))
            emp_cov = np.atleast_2d(np.cov(V.T)) if R > 1 else np.zeros_like(cov)
            denom = float(np.linalg.norm(cov))
            if denom > 0.0:
                cov_gap = float(np.linalg.norm(emp_cov - cov)) / denom
            else:
                cov_gap = 0.0 if float(np.linalg.norm(emp_cov)) == 0.0 else math.inf
            report["per_n"][n] = {
                "mean": mean.tolist(),
                "limit_mean": bias.tolist(),
                "mean_gap_in_se": gap.tolist(),
                "cov_rel_gap": cov_gap,
                "emp_cov": emp_cov.tolist(),
                "limit_cov": cov.tolist(),
            }
        return report

    if law.regime.tag == REGIME_STANDARD:
        for n in cfg.n_grid:
            recs = rs.at_n(n)
            scaled = np.stack([np.concatenate([r.u_hat, r.v_hat]) for r in recs])
            if limit_samples is None:
                draws = sample_limit_argmin(law, R=len(recs),
                                            seed=derive_seed(cfg.master_seed, 777, n))
            else:
                draws = np.asarray(limit_samples, dtype=float)
            ks = [float(ks_2samp(scaled[:, j], draws[:, j]).statistic)
                  for j in range(scaled.shape[1])]
            report["per_n"][n] = {
                "ks_per_margin": ks,
                "emp_moment2": np.mean(np.sum(scaled ** 2, axis=1)).tolist(),
                "limit_moment2": np.mean(np.sum(draws ** 2, axis=1)).tolist(),
            }
        return report

    if law.regime.tag == REGIME_SPARSE_SLOW:
        drift = np.asarray(law.drift, dtype=float)
        sch = cfg.penalty.schedule
        for n in cfg.n_grid:
            lam_n = sch.value(n)
            Vn = np.stack([(n / lam_n) * (r.theta_hat[cfg.truth.p0:] - cfg.truth.rho0_array)
                           for r in rs.at_n(n)])
            mean = Vn.mean(axis=0)
            se = Vn.std(axis=0, ddof=1) / math.sqrt(R)
            gap = np.abs(mean - drift) / np.where(se > 0, se, 1.0)
            report["per_n"][n] = {
                "mean": mean.tolist(),
                "limit_drift": drift.tolist(),
                "mean_gap_in_se": gap.tolist(),
            }
        return report

    # pseudo-true
    point = np.asarray(law.pseudo_true_point, dtype=float)
    zero_idx = np.flatnonzero(law.pseudo_zero_flags)
    for n in cfg.n_grid:
        recs = rs.at_n(n)
        thetas = np.stack([r.theta_hat for r in recs])
        mean = thetas.mean(axis=0)
        entry = {
            "mean": mean.tolist(),
            "pseudo_true": point.tolist(),
            "mean_distance": float(np.linalg.norm(mean - point)),
        }
        if zero_idx.size:
            hits = np.all(thetas[:, zero_idx] == 0.0, axis=1)
            entry["pseudo_zero_frequency"] = float(np.mean(hits))
        else:
            entry["note"] = ("pseudo-true point has no exactly-zero coordinate; "
                             "sparse check skipped")
        report["per_n"][n] = entry
    return report
