"""Shared test oracles: independent brute-force references for the exact solvers."""

from __future__ import annotations

import numpy as np

from bridgelab.penalty import PenaltySpec, TuningSchedule, penalty_value


def scalar_objective(pen, n, c, b, x):
    return c * (np.asarray(x, dtype=float) - b) ** 2 + penalty_value(pen, n, x)


def prox_grid_oracle(pen, n, c, b, stages=3, points=2001, pad=1.0):
    """Nested-grid argmin of the scalar prox objective over [-|b|-pad, |b|+pad].

    Independent of the prox implementation: pure lattice evaluation with the
    exact-zero point injected at every stage.
    """
    center = 0.0
    span = abs(b) + pad
    best_x, best_f = 0.0, float(scalar_objective(pen, n, c, b, 0.0))
    for _ in range(stages):
        xs = np.linspace(center - span, center + span, points)
        xs = np.append(xs, 0.0)
        fs = scalar_objective(pen, n, c, b, xs)
        i = int(np.argmin(fs))
        if fs[i] < best_f:
            best_f = float(fs[i])
            best_x = float(xs[i])
        center = best_x
        span *= 4.0 / points
    return best_x, best_f


def random_penalty(rng, families=("bridge", "scad", "selo"), gammas=(0.5, 1.0, 2.0)):
    """A sane random PenaltySpec for randomized comparison tests."""
    family = families[rng.integers(0, len(families))]
    c = float(rng.uniform(0.05, 3.0))
    e = float(rng.uniform(-0.5, 0.6))
    schedule = TuningSchedule(c=c, e=e)
    if family == "bridge":
        gamma = float(gammas[rng.integers(0, len(gammas))])
        return PenaltySpec(family="bridge", schedule=schedule, gamma=gamma)
    if family == "scad":
        return PenaltySpec(family="scad", schedule=TuningSchedule(c=float(rng.uniform(0.01, 0.5)), e=e),
                           a=float(rng.uniform(2.2, 5.0)))
    tau = TuningSchedule(c=float(rng.uniform(0.01, 1.0)), e=float(rng.uniform(-1.5, 0.0)))
    return PenaltySpec(family="selo", schedule=TuningSchedule(c=float(rng.uniform(0.01, 0.5)), e=e),
                       tau=tau)
