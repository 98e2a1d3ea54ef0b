import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from bridgelab.contrast import Contrast, contrast_value
from bridgelab.errors import InvalidInputError
from bridgelab.model import DesignSpec, NoiseSpec, TrueParameter, make_dataset
from bridgelab.penalty import PenaltySpec, TuningSchedule, zero_penalty
from bridgelab.solver import Box, SolverOptions, _coordinate_descent, grid_oracle, minimize
from conftest import random_penalty


def _bridge(c, e, gamma):
    return PenaltySpec(family="bridge", schedule=TuningSchedule(c, e), gamma=gamma)


def _contrast(pen, n=30, sigma=1.0, seed=5, p0=1, rho0=(1.0,),
              kind="standardized-orthonormal"):
    truth = TrueParameter(p0=p0, rho0=rho0)
    ds = make_dataset(DesignSpec(kind=kind, p=truth.p), truth,
                      NoiseSpec("gaussian", sigma), n, design_seed=seed, noise_seed=seed + 1)
    return Contrast(dataset=ds, penalty=pen)


def test_box_validation_and_membership():
    box = Box(lo=(-1.0, -2.0), hi=(1.0, 2.0))
    assert box.contains([0.0, 0.0])
    assert not box.contains([1.5, 0.0])
    assert box.on_boundary([1.0, 0.0])
    with pytest.raises(Exception):
        Box(lo=(1.0,), hi=(1.0,))


def test_unpenalized_minimize_recovers_ols():
    c = _contrast(zero_penalty(), n=40, seed=2)
    res = minimize(c, Box.cube(2, half=50.0))
    ols, *_ = np.linalg.lstsq(c.dataset.X, c.dataset.Y, rcond=None)
    assert_allclose(res.theta_hat, ols, atol=1e-8)
    assert res.converged


def test_l1_standardized_matches_soft_threshold():
    lam_c, lam_e = 2.0, 0.4
    c = _contrast(_bridge(lam_c, lam_e, 1.0), n=50, seed=7)
    res = minimize(c, Box.cube(2, half=50.0))
    X, Y, n = c.dataset.X, c.dataset.Y, c.n
    beta = X.T @ Y / n
    lam = lam_c * n ** lam_e
    expect = np.sign(beta) * np.maximum(np.abs(beta) - lam / (2.0 * n), 0.0)
    assert_allclose(res.theta_hat, expect, atol=1e-8)


def test_minimize_beats_grid_oracle_on_nonconvex_instance():
    c = _contrast(_bridge(1.0, 0.5, 0.5), n=30, seed=11, kind="bounded-random-frozen")
    box = Box.cube(2)
    res = minimize(c, box)
    oracle = grid_oracle(c, box, stages=3, points_per_axis=41)
    assert res.objective <= oracle.objective + 1e-8 * (1.0 + abs(oracle.objective))


def test_minimize_oracle_dominance_small_sample():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        pen = random_penalty(rng)
        p0 = int(rng.integers(0, 3))
        p1 = int(rng.integers(1, 3 - p0)) if p0 < 2 else 1
        rho0 = tuple(float(rng.uniform(0.5, 2.0) * (1 if rng.random() < 0.5 else -1))
                     for _ in range(p1))
        n = int(rng.integers(max(p0 + p1, 5), 50))
        c = _contrast(pen, n=n, seed=int(rng.integers(1, 10**6)), p0=p0, rho0=rho0,
                      kind="bounded-random-frozen")
        box = Box.cube(p0 + p1)
        res = minimize(c, box)
        oracle = grid_oracle(c, box, stages=3, points_per_axis=41)
        assert res.objective <= oracle.objective + 1e-8 * (1.0 + abs(oracle.objective))


def test_minimize_never_above_multistart_objectives():
    c = _contrast(_bridge(1.0, 0.6, 0.5), n=30, seed=4)
    box = Box.cube(2)
    res = minimize(c, box)
    for start in (np.zeros(2), c.dataset.truth.theta,
                  np.linalg.lstsq(c.dataset.X, c.dataset.Y, rcond=None)[0]):
        assert res.objective <= contrast_value(c, box.clip(start)) + 1e-12


def test_exact_zero_is_fixed_point():
    c = _contrast(_bridge(1.0, 0.6, 0.5), n=100, seed=6)
    box = Box.cube(2)
    res = minimize(c, box)
    assert res.exact_zero_flags[0]
    assert res.z_hat[0] == 0.0
    rerun, _, _ = _coordinate_descent(c, box, SolverOptions(), res.theta_hat.copy())
    assert rerun[0] == 0.0


def test_minimize_deterministic():
    c = _contrast(_bridge(0.5, 0.5, 0.5), n=25, seed=3)
    r1 = minimize(c, Box.cube(2))
    r2 = minimize(c, Box.cube(2))
    assert_array_equal(r1.theta_hat, r2.theta_hat)
    assert r1.objective == r2.objective
    assert r1.iterations == r2.iterations


def test_minimize_respects_box():
    c = _contrast(zero_penalty(), n=40, seed=2)
    box = Box(lo=(-0.1, -0.1), hi=(0.1, 0.1))
    res = minimize(c, box)
    assert box.contains(res.theta_hat)
    assert box.on_boundary(res.theta_hat)  # OLS is far outside this tiny box


def test_minimize_rejects_nonfinite_data():
    c = _contrast(zero_penalty(), n=10, seed=1)
    c.dataset.Y[0] = np.nan
    with pytest.raises(InvalidInputError):
        minimize(c, Box.cube(2))


def test_grid_oracle_quadratic_argmin():
    c = _contrast(zero_penalty(), n=30, sigma=0.0, seed=9, p0=0, rho0=(2.0,))
    res = grid_oracle(c, Box.cube(1), stages=4, points_per_axis=41)
    assert res.theta_hat[0] == pytest.approx(2.0, abs=1e-3)


def test_grid_oracle_monotone_in_stages():
    c = _contrast(_bridge(1.0, 0.5, 0.5), n=30, seed=13, kind="bounded-random-frozen")
    box = Box.cube(2)
    objs = [grid_oracle(c, box, stages=s, points_per_axis=21).objective for s in (1, 2, 3, 4)]
    assert all(b <= a + 1e-15 for a, b in zip(objs, objs[1:]))


def test_grid_oracle_represents_exact_zero():
    c = _contrast(_bridge(2.0, 0.6, 0.5), n=100, seed=6)
    res = grid_oracle(c, Box.cube(2), stages=2, points_per_axis=21)
    assert res.z_hat[0] == 0.0
    assert res.exact_zero_flags[0]


def test_grid_oracle_cost_guard():
    truth = TrueParameter(p0=2, rho0=(1.0, 1.0))
    ds = make_dataset(DesignSpec(kind="standardized-orthonormal", p=4), truth,
                      NoiseSpec("gaussian", 1.0), 20, design_seed=1, noise_seed=2)
    c = Contrast(dataset=ds, penalty=zero_penalty())
    with pytest.raises(InvalidInputError):
        grid_oracle(c, Box.cube(4))


def test_zero_column_coordinate_goes_to_zero():
    rows = tuple((1.0, 0.0) for _ in range(12))
    truth = TrueParameter(p0=1, rho0=(1.0,))
    X = np.asarray(rows)
    Y = X @ truth.theta  # noiseless; second column is identically zero
    from bridgelab.model import Dataset

    # column order: zero block first, so put the dead column in the zero block
    ds = Dataset(X=X[:, ::-1].copy(), Y=Y, truth=truth, n=12)
    c = Contrast(dataset=ds, penalty=zero_penalty())
    res = minimize(c, Box.cube(2))
    assert res.theta_hat[0] == 0.0
