"""Theory-level oracles: dense Jacobi eigensolver, theorem parameter
formulas, the two GD-to-perceptron reduction checks, the analytic
lower-bound replay, and exact kernel starts.

The Jacobi solver is validated on knowns and on residuals of random
symmetric matrices (never against np.linalg.eigh, which the package avoids
for oracle duty).  The replay is checked against the closed-form separation
bound it encodes.
"""

import math

import numpy as np
import pytest

from pdx.data import Dataset, make_two_sample
from pdx.linalg import ConvOperator
from pdx.oracles import (jacobi_eigh, kernel_residual, lower_bound_replay,
                         null_space_start, reduction_check_linear,
                         reduction_check_quadratic, theorem_params)
from pdx.rng import spawn_rng, uniform_sphere
from pdx.spectral import recommend_step_size, two_sample_spectrum

rng = np.random.default_rng(20240813)


def random_dataset(d, n):
    b = rng.standard_normal((n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return Dataset(b, y)


def test_jacobi_known_2x2():
    vals, vecs = jacobi_eigh(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(vals, [3.0, 1.0], atol=1e-12)
    for col, ref in zip(vecs.T, ([1, 1], [1, -1])):
        ref = np.asarray(ref) / np.sqrt(2.0)
        assert min(np.max(np.abs(col - ref)), np.max(np.abs(col + ref))) < 1e-12


def test_jacobi_diagonal_passthrough():
    vals, vecs = jacobi_eigh(np.diag([1.0, 5.0, -2.0]))
    assert np.array_equal(vals, [5.0, 1.0, -2.0])
    assert np.allclose(np.abs(vecs), np.eye(3)[:, [1, 0, 2]], atol=0)


def test_jacobi_random_residuals():
    for _ in range(20):
        n = int(rng.integers(2, 13))
        X = rng.standard_normal((n, n))
        M = X + X.T
        vals, vecs = jacobi_eigh(M)
        assert np.all(np.diff(vals) <= 0)
        assert np.max(np.abs(vecs.T @ vecs - np.eye(n))) < 1e-12
        resid = np.max(np.abs(M @ vecs - vecs * vals))
        assert resid < 1e-10 * max(1.0, np.linalg.norm(M))


def test_jacobi_rejects_bad_input():
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))  # not symmetric
    with pytest.raises(ValueError):
        jacobi_eigh(np.ones((2, 3)))
    with pytest.raises(ValueError):
        jacobi_eigh(np.eye(513))  # over the dense cap


def test_theorem_params_internal_identities():
    d, mu, rho = 16, 0.05, 0.1
    theta0 = uniform_sphere(spawn_rng(0, 0x70), d + 2)
    tp = theorem_params(d, mu, rho, theta0)
    spec = two_sample_spectrum(d, mu)
    assert tp.corr0 == pytest.approx(float(spec.v_mu_plus @ theta0), abs=0)
    assert tp.gamma == 1.0 / (4.0 * math.sqrt(d))
    a = (2.0**27
         * math.log(2.0**62 * tp.theta0_norm**2 / (rho**3 * tp.corr0**2))
         * math.log(2.0**15 * math.sqrt(d) * tp.theta0_norm**2 / (mu * tp.corr0**2)))
    assert tp.a_factor == pytest.approx(a, rel=1e-14)
    assert tp.b_factor == pytest.approx(a * math.log(math.sqrt(d) * a / mu), rel=1e-14)
    assert tp.T == math.ceil(tp.b_factor * math.sqrt(d) / mu)
    denom = 4096.0 * tp.T * math.sqrt(max(d, math.log(tp.T / rho)))
    assert tp.sigma * denom == pytest.approx(abs(tp.corr0), rel=1e-12)
    assert 0.0 < tp.sigma < abs(tp.corr0)


def test_theorem_horizon_scales_like_sqrt_d():
    vals = {}
    for d in (100, 400):
        theta0 = uniform_sphere(spawn_rng(1, 0x70), d + 2)
        vals[d] = theorem_params(d, 0.05, 0.1, theta0).T
    # T ~ sqrt(d) * polylog, so quadrupling d roughly doubles T
    assert 1.9 <= vals[400] / vals[100] <= 2.6


def test_theorem_params_validation():
    theta0 = uniform_sphere(spawn_rng(0, 0x70), 12)
    with pytest.raises(ValueError):
        theorem_params(10, 0.2, 0.1, theta0)  # mu over 1/10
    with pytest.raises(ValueError):
        theorem_params(10, 0.0, 0.1, theta0)
    with pytest.raises(ValueError):
        theorem_params(10, 0.05, 1.0, theta0)
    with pytest.raises(ValueError):
        theorem_params(10, 0.05, 0.1, theta0[:-1])  # wrong length
    with pytest.raises(ValueError):
        # all-ones is exactly orthogonal to the small-eigenvalue direction
        theorem_params(10, 0.05, 0.1, np.ones(12))


def test_reduction_linear_gap_vanishes_with_gamma():
    ds = random_dataset(6, 4)
    rep = reduction_check_linear(ds, gammas=(1e2, 1e4, 1e6), horizon=20)
    assert rep.scales == (1e2, 1e4, 1e6)
    assert rep.sign_agreement == ()
    slack = 1e-12 * max(1.0, rep.reference)
    assert rep.gaps[1] <= rep.gaps[0] + slack
    assert rep.gaps[2] <= rep.gaps[1] + slack
    assert rep.gaps[2] <= 1e-4 * rep.reference


def test_reduction_quadratic_direction_gap():
    ds = random_dataset(6, 4)
    theta0 = uniform_sphere(spawn_rng(5, 0x9D), 8)
    gamma = 0.5 * recommend_step_size(ds.signed(), 2)
    rep = reduction_check_quadratic(ds, theta0, gamma, norms=(1e2, 1e4, 1e6),
                                    horizon=50)
    assert rep.gaps[1] <= rep.gaps[0] + 1e-12
    assert rep.gaps[2] <= rep.gaps[1] + 1e-12
    assert rep.gaps[2] <= 1e-6
    assert rep.sign_agreement[2] == 1.0


def test_reduction_quadratic_rejects_boundary_start():
    ds = random_dataset(6, 4)
    with pytest.raises(ValueError):
        reduction_check_quadratic(ds, np.zeros(8), 0.01)


def test_replay_matches_simulation_and_bound():
    rep = lower_bound_replay(10, 0.1, seed=0)
    assert rep.max_coord_gap <= 1e-12
    assert rep.decisions_matched
    assert rep.min_steps_bound == 2 * math.ceil(10 / 0.2)
    assert rep.first_separation_sim >= rep.min_steps_bound
    assert rep.first_separation_sim == rep.first_separation_analytic


def test_replay_from_origin_needs_d_over_mu_steps():
    rep = lower_bound_replay(10, 0.1, z0=np.zeros(10))
    assert rep.first_separation_sim >= 100  # d / mu
    assert rep.max_coord_gap <= 1e-12
    assert rep.decisions_matched


def test_replay_rejects_start_outside_ball():
    with pytest.raises(ValueError):
        lower_bound_replay(10, 0.1, z0=np.ones(10))


def test_replay_rejects_large_mu():
    with pytest.raises(ValueError):
        lower_bound_replay(10, 0.6)


def test_null_space_start_is_bitwise_exact_on_two_sample():
    spec = two_sample_spectrum(12, 0.05)
    ops = list(spec.operators())
    theta = null_space_start(ops, seed=0)
    assert kernel_residual(ops, theta) == 0.0
    assert abs(np.linalg.norm(theta) - 1.0) <= 1e-6


def test_null_space_start_rejects_trivial_intersection():
    # three random k=2 operators on R^6 span the space with probability one
    ops = [ConvOperator(rng.standard_normal(4), 2) for _ in range(3)]
    with pytest.raises(ValueError):
        null_space_start(ops, seed=0)


def test_null_space_start_rejects_wrong_kernel_width():
    with pytest.raises(ValueError):
        null_space_start([ConvOperator(np.ones(8), 3)], seed=0)


def test_kernel_residual_on_eigenvector():
    spec = two_sample_spectrum(9, 0.1)
    op1, _ = spec.operators()
    r = kernel_residual([op1], spec.v1_plus)
    assert r == pytest.approx(spec.lambda1, rel=1e-12)
