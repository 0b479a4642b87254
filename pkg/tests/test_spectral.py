"""Closed-form spectra against the Jacobi eigensolver oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdx.linalg import ConvOperator
from pdx.oracles import jacobi_eigh
from pdx.spectral import (eigensystem_k2, norm_bounds, operator_norm,
                          recommend_step_size, reduce_block_quadratic,
                          two_sample_spectrum)

rng = np.random.default_rng(20240812)

# lambda_2 of the two-sample pair at d=3, mu=0.1: sqrt((2.1)^2 + 2) = sqrt(6.41)
SQRT_6_41 = 2.5317977802344327


def check_against_jacobi(a, tol=1e-9):
    op = ConvOperator(a, 2)
    sys = eigensystem_k2(a)
    vals, _ = jacobi_eigh(op.dense())
    closed = np.sort([p.value for p in sys.pairs])[::-1]
    dense = np.sort(vals[np.argsort(-np.abs(vals))[: closed.size]])[::-1]
    assert closed.size + sys.kernel_dim == op.dim
    if closed.size:
        assert np.max(np.abs(closed - dense)) <= tol
    for p in sys.pairs:
        assert abs(np.linalg.norm(p.unit) - 1.0) <= 1e-12
        assert np.linalg.norm(op.matvec(p.unit) - p.value * p.unit) <= tol
    # remaining dense eigenvalues vanish
    rest = np.sort(np.abs(vals))[: op.dim - closed.size]
    if rest.size:
        assert rest[-1] <= tol


def test_eigensystem_generic_random():
    for _ in range(30):
        d = int(rng.integers(3, 13))
        check_against_jacobi(rng.standard_normal(d))


def test_eigensystem_shift_symmetric():
    a = np.ones(8)
    sys = eigensystem_k2(a)
    assert sys.case == "shift_symmetric"
    vals = sorted(p.value for p in sys.pairs)
    lam = math.sqrt(2) * np.linalg.norm(a)
    assert np.allclose(vals, [-lam, lam], atol=1e-12)
    check_against_jacobi(a)


def test_eigensystem_shift_antisymmetric():
    a = np.tile([1.0, -1.0], 4)  # P a = -a
    sys = eigensystem_k2(a)
    assert sys.case == "shift_antisymmetric"
    check_against_jacobi(a)


def test_eigensystem_zero():
    sys = eigensystem_k2(np.zeros(5))
    assert sys.case == "zero"
    assert not sys.pairs
    assert sys.kernel_dim == 7


def test_eigensystem_near_degenerate_stays_accurate():
    # tiny perturbation off the shift-symmetric case
    a = np.ones(6)
    a[0] += 1e-6
    check_against_jacobi(a)


def test_two_sample_spectrum_values():
    d, mu = 12, 0.05
    spec = two_sample_spectrum(d, mu)
    assert np.isclose(spec.lambda1, math.sqrt(2 * d), atol=1e-12)
    lam2 = math.sqrt((2 + mu) ** 2 + 2 * (d - 2))
    assert np.isclose(spec.lambda2, lam2, atol=1e-12)


def test_two_sample_lambda2_frozen_value():
    spec = two_sample_spectrum(3, 0.1)
    assert abs(spec.lambda2 - SQRT_6_41) <= 1e-14


def test_two_sample_eigenvector_residuals():
    for d, mu in ((3, 0.1), (12, 0.05), (100, 0.01)):
        spec = two_sample_spectrum(d, mu)
        op1, op2 = spec.operators()
        for v, lam, op in ((spec.v1_plus, spec.lambda1, op1),
                           (spec.v1_minus, -spec.lambda1, op1),
                           (spec.v2_plus, spec.lambda2, op2),
                           (spec.v2_minus, -spec.lambda2, op2),
                           (spec.v_mu_plus, mu, op2),
                           (spec.v_mu_minus, -mu, op2)):
            assert abs(np.linalg.norm(v) - 1.0) <= 1e-12
            assert np.linalg.norm(op.matvec(v) - lam * v) <= 1e-10
        # the small-eigenvalue directions lie in the kernel of the first operator
        assert np.linalg.norm(op1.matvec(spec.v_mu_plus)) <= 1e-12
        assert np.linalg.norm(op1.matvec(spec.v_mu_minus)) <= 1e-12


def test_two_sample_small_vector_pattern():
    spec = two_sample_spectrum(6, 0.05)
    expect = np.zeros(8)
    expect[:4] = [0.5, -0.5, -0.5, 0.5]
    agree = np.allclose(spec.v_mu_plus, expect, atol=1e-12)
    agree_neg = np.allclose(spec.v_mu_plus, -expect, atol=1e-12)
    assert agree or agree_neg


def test_two_sample_rejects_bad_args():
    with pytest.raises(ValueError):
        two_sample_spectrum(2, 0.1)
    with pytest.raises(ValueError):
        two_sample_spectrum(10, 0.0)


def test_operator_norm_matches_jacobi():
    for _ in range(10):
        d = int(rng.integers(3, 9))
        k = int(rng.integers(1, d + 1))
        op = ConvOperator(rng.standard_normal(d), k)
        est, converged, _ = operator_norm(op)
        vals, _ = jacobi_eigh(op.dense())
        assert converged
        assert np.isclose(est, np.max(np.abs(vals)), rtol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 16), st.integers(0, 2**31 - 1))
def test_norm_bounds_sandwich(d, seed):
    r = np.random.default_rng(seed)
    k = int(r.integers(1, d + 1))
    nb = norm_bounds(ConvOperator(r.standard_normal(d), k))
    # the estimate underestimates by at most ~rel_tol of the true norm, so
    # the lower bound may exceed it by that margin when the two coincide
    assert nb.lower <= nb.estimate * (1 + 1e-8)
    assert nb.estimate <= nb.upper * (1 + 1e-12)


@pytest.mark.parametrize("k", [2, 5, 10])
def test_all_ones_norm_is_sqrt_kd(k):
    d = 30
    nb = norm_bounds(ConvOperator(np.ones(d), k))
    exact = math.sqrt(k * d)
    assert nb.converged
    assert abs(nb.estimate - exact) <= 1e-6 * exact
    assert nb.lower <= exact <= nb.upper


def test_recommend_step_size_inverts_worst_norm():
    rows = np.vstack([np.ones(20), rng.standard_normal(20)])
    got = recommend_step_size(rows, 2)
    worst = max(operator_norm(ConvOperator(a, 2))[0] for a in rows)
    assert np.isclose(got, 1.0 / worst, rtol=1e-9)


def test_recommend_step_size_rejects_all_zero():
    with pytest.raises(ValueError):
        recommend_step_size(np.zeros((3, 8)), 2)


def test_reduce_block_quadratic_matches_expanded_matrix():
    for _ in range(10):
        m = int(rng.integers(2, 6))
        p = int(rng.integers(1, 7))
        Asub = rng.standard_normal((m, m))
        Asub = 0.5 * (Asub + Asub.T)
        a = rng.standard_normal(m)
        b = float(rng.standard_normal())
        expanded = np.zeros((m + p, m + p))
        expanded[:m, :m] = Asub
        expanded[:m, m:] = np.outer(a, np.ones(p))
        expanded[m:, :m] = np.outer(np.ones(p), a)
        expanded[m:, m:] = b * np.ones((p, p))
        vals, _ = jacobi_eigh(expanded)
        want = max(float(vals[0]), 0.0)
        got = reduce_block_quadratic(Asub, a, b, p)
        assert np.isclose(got, want, rtol=1e-8, atol=1e-10)


def test_reduce_block_quadratic_validates():
    with pytest.raises(ValueError):
        reduce_block_quadratic(np.array([[0.0, 1.0], [0.0, 0.0]]), np.ones(2), 1.0, 2)
    with pytest.raises(ValueError):
        reduce_block_quadratic(np.eye(2), np.ones(3), 1.0, 2)
    with pytest.raises(ValueError):
        reduce_block_quadratic(np.eye(2), np.ones(2), 1.0, 0)
