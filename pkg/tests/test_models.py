"""Model families: effective weights, losses, gradients, curvature probes.

Gradient tests compare the analytic step against central finite differences
of the mean logistic loss; the Hessian probe is cross-checked against a
finite-difference Hessian assembled from the analytic gradient.
"""

import numpy as np
import pytest

from pdx.data import Dataset, make_two_sample
from pdx.models import (
    LossReport,
    ModelParams,
    curvature_probe_dataset,
    gd_step,
    hessian_probe,
    logistic_loss,
    margins,
    model_eval,
    sample_curved_point,
    train_to_separation,
)
from pdx.oracles import jacobi_eigh

rng = np.random.default_rng(20260814)

# log(1 + exp(-1/2)), the logistic loss at margin one half
LOSS_AT_HALF = 0.4740769841801067


def random_dataset(r, d, n):
    b = r.standard_normal((n, d))
    y = np.where(r.random(n) < 0.5, -1.0, 1.0)
    return Dataset(b, y, name="random")


def random_instance(kind, r, d=None, n=None):
    d = int(r.integers(3, 11)) if d is None else d
    n = int(r.integers(1, 9)) if n is None else n
    ds = random_dataset(r, d, n)
    if kind == "linear":
        params = ModelParams.linear(r.standard_normal(d))
    elif kind == "conv":
        k = int(r.integers(2, 4))
        params = ModelParams.conv(r.standard_normal(k), r.standard_normal(d))
    elif kind == "two_layer":
        f = int(r.integers(2, 4))
        params = ModelParams.two_layer(r.standard_normal((f, d)), r.standard_normal(f))
    else:
        f1, f2 = int(r.integers(2, 4)), int(r.integers(2, 4))
        mats = [r.standard_normal((f1, f2)), r.standard_normal((f2, d))]
        params = ModelParams.multi_layer(mats, r.standard_normal(f1))
    return params, ds


def rebuild(params, w):
    return ModelParams(params.kind, w, d=params.d, k=params.k, f=params.f,
                       layer_dims=params.layer_dims)


def loss_gradient(params, ds):
    # gd_step with unit unnormalized step moves by the negated loss gradient
    return params.w - gd_step(params, ds, 1.0, normalized=False).w


def fd_gradient(params, ds, h=None):
    w = params.w
    if h is None:
        h = 1e-5 * (1.0 + np.linalg.norm(w))
    g = np.empty_like(w)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        up = logistic_loss(rebuild(params, w + e), ds).loss
        dn = logistic_loss(rebuild(params, w - e), ds).loss
        g[j] = (up - dn) / (2.0 * h)
    return g


# --- effective weights against explicit index arithmetic ---


def test_effective_weight_linear_is_identity():
    v = rng.standard_normal(7)
    assert np.array_equal(ModelParams.linear(v).effective_weight(), v)


def test_effective_weight_conv_oracle():
    d, k = 9, 3
    c, v = rng.standard_normal(k), rng.standard_normal(d)
    u = ModelParams.conv(c, v).effective_weight()
    expected = np.zeros(d)
    for i in range(d):
        for j in range(k):
            expected[i] += c[j] * v[(i + j) % d]
    assert np.allclose(u, expected, rtol=0, atol=1e-14)


def test_effective_weight_two_layer_matches_forward_pass():
    d, f = 8, 3
    C, v = rng.standard_normal((f, d)), rng.standard_normal(f)
    params = ModelParams.two_layer(C, v)
    b = rng.standard_normal(d)
    assert np.isclose(model_eval(params, b), v @ (C @ b), rtol=1e-13)


def test_effective_weight_multi_layer_matches_forward_pass():
    d = 6
    mats = [rng.standard_normal((2, 4)), rng.standard_normal((4, 3)),
            rng.standard_normal((3, d))]
    v = rng.standard_normal(2)
    params = ModelParams.multi_layer(mats, v)
    assert params.n_layers == 3
    b = rng.standard_normal(d)
    expected = v @ (mats[0] @ (mats[1] @ (mats[2] @ b)))
    assert np.isclose(model_eval(params, b), expected, rtol=1e-12)


def test_model_eval_rejects_wrong_width():
    with pytest.raises(ValueError):
        model_eval(ModelParams.linear(np.ones(4)), np.ones(5))
    with pytest.raises(ValueError):
        margins(ModelParams.linear(np.ones(4)), make_two_sample(5, 0.1))


# --- losses ---


def test_logistic_loss_frozen_value_at_margin_half():
    ds = Dataset(np.ones((1, 1)), np.array([1.0]), name="one")
    report = logistic_loss(ModelParams.linear(np.array([0.5])), ds)
    assert abs(report.loss - LOSS_AT_HALF) < 1e-15
    assert report.accuracy == 1.0 and report.separated


def test_zero_margin_counts_as_miss_and_blocks_separation():
    ds = Dataset(np.array([[1.0], [0.0]]), np.array([1.0, 1.0]), name="tie")
    report = logistic_loss(ModelParams.linear(np.array([1.0])), ds)
    assert report.accuracy == 0.5
    assert not report.separated
    assert np.allclose(report.margins, [1.0, 0.0])


def test_loss_report_fields_finite_on_randoms():
    for _ in range(20):
        params, ds = random_instance("conv", rng)
        report = logistic_loss(params, ds)
        assert isinstance(report, LossReport)
        assert np.isfinite(report.loss) and 0.0 <= report.accuracy <= 1.0
        assert report.separated == bool(np.all(report.margins > 0))


# --- gradients against central finite differences ---


@pytest.mark.parametrize("kind", ["linear", "conv", "two_layer", "multi_layer"])
def test_gd_step_matches_finite_differences(kind):
    r = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(10):
        params, ds = random_instance(kind, r)
        grad = loss_gradient(params, ds)
        fd = fd_gradient(params, ds)
        assert np.linalg.norm(fd - grad) <= 1e-6 * max(1e-12, np.linalg.norm(grad))


def test_normalized_multi_layer_step_scales_by_norm_power():
    params, ds = random_instance("multi_layer", rng)
    raw = gd_step(params, ds, 0.7, normalized=False).w - params.w
    scaled = gd_step(params, ds, 0.7, normalized=True).w - params.w
    ell = params.n_layers
    assert ell == 2
    assert np.allclose(scaled, raw / np.linalg.norm(params.w) ** (ell - 1), rtol=1e-12)


def test_normalized_step_rejects_zero_parameters():
    mats = [np.zeros((2, 3)), np.zeros((3, 5))]
    params = ModelParams.multi_layer(mats, np.zeros(2))
    ds = random_dataset(rng, 5, 3)
    with pytest.raises(ValueError):
        gd_step(params, ds, 0.1, normalized=True)


def test_gd_step_rejects_bad_gamma():
    params, ds = random_instance("linear", rng)
    for gamma in (0.0, -1.0, np.inf, np.nan):
        with pytest.raises(ValueError):
            gd_step(params, ds, gamma)


@pytest.mark.filterwarnings("ignore:overflow")
def test_gd_step_raises_on_overflow():
    # zero margins make the step exactly gamma * 2 * ones, which overflows
    ds = Dataset(4.0 * np.ones((1, 3)), np.array([1.0]), name="big")
    params = ModelParams.linear(np.zeros(3))
    with pytest.raises(FloatingPointError):
        gd_step(params, ds, 1e308)


def test_train_to_separation_on_separable_data():
    ds = Dataset(np.eye(3), np.ones(3), name="axes")
    params = ModelParams.linear(np.zeros(3))
    out, iters, separated = train_to_separation(params, ds, 1.0, 100)
    assert separated and iters < 100
    assert np.all(margins(out, ds) > 0)


@pytest.mark.filterwarnings("ignore:overflow")
def test_train_to_separation_never_claims_contradictory_data():
    # identical feature with both labels cannot separate at any step size
    b = 2.0 * np.ones((2, 3))
    ds = Dataset(b, np.array([1.0, -1.0]), name="contradiction")
    params = ModelParams.linear(np.ones(3))
    _, iters, separated = train_to_separation(params, ds, 1e308, 50)
    assert iters == 50 and not separated


# --- hessian probe ---


def test_hessian_probe_matches_finite_difference_hessian():
    r = np.random.default_rng(7)
    params, ds = random_instance("conv", r, d=6, n=3)
    probe = hessian_probe(params, ds)
    assert probe.loss == pytest.approx(logistic_loss(params, ds).loss, rel=1e-12)
    assert probe.grad_norm == pytest.approx(
        np.linalg.norm(loss_gradient(params, ds)), rel=1e-12)
    h = 1e-6 * (1.0 + np.linalg.norm(params.w))
    dim = params.w.size
    H = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        gp = loss_gradient(rebuild(params, params.w + e), ds)
        gm = loss_gradient(rebuild(params, params.w - e), ds)
        H[:, j] = (gp - gm) / (2.0 * h)
    H = 0.5 * (H + H.T)
    vals, _ = jacobi_eigh(H)
    true_norm = float(np.max(np.abs(vals)))
    assert probe.hessian_norm_lb == pytest.approx(true_norm, rel=1e-5)
    assert probe.hessian_norm_lb <= true_norm * (1 + 1e-8)


def test_hessian_probe_two_layer_runs():
    params, ds = random_instance("two_layer", rng, d=5, n=2)
    probe = hessian_probe(params, ds)
    assert probe.dim == params.w.size and np.isfinite(probe.hessian_norm_lb)


def test_hessian_probe_rejects_linear():
    params, ds = random_instance("linear", rng)
    with pytest.raises(ValueError):
        hessian_probe(params, ds)


# --- curvature probe region ---


def test_curvature_probe_dataset_is_a_unit_sample():
    ds = curvature_probe_dataset(16)
    assert ds.n == 1 and np.isclose(np.linalg.norm(ds.signed()[0]), 1.0)


def test_sampled_points_obey_the_region_identities():
    d = 16
    ds = curvature_probe_dataset(d)
    r = np.random.default_rng(3)
    for _ in range(200):
        w, alpha, beta = sample_curved_point(d, r)
        assert 0.0 <= beta <= 5.0
        assert beta <= alpha <= np.sqrt(beta**2 + 1.0) + 1e-12
        assert np.isclose(np.linalg.norm(w) ** 2, alpha**2 + beta**2, rtol=1e-12)
        params = ModelParams.conv(w[:2], w[2:])
        m = margins(params, ds)[0]
        assert m == pytest.approx((np.sqrt(2.0) / 2.0) * (alpha**2 - beta**2), abs=1e-12)
        assert -1e-12 <= m <= np.sqrt(2.0) / 2.0 + 1e-12
