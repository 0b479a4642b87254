"""Fast end-to-end self-checks, grouped into named suites for the CLI.

Each suite returns (check name, passed, detail) triples and is meant to run
in seconds; the exhaustive versions of these checks live in the test suite.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .data import make_separable, make_two_sample
from .linalg import ConvOperator, shift_stack
from .models import curvature_probe_dataset, hessian_probe, sample_curved_point
from .oracles import (jacobi_eigh, lower_bound_replay, null_space_start,
                      reduction_check_linear, reduction_check_quadratic,
                      theorem_params, kernel_residual)
from .rng import spawn_rng, uniform_sphere
from .spectral import (eigensystem_k2, norm_bounds, recommend_step_size,
                       two_sample_spectrum)

__all__ = ["SUITES", "run_suite", "run_all"]


def _check(results, name, ok, detail):
    results.append((name, bool(ok), detail))


def _suite_spectral(master_seed: int):
    results = []
    worst_val, worst_res = 0.0, 0.0
    for trial in range(20):
        rng = spawn_rng(master_seed, 0x5EC, trial)
        d = int(rng.integers(3, 9))
        a = rng.standard_normal(d)
        op = ConvOperator(a, 2)
        sys = eigensystem_k2(a)
        dense = op.dense()
        vals, _ = jacobi_eigh(dense)
        closed = np.sort([p.value for p in sys.pairs])[::-1]
        nonzero = np.sort(vals[np.argsort(-np.abs(vals))[: closed.size]])[::-1]
        worst_val = max(worst_val, float(np.max(np.abs(closed - nonzero))))
        for p in sys.pairs:
            worst_res = max(worst_res, float(np.linalg.norm(op.matvec(p.unit) - p.value * p.unit)))
    _check(results, "closed-form eigenvalues vs Jacobi", worst_val <= 1e-9,
           f"max eigenvalue gap {worst_val:.2e}")
    _check(results, "eigenvector residuals", worst_res <= 1e-9,
           f"max ||Av - lv|| {worst_res:.2e}")

    spec = two_sample_spectrum(12, 0.05)
    op1, op2 = spec.operators()
    res = max(np.linalg.norm(op2.matvec(spec.v_mu_plus) - spec.mu * spec.v_mu_plus),
              np.linalg.norm(op1.matvec(spec.v_mu_plus)))
    _check(results, "two-sample small eigenvector", res <= 1e-10,
           f"residual {res:.2e}")

    nb = norm_bounds(ConvOperator(np.ones(25), 4))
    exact = math.sqrt(4 * 25)
    _check(results, "all-ones norm estimate",
           nb.converged and abs(nb.estimate - exact) <= 1e-6 * exact,
           f"estimate {nb.estimate:.12f} vs sqrt(kd) {exact:.12f}")
    rng = spawn_rng(master_seed, 0x5ED)
    sandwich = True
    for _ in range(10):
        nb = norm_bounds(ConvOperator(rng.standard_normal(17), 3))
        sandwich &= nb.lower <= nb.estimate * (1 + 1e-8) and nb.estimate <= nb.upper * (1 + 1e-12)
    _check(results, "norm bounds sandwich", sandwich, "lower <= estimate <= upper")
    return results


def _suite_reduction(master_seed: int):
    results = []
    ds = make_separable(d=6, n=4, margin=0.5, seed=master_seed + 1)
    rep = reduction_check_linear(ds)
    # allow fp slack: once a gap saturates near 0, ulp noise may tick it up
    slack = 1e-12 * rep.reference
    mono = all(rep.gaps[i + 1] <= rep.gaps[i] + slack for i in range(len(rep.gaps) - 1))
    _check(results, "linear reduction gap shrinks with gamma",
           mono and rep.gaps[-1] <= 1e-4 * rep.reference,
           f"gaps {['%.2e' % g for g in rep.gaps]} vs scale {rep.reference:.2e}")

    ds2 = make_two_sample(8, 0.1)
    rng = spawn_rng(master_seed, 0x2ED)
    theta0 = uniform_sphere(rng, 10)
    gamma = 0.5 * recommend_step_size(ds2.signed(), 2)
    rep2 = reduction_check_quadratic(ds2, theta0, gamma)
    mono2 = all(rep2.gaps[i + 1] <= rep2.gaps[i] for i in range(len(rep2.gaps) - 1))
    _check(results, "quadratic reduction direction gap shrinks",
           mono2 and rep2.gaps[-1] <= 1e-6,
           f"gaps {['%.2e' % g for g in rep2.gaps]}")
    _check(results, "quadratic reduction sign agreement",
           rep2.sign_agreement[-1] == 1.0,
           f"agreement {rep2.sign_agreement}")
    return results


def _suite_lower_bound(master_seed: int):
    results = []
    for d, mu in ((10, 0.1), (50, 0.05)):
        rep = lower_bound_replay(d, mu, seed=master_seed)
        _check(results, f"replay matches closed form (d={d}, mu={mu})",
               rep.decisions_matched and rep.max_coord_gap <= 1e-12,
               f"max coordinate gap {rep.max_coord_gap:.2e}")
        _check(results, f"no early separation (d={d}, mu={mu})",
               rep.first_separation_sim >= rep.min_steps_bound
               and rep.first_separation_sim == rep.first_separation_analytic,
               f"separated at {rep.first_separation_sim}, bound {rep.min_steps_bound}")
    return results


def _suite_noisy_separation(master_seed: int):
    results = []
    d, mu, rho = 16, 0.05, 0.1
    ds = make_two_sample(d, mu)
    signed = ds.signed()
    stacks = (shift_stack(signed[0], 2), shift_stack(signed[1], 2))
    hits = 0
    trials = 5
    sigma_id = True
    for seed in range(trials):
        rng = spawn_rng(master_seed, 0x53, seed)
        theta0 = uniform_sphere(rng, d + 2)
        params = theorem_params(d, mu, rho, theta0)
        lhs = params.sigma * 4096.0 * params.T * math.sqrt(max(d, math.log(params.T / rho)))
        sigma_id &= abs(lhs - abs(params.corr0)) <= 1e-10 * abs(params.corr0)
        cap = min(params.T, 200_000)
        _, _, status, _, _ = kernels.two_sample_run(
            stacks[0], stacks[1], theta0, params.gamma, params.sigma, cap,
            rng=spawn_rng(master_seed, 0x53F, seed))
        hits += int(status == kernels.SEPARATED)
    _check(results, "noise scale inverts to the start correlation", sigma_id,
           "sigma * 4096 T sqrt(max(d, log(T/rho))) == |<theta0, v_mu_plus>|")
    _check(results, "noisy runs separate within the horizon", hits >= trials - 1,
           f"{hits}/{trials} runs separated (cap 2e5 steps)")

    spec = two_sample_spectrum(12, 0.05)
    theta = null_space_start(spec.operators(), seed=master_seed)
    res = kernel_residual(spec.operators(), theta)
    _check(results, "common-kernel start", res == 0.0,
           f"max ||A_i theta|| = {res:.2e}" + (" (exact)" if res == 0.0 else ""))
    return results


def _suite_hessian(master_seed: int):
    results = []
    rng = spawn_rng(master_seed, 0x4E5)
    ds = make_separable(d=6, n=5, margin=0.3, seed=master_seed + 2)
    from .models import ModelParams
    w = ModelParams.conv(rng.standard_normal(2), rng.standard_normal(6))
    probe = hessian_probe(w, ds)
    _check(results, "hessian probe finite", np.isfinite(probe.hessian_norm_lb)
           and probe.hessian_norm_lb >= 0,
           f"loss {probe.loss:.4f}, ||grad|| {probe.grad_norm:.4f}, "
           f"||H|| >= {probe.hessian_norm_lb:.4f}")

    d = 16
    ds_c = curvature_probe_dataset(d)
    ok = True
    worst = ""
    for trial in range(20):
        rng = spawn_rng(master_seed, 0x4E6, trial)
        w, _, _ = sample_curved_point(d, rng)
        probe = hessian_probe(ModelParams.conv(w[:2], w[2:]), ds_c)
        nw = float(np.linalg.norm(w))
        lo, hi = math.sqrt(2) / 20 * nw, math.sqrt(2) * nw
        fine = (1 / 20 <= probe.loss <= 5 and lo <= probe.grad_norm <= hi
                and probe.hessian_norm_lb >= nw * nw / 20 - math.sqrt(2))
        if not fine and ok:
            ok = False
            worst = (f"trial {trial}: loss {probe.loss:.4f}, grad {probe.grad_norm:.4f}"
                     f" not in [{lo:.4f}, {hi:.4f}], curv {probe.hessian_norm_lb:.4f}")
    _check(results, "curved-region bounds", ok, worst or "20/20 samples in range")
    return results


SUITES = {
    "spectral": _suite_spectral,
    "reduction": _suite_reduction,
    "lower-bound": _suite_lower_bound,
    "noisy-separation": _suite_noisy_separation,
    "hessian": _suite_hessian,
}


def run_suite(name: str, master_seed: int = 0):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name](master_seed)


def run_all(master_seed: int = 0):
    results = []
    for name in SUITES:
        for check, ok, detail in SUITES[name](master_seed):
            results.append((f"{name}: {check}", ok, detail))
    return results
