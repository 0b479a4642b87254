"""Independent oracles backing the theory-level checks.

These deliberately avoid the closed forms and step implementations they are
used to validate: the dense eigensolver is a cyclic Jacobi iteration, the
gradient checks use central differences, the large-step-size reductions run
the two dynamics side by side, and the lower-bound replay evaluates the
hand-derived trajectory of the batch perceptron on the two-sample dataset
from explicit per-coordinate formulas rather than accumulated updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, make_two_sample
from .linalg import ConvOperator
from .models import ModelParams, gd_step, margins
from .perceptrons import IterateState, batch_perceptron_step, quad_perceptron_step
from .rng import spawn_rng
from .spectral import TwoSampleSpectrum, eigensystem_k2, two_sample_spectrum

__all__ = [
    "jacobi_eigh",
    "TheoremParams",
    "theorem_params",
    "ReductionReport",
    "reduction_check_linear",
    "reduction_check_quadratic",
    "LowerBoundReplay",
    "lower_bound_replay",
    "null_space_start",
    "kernel_residual",
]

JACOBI_MAX_DIM = 512


def jacobi_eigh(M, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (values, vectors) with values sorted descending and vectors in
    matching columns.  Convergence: off-diagonal Frobenius norm at most
    tol * max(1, ||M||_F) within max_sweeps sweeps, else RuntimeError.
    """
    A = np.array(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if n > JACOBI_MAX_DIM:
        raise ValueError(f"dense eigensolver capped at {JACOBI_MAX_DIM}, got {n}")
    scale = max(1.0, float(np.linalg.norm(A)))
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    target = tol * scale
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
        if off <= target:
            vals = np.diag(A).copy()
            order = np.argsort(-vals)
            return vals[order], V[:, order]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J, V <- V J with the (p, q) Givens rotation
                col_p = c * A[:, p] - s * A[:, q]
                col_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = col_p, col_q
                row_p = c * A[p, :] - s * A[q, :]
                row_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = row_p, row_q
                A[p, q] = A[q, p] = 0.0
                vcol_p = c * V[:, p] - s * V[:, q]
                vcol_q = s * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = vcol_p, vcol_q
    off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
    if off <= target:
        vals = np.diag(A).copy()
        order = np.argsort(-vals)
        return vals[order], V[:, order]
    raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps (off={off:.3e})")


@dataclass(frozen=True)
class TheoremParams:
    """Noise scale, step size, and horizon guaranteeing separation w.h.p."""

    d: int
    mu: float
    rho: float
    theta0_norm: float
    corr0: float  # <theta0, v_mu_plus>
    a_factor: float
    b_factor: float
    T: int
    gamma: float
    sigma: float


def theorem_params(d: int, mu: float, rho: float, theta0,
                   spectrum: TwoSampleSpectrum | None = None) -> TheoremParams:
    """Horizon T, step size gamma, and noise sigma for the noisy two-sample
    scheduler started at theta0.

    Requires 0 < mu <= 1/10, 0 < rho < 1, and a start that is not orthogonal
    to the small-eigenvalue direction.
    """
    if not 0 < mu <= 0.1:
        raise ValueError(f"mu must lie in (0, 1/10], got {mu}")
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    spec = spectrum if spectrum is not None else two_sample_spectrum(d, mu)
    theta0 = np.asarray(theta0, dtype=np.float64)
    if theta0.size != d + 2:
        raise ValueError(f"theta0 must have length d+2={d + 2}, got {theta0.size}")
    corr0 = float(spec.v_mu_plus @ theta0)
    if abs(corr0) < 1e-300:
        raise ValueError("theta0 is (numerically) orthogonal to v_mu_plus")
    norm0 = float(np.linalg.norm(theta0))
    sd = math.sqrt(d)
    a_factor = (2.0**27
                * math.log(2.0**62 * norm0**2 / (rho**3 * corr0**2))
                * math.log(2.0**15 * sd * norm0**2 / (mu * corr0**2)))
    b_factor = a_factor * math.log(sd * a_factor / mu)
    T = int(math.ceil(b_factor * sd / mu))
    gamma = 1.0 / (4.0 * sd)
    sigma = abs(corr0) / (4096.0 * T * math.sqrt(max(d, math.log(T / rho))))
    return TheoremParams(d=d, mu=mu, rho=rho, theta0_norm=norm0, corr0=corr0,
                         a_factor=a_factor, b_factor=b_factor, T=T, gamma=gamma,
                         sigma=sigma)


@dataclass(frozen=True)
class ReductionReport:
    """Side-by-side gap between rescaled GD and a perceptron variant."""

    scales: tuple  # the swept gammas (linear) or start norms (quadratic)
    gaps: tuple  # max over the horizon of the compared distance, per scale
    reference: float  # normalization used by the acceptance threshold
    sign_agreement: tuple  # per scale; () for the linear check
    horizon: int


def reduction_check_linear(ds: Dataset, gammas=(1e2, 1e4, 1e6),
                           horizon: int = 20) -> ReductionReport:
    """max_t || w_t / gamma - z_t || for GD (step gamma, w_0 = 0) against the
    batch perceptron (z_0 = 0, unit phi, special first step)."""
    gaps = []
    ref = 0.0
    for gamma in gammas:
        w = ModelParams.linear(np.zeros(ds.d))
        state = IterateState(np.zeros(ds.d))
        worst = 0.0
        for _ in range(horizon):
            w = gd_step(w, ds, float(gamma))
            state, _ = batch_perceptron_step(state, ds, phi=1.0)
            worst = max(worst, float(np.linalg.norm(w.w / gamma - state.theta)))
            ref = max(ref, float(np.linalg.norm(state.theta)))
        gaps.append(worst)
    return ReductionReport(scales=tuple(gammas), gaps=tuple(gaps), reference=ref,
                           sign_agreement=(), horizon=horizon)


def reduction_check_quadratic(ds: Dataset, theta0, gamma: float,
                              norms=(1e2, 1e4, 1e6), horizon: int = 50,
                              k: int = 2, margin_tol: float = 1e-12) -> ReductionReport:
    """Direction gap between GD from w_0 = ||w_0|| theta0 and the noiseless
    quadratic perceptron from theta0, plus per-scale sign agreement of the
    per-sample margins along the two trajectories."""
    theta0 = np.asarray(theta0, dtype=np.float64)
    ops = [ConvOperator(a, k) for a in ds.signed()]
    for i, op in enumerate(ops):
        if abs(op.quad_form(theta0)) <= margin_tol:
            raise ValueError(f"theta0 is on the decision boundary of sample {i}")

    thetas = [theta0 / np.linalg.norm(theta0)]
    state = IterateState(thetas[0])
    for _ in range(horizon):
        state, _ = quad_perceptron_step(state, ops, gamma)
        thetas.append(state.theta.copy())

    gaps, agreements = [], []
    for W in norms:
        w = ModelParams("conv", float(W) * thetas[0], d=ds.d, k=k)
        worst = 0.0
        agree = 0
        total = 0
        for t in range(1, horizon + 1):
            w = gd_step(w, ds, float(gamma))
            wdir = w.w / np.linalg.norm(w.w)
            tdir = thetas[t] / np.linalg.norm(thetas[t])
            worst = max(worst, float(np.linalg.norm(wdir - tdir)))
            mw = margins(w, ds)
            mt = np.array([op.quad_form(thetas[t]) for op in ops])
            agree += int(np.sum(np.sign(mw) == np.sign(mt)))
            total += ds.n
        gaps.append(worst)
        agreements.append(agree / total)
    return ReductionReport(scales=tuple(float(W) for W in norms), gaps=tuple(gaps),
                           reference=1.0, sign_agreement=tuple(agreements),
                           horizon=horizon)


@dataclass(frozen=True)
class LowerBoundReplay:
    d: int
    mu: float
    z0: np.ndarray
    max_coord_gap: float  # max over steps of |sim - analytic| / max(1, |analytic|)
    first_separation_sim: int
    first_separation_analytic: int
    min_steps_bound: int  # 2 * ceil(d / (2 mu))
    decisions_matched: bool


def _ball_start(d: int, mu: float, seed: int) -> np.ndarray:
    a1 = np.ones(d)
    a2 = -np.ones(d)
    a2[0] = -(1.0 + mu)
    eps = mu / (8.0 * max(np.linalg.norm(a1), np.linalg.norm(a2)))
    rng = spawn_rng(seed, 0x10B)
    x = rng.standard_normal(d)
    x *= (eps * rng.random() ** (1.0 / d)) / np.linalg.norm(x)
    return x


def lower_bound_replay(d: int, mu: float, z0=None, seed: int = 0,
                       max_steps: int | None = None) -> LowerBoundReplay:
    """Replay the batch perceptron on the two-sample dataset against the
    analytic trajectory.

    The analytic side never accumulates vectors: it tracks how many half-step
    updates of each kind have been taken (p for the all-ones sample, q for
    the perturbed one, plus the special first step) and emits coordinates
    from the closed form z_t = z0 - (mu/4) e_1 + (p/2) 1 - (q/2)(1 + mu e_1),
    deciding each step from margins computed out of the same closed form.
    """
    if not 0 < mu <= 0.5:
        raise ValueError(f"the analytic trajectory needs 0 < mu <= 1/2, got {mu}")
    ds = make_two_sample(d, mu)
    if z0 is None:
        z0 = _ball_start(d, mu, seed)
    z0 = np.asarray(z0, dtype=np.float64)
    eps = mu / (8.0 * max(np.linalg.norm(ds.signed()[0]), np.linalg.norm(ds.signed()[1])))
    if np.linalg.norm(z0) > eps:
        raise ValueError(f"start norm {np.linalg.norm(z0):.3e} exceeds the ball radius {eps:.3e}")
    bound = 2 * math.ceil(d / (2.0 * mu))
    if max_steps is None:
        max_steps = 8 * bound + 16

    state = IterateState(z0)
    s0 = float(z0.sum())
    p = q = 0
    init_done = False
    sep_sim = sep_ana = -1
    worst = 0.0
    decisions_ok = True

    def analytic_coords():
        out = z0 + 0.5 * (p - q)
        out[0] = z0[0] + 0.5 * p - 0.5 * q * (1.0 + mu)
        if init_done:
            out[0] -= 0.25 * mu
        return out

    def analytic_margins():
        m1 = s0 + 0.5 * p * d - 0.5 * q * (d + mu)
        c0 = z0[0] + 0.5 * p - 0.5 * q * (1.0 + mu)
        if init_done:
            m1 -= 0.25 * mu
            c0 -= 0.25 * mu
        return m1, -(m1 + mu * c0)

    for t in range(max_steps):
        m1a, m2a = analytic_margins()
        if sep_ana < 0 and m1a > 0 and m2a > 0:
            sep_ana = t
        msim = ds.signed() @ state.theta
        if sep_sim < 0 and bool(np.all(msim > 0)):
            sep_sim = t
        if sep_sim >= 0 and sep_ana >= 0:
            break
        # advance the analytic counters by the batch rule on analytic margins
        if not init_done:
            init_done = True
        else:
            if m1a <= 0:
                p += 1
            if m2a <= 0:
                q += 1
        state, outcome = batch_perceptron_step(state, ds, phi=1.0)
        # compare decisions: simulated violated set vs analytic one
        if outcome.step_kind != "init":
            sim_viol = set(outcome.violated.tolist())
            ana_viol = ({0} if m1a <= 0 else set()) | ({1} if m2a <= 0 else set())
            if sim_viol != ana_viol:
                decisions_ok = False
        ana = analytic_coords()
        gap = np.max(np.abs(state.theta - ana) / np.maximum(1.0, np.abs(ana)))
        worst = max(worst, float(gap))

    return LowerBoundReplay(d=d, mu=mu, z0=z0, max_coord_gap=worst,
                            first_separation_sim=sep_sim,
                            first_separation_analytic=sep_ana,
                            min_steps_bound=bound,
                            decisions_matched=decisions_ok)


def kernel_residual(ops, theta) -> float:
    """max_i ||A_i theta||."""
    return max(float(np.linalg.norm(op.matvec(theta))) for op in ops)


def _constant_support(ops) -> list:
    """Bottom-block coordinates on which every shift row of every operator is
    constant (equal to its value at the first such coordinate)."""
    d = ops[0].d
    keep = np.ones(d, dtype=bool)
    for op in ops:
        for row in op.shifts:
            # keep the largest value-class of this row
            vals, counts = np.unique(row, return_counts=True)
            keep &= row == vals[np.argmax(counts)]
    return [int(j) for j in np.flatnonzero(keep)]


def null_space_start(ops, seed: int = 0, residual_tol: float = 1e-10,
                     lattice: float = 2.0**-26) -> np.ndarray:
    """A unit vector in the common kernel of the sample operators.

    Projects a random vector onto the orthogonal complement of all closed-form
    eigenvectors, then tries to snap the result onto an exactly-cancelling
    balanced pattern (paired +-h entries on coordinates where every operator
    row is constant) so that every A_i theta evaluates to exactly zero in
    floating point; when exactness is unattainable the plain projection is
    returned (residual at most residual_tol).  Raises when the intersection
    is numerically trivial.
    """
    dim = ops[0].dim
    if any(op.dim != dim for op in ops):
        raise ValueError("operators act on different spaces")
    if any(op.k != 2 for op in ops):
        raise ValueError("null-space construction uses the k=2 closed-form eigensystem")
    basis = []
    for op in ops:
        for pair in eigensystem_k2(op.a).pairs:
            basis.append(pair.unit)
    B = np.column_stack(basis)
    Q, R = np.linalg.qr(B)
    rank = int(np.sum(np.abs(np.diag(R)) > 1e-10))
    Q = Q[:, :rank]
    if rank >= dim:
        raise ValueError("kernel intersection is numerically trivial")

    # exact balanced construction on the constant-support coordinates
    k = ops[0].k
    support = _constant_support(ops)
    if len(support) >= 2:
        rng = spawn_rng(seed, 0x3A11)
        idx = list(support)
        if len(idx) % 2 == 1:
            idx = idx[:-1]
        signs = np.tile([1.0, -1.0], len(idx) // 2)
        if rng.random() < 0.5:
            signs = -signs
        theta = np.zeros(dim)
        theta[k + np.array(idx)] = signs / np.sqrt(len(idx))
        theta += 0.0  # clear any negative zeros
        if kernel_residual(ops, theta) == 0.0:
            return theta
        h = lattice
        theta = np.zeros(dim)
        theta[k + np.array(idx)] = signs * np.round(1.0 / (np.sqrt(len(idx)) * h)) * h
        theta += 0.0
        if kernel_residual(ops, theta) == 0.0 and np.linalg.norm(theta) > 0:
            return theta / np.linalg.norm(theta) if kernel_residual(
                ops, theta / np.linalg.norm(theta)) == 0.0 else theta

    for attempt in range(16):
        rng = spawn_rng(seed, 0x3A12, attempt)
        x = rng.standard_normal(dim)
        x -= Q @ (Q.T @ x)
        nx = np.linalg.norm(x)
        if nx < 1e-8:
            continue
        theta = x / nx
        if kernel_residual(ops, theta) <= residual_tol:
            return theta
    raise ValueError("failed to build a kernel vector within the residual tolerance")
