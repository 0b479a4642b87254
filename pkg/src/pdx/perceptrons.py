"""Perceptron-style update schemes and the shared run driver.

Three families, all stepping on violated samples only:

- batch: z_{t+1} = z_t + (phi/n) sum over {i: a_i . z_t <= 0} of a_i, with the
  special first step z_1 = z_0 + (1/2n) sum_i a_i taken unconditionally.
- quadratic: theta_{t+1} = theta_t + (gamma/n) sum over
  {i: (1/2) theta^T A_i theta <= 0} of A_i theta (+ Gaussian noise), valid
  for gamma < 1 / max_i ||A_i||.
- two-sample scheduler: one operator at a time with bare gamma (no 1/n):
  option 1 when the first quadratic form is <= 0, else option 2 when the
  second is, else stop (both margins positive).  Noise, when enabled, is
  added on every taken step.

Ties (margin exactly 0) count as violations everywhere.  A run is
"separated" when every margin is strictly positive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset, TraceRecord, make_two_sample
from .linalg import ConvOperator, MultiLinearMap
from .models import ModelParams, logistic_loss
from .rng import spawn_rng
from .spectral import TwoSampleSpectrum, recommend_step_size, two_sample_spectrum

__all__ = [
    "SEPARATED", "MAX_ITERS", "STALLED",
    "NoiseSpec", "IterateState", "StepOutcome", "StopRule",
    "batch_perceptron_init", "batch_perceptron_step",
    "quad_perceptron_step", "two_sample_step", "generalized_perceptron_step",
    "BatchPerceptron", "QuadPerceptron", "TwoSampleQuad", "GeneralizedPerceptron",
    "run_until",
]

SEPARATED = "separated"
MAX_ITERS = "max_iters"
STALLED = "stalled"


@dataclass(frozen=True)
class NoiseSpec:
    """Isotropic Gaussian step noise; sigma = 0 draws nothing."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0 or not np.isfinite(self.sigma):
            raise ValueError(f"sigma must be >= 0 and finite, got {self.sigma}")

    def make_rng(self) -> np.random.Generator:
        return spawn_rng(self.seed, 0x7015E)


@dataclass
class IterateState:
    theta: np.ndarray
    t: int = 0
    rng: np.random.Generator | None = None
    stopped: bool = False
    stop_reason: str | None = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).copy()
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("iterate has non-finite entries")


@dataclass(frozen=True)
class StepOutcome:
    violated: np.ndarray  # indices of samples that drove the update
    step_kind: str
    dot_products: np.ndarray  # per-sample margins used for the decision


@dataclass(frozen=True)
class StopRule:
    max_iters: int
    check_every: int = 1
    stall_limit: int = 100  # consecutive bitwise-unchanged sigma=0 steps


def _advance(state: IterateState, theta_next: np.ndarray) -> IterateState:
    if not np.all(np.isfinite(theta_next)):
        raise FloatingPointError(f"iterate became non-finite at t={state.t + 1}")
    state.theta = theta_next
    state.t += 1
    return state


def batch_perceptron_init(ds: Dataset, z0) -> np.ndarray:
    """Special first step z_1 = z_0 + (1/2n) sum_i a_i."""
    z0 = np.asarray(z0, dtype=np.float64)
    return z0 + ds.signed().sum(axis=0) / (2.0 * ds.n)


def batch_perceptron_step(state: IterateState, ds: Dataset, phi: float = 1.0):
    """Update on the violated set; the t=0 call applies the special init step."""
    if state.t == 0:
        m = ds.signed() @ state.theta
        state = _advance(state, batch_perceptron_init(ds, state.theta))
        return state, StepOutcome(np.arange(ds.n), "init", m)
    m = ds.signed() @ state.theta
    viol = np.flatnonzero(m <= 0)
    z = state.theta + (phi / ds.n) * ds.signed()[viol].sum(axis=0)
    state = _advance(state, z)
    return state, StepOutcome(viol, "batch", m)


def quad_perceptron_step(state: IterateState, ops, gamma: float,
                         noise: NoiseSpec | None = None):
    """theta += (gamma/n) sum of A_i theta over violated samples (+ noise)."""
    n = len(ops)
    q = np.array([op.quad_form(state.theta) for op in ops])
    viol = np.flatnonzero(q <= 0)
    theta = state.theta.copy()
    if viol.size:
        acc = np.zeros_like(theta)
        for i in viol:
            acc += ops[i].matvec(state.theta)
        theta += (gamma / n) * acc
    if noise is not None and noise.sigma > 0:
        if state.rng is None:
            state.rng = noise.make_rng()
        theta += noise.sigma * state.rng.standard_normal(theta.size)
    state = _advance(state, theta)
    return state, StepOutcome(viol, "quad", q)


def two_sample_step(state: IterateState, op1: ConvOperator, op2: ConvOperator,
                    gamma: float, noise: NoiseSpec | None = None):
    """One scheduler step: option 1, option 2, or stop; bare gamma."""
    q1 = op1.quad_form(state.theta)
    q2 = op2.quad_form(state.theta)
    q = np.array([q1, q2])
    if q1 <= 0:
        kind, op, viol = "option1", op1, np.array([0])
    elif q2 <= 0:
        kind, op, viol = "option2", op2, np.array([1])
    else:
        state.stopped = True
        state.stop_reason = SEPARATED
        return state, StepOutcome(np.array([], dtype=int), "stop", q)
    theta = state.theta + gamma * op.matvec(state.theta)
    if noise is not None and noise.sigma > 0:
        if state.rng is None:
            state.rng = noise.make_rng()
        theta += noise.sigma * state.rng.standard_normal(theta.size)
    state = _advance(state, theta)
    return state, StepOutcome(viol, kind, q)


def generalized_perceptron_step(state: IterateState, maps, gamma: float,
                                normalized: bool = True):
    """Layered-model perceptron: step on samples with non-positive values,
    with the step size normalized by ||theta||^(l-1)."""
    n = len(maps)
    ell = maps[0].n_layers
    vals = np.array([m.value(state.theta) for m in maps])
    viol = np.flatnonzero(vals <= 0)
    gamma_eff = gamma
    if normalized and ell >= 2:
        norm = np.linalg.norm(state.theta)
        if norm == 0.0:
            raise ValueError("normalized step undefined at theta = 0")
        gamma_eff = gamma / norm ** (ell - 1)
    theta = state.theta.copy()
    if viol.size:
        acc = np.zeros_like(theta)
        for i in viol:
            acc += maps[i].grad(state.theta)
        theta += (gamma_eff / n) * acc
    state = _advance(state, theta)
    return state, StepOutcome(viol, "multi", vals)


class BatchPerceptron:
    """Linear batch perceptron on a dataset."""

    algo_name = "batch"

    def __init__(self, ds: Dataset, phi: float = 1.0):
        self.ds = ds
        self.phi = float(phi)
        self.step_size = self.phi

    def step(self, state):
        return batch_perceptron_step(state, self.ds, self.phi)

    def separated(self, theta) -> bool:
        return bool(np.all(self.ds.signed() @ theta > 0))

    def observables(self, theta) -> dict:
        return {}

    def loss_report(self, theta):
        return logistic_loss(ModelParams.linear(theta), self.ds)


class QuadPerceptron:
    """Quadratic perceptron over per-sample conv (or compatible) operators."""

    algo_name = "quad"

    def __init__(self, ds: Dataset, k: int, gamma: float,
                 noise: NoiseSpec | None = None, check_gamma: bool = True):
        self.ds = ds
        self.k = int(k)
        self.ops = [ConvOperator(a, k) for a in ds.signed()]
        self.gamma = float(gamma)
        self.noise = noise
        self.step_size = self.gamma
        if check_gamma:
            gamma_max = recommend_step_size(ds.signed(), k)
            if self.gamma >= gamma_max:
                warnings.warn(
                    f"step size {self.gamma} is at or above 1/max||A_i|| = {gamma_max:.6g}; "
                    "the update operator may lose positive-definiteness",
                    RuntimeWarning, stacklevel=2)

    def step(self, state):
        return quad_perceptron_step(state, self.ops, self.gamma, self.noise)

    def separated(self, theta) -> bool:
        return all(op.quad_form(theta) > 0 for op in self.ops)

    def observables(self, theta) -> dict:
        return {}

    def loss_report(self, theta):
        params = ModelParams("conv", theta, d=self.ds.d, k=self.k)
        return logistic_loss(params, self.ds)


class TwoSampleQuad:
    """Two-sample scheduler with its spectral observables."""

    algo_name = "two-sample"

    def __init__(self, d: int, mu: float, gamma: float,
                 noise: NoiseSpec | None = None,
                 spectrum: TwoSampleSpectrum | None = None):
        self.spectrum = spectrum if spectrum is not None else two_sample_spectrum(d, mu)
        self.op1, self.op2 = self.spectrum.operators()
        self.ds = make_two_sample(d, mu)
        self.gamma = float(gamma)
        self.noise = noise
        self.step_size = self.gamma

    def step(self, state):
        return two_sample_step(state, self.op1, self.op2, self.gamma, self.noise)

    def separated(self, theta) -> bool:
        return self.op1.quad_form(theta) > 0 and self.op2.quad_form(theta) > 0

    def observables(self, theta) -> dict:
        return {
            "corr_mu_plus": float(self.spectrum.v_mu_plus @ theta) ** 2,
            "corr_mu_minus": float(self.spectrum.v_mu_minus @ theta) ** 2,
        }

    def loss_report(self, theta):
        params = ModelParams("conv", theta, d=self.ds.d, k=2)
        return logistic_loss(params, self.ds)


class GeneralizedPerceptron:
    """Perceptron over layered-model multilinear forms."""

    algo_name = "generalized"

    def __init__(self, ds: Dataset, layer_dims, gamma: float, normalized: bool = True):
        self.ds = ds
        self.maps = [MultiLinearMap(tuple(layer_dims), a) for a in ds.signed()]
        self.gamma = float(gamma)
        self.normalized = normalized
        self.step_size = self.gamma

    def step(self, state):
        return generalized_perceptron_step(state, self.maps, self.gamma, self.normalized)

    def separated(self, theta) -> bool:
        return all(m.value(theta) > 0 for m in self.maps)

    def observables(self, theta) -> dict:
        return {}

    def loss_report(self, theta):
        params = ModelParams("multi_layer", theta, d=self.ds.d,
                             layer_dims=self.maps[0].layer_dims)
        return logistic_loss(params, self.ds)


def _trace_record(algo, state: IterateState, outcome, run_id: str) -> TraceRecord:
    report = algo.loss_report(state.theta)
    obs = algo.observables(state.theta)
    return TraceRecord(
        run_id=run_id,
        algo=algo.algo_name,
        t=state.t,
        loss=report.loss,
        accuracy=report.accuracy,
        iterate_norm=float(np.linalg.norm(state.theta)),
        violated_count=0 if outcome is None else int(outcome.violated.size),
        corr_mu_plus=obs.get("corr_mu_plus"),
        step_kind="start" if outcome is None else outcome.step_kind,
        step_size=algo.step_size,
    )


def run_until(algo, state: IterateState, stop: StopRule,
              trace: bool = False, run_id: str = "run",
              trace_stride: int = 1):
    """Drive an algorithm until separation, the iteration cap, or a stall.

    A stall is `stall_limit` consecutive steps that leave the iterate exactly
    unchanged (only possible without noise).  Separation is checked every
    `check_every` steps (and before the first).  Returns (state, records);
    records are empty unless `trace`, and are subsampled by `trace_stride`
    (the final iterate is always recorded).
    """
    records: list[TraceRecord] = []
    if trace:
        records.append(_trace_record(algo, state, None, run_id))
    unchanged = 0
    sigma = getattr(getattr(algo, "noise", None), "sigma", 0.0) or 0.0
    while not state.stopped:
        if state.t % stop.check_every == 0 and algo.separated(state.theta):
            state.stopped = True
            state.stop_reason = SEPARATED
            break
        if state.t >= stop.max_iters:
            state.stopped = True
            state.stop_reason = MAX_ITERS
            break
        prev = state.theta
        state, outcome = algo.step(state)
        if state.stopped:  # scheduler hit its internal stop
            break
        if trace and (state.t % trace_stride == 0):
            records.append(_trace_record(algo, state, outcome, run_id))
        if sigma == 0.0:
            unchanged = unchanged + 1 if np.array_equal(prev, state.theta) else 0
            if unchanged >= stop.stall_limit:
                state.stopped = True
                state.stop_reason = STALLED
                break
    if trace and (not records or records[-1].t != state.t):
        records.append(_trace_record(algo, state, None, run_id))
    return state, records
