"""Separation-speed experiments swept over dimension, kernel size, and step size.

Three drivers live here: `scaling_sweep` measures iterations-to-separation of
the batch and two-sample quadratic perceptrons as the ambient dimension grows,
`kernel_table` finds the largest workable step size as a function of the
number of taps, and `model_race` compares gradient descent on a linear model
against a convolutional one on the same dataset.  All of them delegate inner
loops to the compiled kernels and spawn per-cell random streams so results
are reproducible under any --jobs setting.
"""

from __future__ import annotations

from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from . import kernels
from .data import Dataset, SweepRow, make_two_sample
from .linalg import shift_stack
from .models import ModelParams, train_to_separation
from .rng import spawn_rng, uniform_sphere
from .spectral import recommend_step_size

__all__ = [
    "scaling_sweep",
    "best_mean_iterations",
    "fit_loglog_slope",
    "KernelTableRow",
    "kernel_table",
    "RaceRow",
    "model_race",
]

BATCH = "batch-perceptron"
QUAD = "two-sample-quad"


def _scaling_cell(args):
    d, mu, algo, gamma, seed, max_iters, master = args
    ds = make_two_sample(d, mu)
    signed = ds.signed()
    if algo == BATCH:
        rng = spawn_rng(master, 0x5C, d, 0, seed)
        z0 = uniform_sphere(rng, d)
        _, steps, separated = kernels.batch_run(signed, z0, 1.0, max_iters)
        if not separated:
            steps = max_iters  # iterations-to-separation, capped
        return (d, mu, algo, seed, 1.0, steps, bool(separated))
    rng = spawn_rng(master, 0x5C, d, 1, seed)
    theta0 = uniform_sphere(rng, d + 2)
    _, steps, status, _, _ = kernels.two_sample_run(
        shift_stack(signed[0], 2), shift_stack(signed[1], 2), theta0, gamma,
        0.0, max_iters)
    separated = status == kernels.SEPARATED
    if not separated:
        # diverged or stalled cells never separate; score them at the cap so
        # the best-step argmin cannot reward an early blow-up
        steps = max_iters
    return (d, mu, algo, seed, gamma, steps, separated)


def scaling_sweep(dims, mu: float = 0.01, gammas=None, seeds: int = 10,
                  max_iters: int = 10**6, master_seed: int = 0,
                  jobs: int = 1) -> list:
    """Iterations to separation on the two-sample dataset for each algorithm.

    The batch perceptron has no tunable step, so it gets one cell per seed;
    the quadratic scheduler is swept over the step-size grid.  Unseparated
    runs report the iteration cap with separated=False.
    """
    if gammas is None:
        gammas = [2.0**e for e in range(-10, 10)]
    cells = []
    for d in dims:
        for seed in range(seeds):
            cells.append((d, mu, BATCH, 1.0, seed, max_iters, master_seed))
            for gamma in gammas:
                cells.append((d, mu, QUAD, float(gamma), seed, max_iters, master_seed))
    if jobs > 1:
        with Pool(jobs) as pool:
            raw = pool.map(_scaling_cell, cells, chunksize=4)
    else:
        raw = [_scaling_cell(c) for c in cells]
    rows = [SweepRow(d=r[0], mu=r[1], algo=r[2], seed=r[3], step_size=r[4],
                     iterations=r[5], separated=r[6]) for r in raw]
    rows.sort(key=lambda r: (r.d, r.algo, r.step_size, r.seed))
    return rows


def best_mean_iterations(rows) -> dict:
    """(algo, d) -> (step_size, mean iterations) at the best grid step.

    Unseparated runs keep their capped iteration count, which pushes bad
    steps out of the argmin without dropping them.
    """
    acc: dict = {}
    for r in rows:
        acc.setdefault((r.algo, r.d, r.step_size), []).append(r.iterations)
    best: dict = {}
    for (algo, d, gamma), its in acc.items():
        mean = float(np.mean(its))
        cur = best.get((algo, d))
        if cur is None or mean < cur[1]:
            best[(algo, d)] = (gamma, mean)
    return best


def fit_loglog_slope(xs, ys) -> float:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size < 2:
        raise ValueError("slope fit needs at least two points")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


@dataclass(frozen=True)
class KernelTableRow:
    k: int
    d: int
    best_gamma: float  # largest grid step that separates for every seed
    predicted: float  # 1 / (power-iteration estimate of ||A||)
    iterations: int  # worst seed at best_gamma
    seeds: int


def kernel_table(ks, d: int = 1000, mu: float = 0.05, gammas=None,
                 budget: int = 200_000, seeds: int = 3,
                 master_seed: int = 0) -> list:
    """Largest workable step size of the quadratic perceptron per tap count.

    Runs on the two-sample dataset, whose opposing samples give the step size
    a real stability barrier: past roughly 1/max_i ||A_i|| the iterates blow
    up instead of separating.  The grid is scanned from the largest step down
    and the first step that separates within the budget for every seed wins
    (oversized steps diverge within a few hundred iterations, so the scan is
    cheap).  best_gamma is NaN when no grid step works.
    """
    if gammas is None:
        gammas = [2.0**e for e in range(0, -15, -1)]
    gammas = sorted(gammas, reverse=True)
    signed = make_two_sample(d, mu).signed()
    rows = []
    for k in ks:
        if not 1 <= k <= d:
            raise ValueError(f"tap count {k} outside [1, {d}]")
        shifts = np.stack([shift_stack(a, k) for a in signed])
        predicted = recommend_step_size(signed, k)
        best = None
        for gamma in gammas:
            worst = 0
            ok = True
            for seed in range(seeds):
                rng = spawn_rng(master_seed, 0x7AB, k, seed)
                theta0 = uniform_sphere(rng, k + d)
                _, steps, status = kernels.quad_run(shifts, theta0, float(gamma),
                                                    0.0, budget)
                if status != kernels.SEPARATED:
                    ok = False
                    break
                worst = max(worst, steps)
            if ok:
                best = (float(gamma), worst)
                break
        rows.append(KernelTableRow(
            k=k, d=d,
            best_gamma=best[0] if best else float("nan"),
            predicted=predicted,
            iterations=best[1] if best else budget,
            seeds=seeds))
    return rows


@dataclass(frozen=True)
class RaceRow:
    model: str  # "linear" or "conv"
    seed: int
    best_gamma: float
    iterations: int  # at best_gamma; cap when never separated
    separated: bool


def _race_start(model: str, d: int, k: int, rng) -> ModelParams:
    if model == "linear":
        return ModelParams.linear(1e-3 * rng.standard_normal(d))
    c = np.zeros(k)
    c[0] = 1.0
    c += 1e-3 * rng.standard_normal(k)
    v = 1e-3 * rng.standard_normal(d)
    return ModelParams.conv(c, v)


def model_race(ds: Dataset, k: int = 2, gammas=None, seeds: int = 6,
               cap: int = 5000, master_seed: int = 0) -> list:
    """Per-seed best-grid-step iterations to separation, linear vs conv GD."""
    if gammas is None:
        gammas = [2.0**e for e in range(-6, 7)]
    rows = []
    for model in ("linear", "conv"):
        for seed in range(seeds):
            best_gamma, best_iters, best_sep = float("nan"), cap, False
            for gamma in gammas:
                rng = spawn_rng(master_seed, 0xACE, 0 if model == "linear" else 1, seed)
                _, iters, sep = train_to_separation(
                    _race_start(model, ds.d, k, rng), ds, float(gamma), cap)
                if sep and (not best_sep or iters < best_iters):
                    best_gamma, best_iters, best_sep = float(gamma), iters, True
            rows.append(RaceRow(model=model, seed=seed, best_gamma=best_gamma,
                                iterations=best_iters, separated=best_sep))
    return rows
