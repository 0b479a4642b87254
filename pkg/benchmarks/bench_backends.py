"""Compare the compiled inner loops against the pure NumPy fallback.

Run as `python benchmarks/bench_backends.py`.  Each benchmark executes a
fixed number of steps (no early stopping) by disabling separation through a
non-separable configuration, then reports steps per second for both backends
on the same inputs.
"""

from __future__ import annotations

import time

import numpy as np

from pdx.data import make_two_sample
from pdx.kernels import backends
from pdx.rng import spawn_rng
from pdx.linalg import shift_stack


def _time(fn, *args, repeats=3, **kwargs):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_batch(mod, d=400, mu=0.01, iters=50_000):
    ds = make_two_sample(d, mu)
    z0 = np.zeros(d)
    elapsed, (_, steps, _) = _time(mod.batch_run, ds.signed(), z0, 1.0, iters)
    return steps, elapsed


def bench_two_sample(mod, d=400, mu=0.01, iters=50_000):
    ds = make_two_sample(d, mu)
    signed = ds.signed()
    s1, s2 = shift_stack(signed[0], 2), shift_stack(signed[1], 2)
    rng = spawn_rng(0, 0xBE)
    theta0 = rng.standard_normal(d + 2)
    theta0 /= np.linalg.norm(theta0)
    # a deliberately tiny step keeps the run busy for the full budget
    elapsed, (_, steps, *_rest) = _time(
        mod.two_sample_run, s1, s2, theta0, 1e-7, 0.0, iters)
    return steps, elapsed


def bench_quad(mod, d=256, k=8, n=16, iters=2_000):
    rng = spawn_rng(0, 0xBF)
    sample = rng.standard_normal((n, d))
    shifts = np.stack([shift_stack(a, k) for a in sample])
    theta0 = rng.standard_normal(k + d)
    theta0 /= np.linalg.norm(theta0)
    elapsed, (_, steps, _) = _time(mod.quad_run, shifts, theta0, 1e-9, 0.0,
                                   iters, rng=None)
    return steps, elapsed


def main() -> None:
    mods = backends()
    print(f"backends available: {', '.join(mods)}")
    rows = []
    for name, mod in mods.items():
        steps, elapsed = bench_batch(mod)
        rows.append(("batch_run d=400", name, steps, elapsed))
        steps, elapsed = bench_two_sample(mod)
        rows.append(("two_sample_run d=400", name, steps, elapsed))
        if hasattr(mod, "quad_run"):  # the n-sample loop is BLAS-bound, numpy only
            steps, elapsed = bench_quad(mod)
            rows.append(("quad_run d=256 k=8 n=16", name, steps, elapsed))
    print(f"{'benchmark':<26} {'backend':<10} {'steps':>8} {'sec':>9} {'steps/sec':>12}")
    for bench, name, steps, elapsed in rows:
        rate = steps / elapsed if elapsed > 0 else float("inf")
        print(f"{bench:<26} {name:<10} {steps:>8} {elapsed:>9.4f} {rate:>12.0f}")


if __name__ == "__main__":
    main()
