"""Pure-numpy implementations of the hot run loops.

Same call signatures and status codes as the compiled extension; selection
happens in pdx.kernels.  Gaussian noise is drawn from the supplied Generator
in chunks of `chunk` rows so noisy runs stay reproducible per backend.

Status codes: 0 separated, 1 iteration cap, 2 stalled (100 consecutive
unchanged sigma=0 steps), 3 diverged (non-finite decision value).
"""

from __future__ import annotations

import numpy as np

SEPARATED, MAX_ITERS, STALLED, DIVERGED = 0, 1, 2, 3
STALL_LIMIT = 100


class _NoiseStream:
    def __init__(self, rng, sigma, dim, chunk):
        self.rng = rng
        self.sigma = sigma
        self.dim = dim
        self.chunk = int(chunk)
        self.buf = None
        self.pos = self.chunk

    def next(self):
        if self.pos >= self.chunk:
            self.buf = self.rng.standard_normal((self.chunk, self.dim))
            self.pos = 0
        row = self.buf[self.pos]
        self.pos += 1
        return self.sigma * row


def batch_run(signed, z0, phi, max_iters, do_init=True):
    """Batch perceptron until separation; returns (z, steps, separated)."""
    signed = np.ascontiguousarray(signed, dtype=np.float64)
    z = np.array(z0, dtype=np.float64)
    n = signed.shape[0]
    init_vec = signed.sum(axis=0) / (2.0 * n)
    t = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            m = signed @ z
            if np.all(m > 0):
                return z, t, True
            if not np.all(np.isfinite(m)):
                return z, t, False
            if t >= max_iters:
                return z, t, False
            if t == 0 and do_init:
                z = z + init_vec
            else:
                z = z + (phi / n) * signed[m <= 0].sum(axis=0)
            t += 1


def two_sample_run(s1, s2, theta0, gamma, sigma, max_iters, rng=None, chunk=256):
    """Two-sample scheduler (bare gamma); returns (theta, steps, status, n1, n2).

    s1, s2 are the (k, d) shift stacks of the two signed samples.
    """
    s1 = np.ascontiguousarray(s1, dtype=np.float64)
    s2 = np.ascontiguousarray(s2, dtype=np.float64)
    th = np.array(theta0, dtype=np.float64)
    k = s1.shape[0]
    noise = _NoiseStream(rng, sigma, th.size, chunk) if sigma > 0 else None
    t = n1 = n2 = 0
    unchanged = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            x1, x2 = th[:k], th[k:]
            top1 = s1 @ x2
            q1 = float(x1 @ top1)
            if q1 <= 0:
                top, stack = top1, s1
            else:
                top2 = s2 @ x2
                q2 = float(x1 @ top2)
                if not (np.isfinite(q1) and np.isfinite(q2)):
                    return th, t, DIVERGED, n1, n2
                if q2 > 0:
                    return th, t, SEPARATED, n1, n2
                top, stack = top2, s2
            if not np.isfinite(q1):
                return th, t, DIVERGED, n1, n2
            if t >= max_iters:
                return th, t, MAX_ITERS, n1, n2
            if top is top1:
                n1 += 1
            else:
                n2 += 1
            new = th.copy()
            new[:k] += gamma * top
            new[k:] += gamma * (x1 @ stack)
            if noise is not None:
                new += noise.next()
                unchanged = 0
            else:
                unchanged = unchanged + 1 if np.array_equal(new, th) else 0
            th = new
            t += 1
            if unchanged >= STALL_LIMIT:
                return th, t, STALLED, n1, n2


def quad_run(shifts, theta0, gamma, sigma, max_iters, rng=None, chunk=256):
    """Batch quadratic perceptron over n stacked operators (gamma/n scaling).

    shifts has shape (n, k, d); returns (theta, steps, status).
    """
    shifts = np.ascontiguousarray(shifts, dtype=np.float64)
    n, k, d = shifts.shape
    th = np.array(theta0, dtype=np.float64)
    flat = shifts.reshape(n * k, d)
    noise = _NoiseStream(rng, sigma, th.size, chunk) if sigma > 0 else None
    t = 0
    unchanged = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            x1, x2 = th[:k], th[k:]
            tops = (flat @ x2).reshape(n, k)
            q = tops @ x1
            if not np.all(np.isfinite(q)):
                return th, t, DIVERGED
            if np.all(q > 0):
                return th, t, SEPARATED
            if t >= max_iters:
                return th, t, MAX_ITERS
            viol = q <= 0
            new = th.copy()
            new[:k] += (gamma / n) * tops[viol].sum(axis=0)
            new[k:] += (gamma / n) * (x1 @ shifts[viol].sum(axis=0))
            if noise is not None:
                new += noise.next()
                unchanged = 0
            else:
                unchanged = unchanged + 1 if np.array_equal(new, th) else 0
            th = new
            t += 1
            if unchanged >= STALL_LIMIT:
                return th, t, STALLED
