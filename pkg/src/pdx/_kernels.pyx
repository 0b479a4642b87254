# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled run loops for the perceptron variants.

Mirrors the signatures and status codes of pdx._kernels_py; pdx.kernels picks
this module when the build produced it.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()

SEPARATED, MAX_ITERS, STALLED, DIVERGED = 0, 1, 2, 3

cdef long _STALL_LIMIT = 100
STALL_LIMIT = _STALL_LIMIT


def batch_run(rows, z0, double phi, long max_iters, bint do_init=True):
    """Batch perceptron until separation; returns (z, steps, separated)."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] s = np.ascontiguousarray(rows, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] z_arr = np.array(z0, dtype=np.float64)
    cdef double[:, ::1] a = s
    cdef double[::1] z = z_arr
    cdef Py_ssize_t n = a.shape[0], d = a.shape[1]
    cdef double[::1] m = np.empty(n)
    cdef double[::1] colsum = np.empty(d)
    cdef Py_ssize_t i, j
    cdef long t = 0
    cdef double acc, scale
    cdef bint all_pos, finite
    while True:
        all_pos = True
        finite = True
        for i in range(n):
            acc = 0.0
            for j in range(d):
                acc += a[i, j] * z[j]
            m[i] = acc
            if not acc > 0:
                all_pos = False
            if not isfinite(acc):
                finite = False
        if all_pos:
            return z_arr, t, True
        if not finite:
            return z_arr, t, False
        if t >= max_iters:
            return z_arr, t, False
        if t == 0 and do_init:
            scale = 1.0 / (2.0 * n)
            for j in range(d):
                acc = 0.0
                for i in range(n):
                    acc += a[i, j]
                z[j] += acc * scale
        else:
            scale = phi / n
            for j in range(d):
                colsum[j] = 0.0
            for i in range(n):
                if m[i] <= 0:
                    for j in range(d):
                        colsum[j] += a[i, j]
            for j in range(d):
                z[j] += colsum[j] * scale
        t += 1


def two_sample_run(s1, s2, theta0, double gamma, double sigma, long max_iters,
                   rng=None, long chunk=256):
    """Two-sample scheduler (bare gamma); returns (theta, steps, status, n1, n2)."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] s1_arr = np.ascontiguousarray(s1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] s2_arr = np.ascontiguousarray(s2, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] th_arr = np.array(theta0, dtype=np.float64)
    cdef double[:, ::1] S1 = s1_arr
    cdef double[:, ::1] S2 = s2_arr
    cdef double[::1] th = th_arr
    cdef Py_ssize_t k = S1.shape[0], d = S1.shape[1]
    cdef double[::1] top = np.empty(k)
    cdef double[::1] oldx1 = np.empty(k)
    cdef double[:, ::1] sel
    cdef double[:, ::1] noise_buf = None
    cdef object noise_obj = None
    cdef Py_ssize_t noise_pos = chunk
    cdef Py_ssize_t i, j
    cdef long t = 0, n1 = 0, n2 = 0, unchanged = 0
    cdef double q1, q2, acc, nv
    cdef bint use1, changed
    while True:
        q1 = 0.0
        for i in range(k):
            acc = 0.0
            for j in range(d):
                acc += S1[i, j] * th[k + j]
            top[i] = acc
            q1 += th[i] * acc
        if not isfinite(q1):
            return th_arr, t, DIVERGED, n1, n2
        use1 = q1 <= 0.0
        if not use1:
            q2 = 0.0
            for i in range(k):
                acc = 0.0
                for j in range(d):
                    acc += S2[i, j] * th[k + j]
                top[i] = acc
                q2 += th[i] * acc
            if not isfinite(q2):
                return th_arr, t, DIVERGED, n1, n2
            if q2 > 0.0:
                return th_arr, t, SEPARATED, n1, n2
        if t >= max_iters:
            return th_arr, t, MAX_ITERS, n1, n2
        if use1:
            sel = S1
            n1 += 1
        else:
            sel = S2
            n2 += 1
        for i in range(k):
            oldx1[i] = th[i]
        changed = False
        for i in range(k):
            nv = th[i] + gamma * top[i]
            if nv != th[i]:
                changed = True
            th[i] = nv
        for j in range(d):
            acc = 0.0
            for i in range(k):
                acc += sel[i, j] * oldx1[i]
            nv = th[k + j] + gamma * acc
            if nv != th[k + j]:
                changed = True
            th[k + j] = nv
        if sigma > 0.0:
            if noise_pos >= chunk:
                noise_obj = rng.standard_normal((chunk, k + d))
                noise_buf = noise_obj
                noise_pos = 0
            for j in range(k + d):
                th[j] += sigma * noise_buf[noise_pos, j]
            noise_pos += 1
            unchanged = 0
        else:
            unchanged = unchanged + 1 if not changed else 0
        t += 1
        if unchanged >= _STALL_LIMIT:
            return th_arr, t, STALLED, n1, n2
