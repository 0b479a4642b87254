"""Closed-form spectra of the structured operators and norm estimation.

The convolution operator with kernel size 2 built from a signed sample a has
at most four nonzero eigenvalues.  With s = a . (P a):

- a = 0: zero operator.
- P a = a: eigenvalues +-sqrt(2)||a||, eigenvectors [||a||, ||a||, sqrt(2) a]
  and its sign flip.
- P a = -a: eigenvalues +-sqrt(2)||a||, eigenvectors [||a||, -||a||, sqrt(2) a]
  and its sign flip.
- otherwise: eigenvalues +-sqrt(||a||^2 + s) and +-sqrt(||a||^2 - s) with
  eigenvectors [r, r, a + P a], [-r, -r, a + P a], [r, -r, a - P a],
  [-r, r, a - P a] (r the matching eigenvalue magnitude).

Everything else is in the kernel, so ||a|| <= ||A|| <= sqrt(2)||a||; for
general kernel size k, (1/sqrt(k)) ||sum_j P^{j-1} a|| <= ||A|| <= sqrt(k)||a||.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import ConvOperator, as_vector, shift_right
from .rng import spawn_rng

__all__ = [
    "EigenPair",
    "EigenSystem",
    "TwoSampleSpectrum",
    "NormBounds",
    "eigensystem_k2",
    "two_sample_spectrum",
    "operator_norm",
    "norm_bounds",
    "recommend_step_size",
    "reduce_block_quadratic",
]


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray  # raw closed-form pattern
    unit: np.ndarray  # normalized copy


@dataclass(frozen=True)
class EigenSystem:
    case: str  # zero | shift_symmetric | shift_antisymmetric | generic
    pairs: tuple
    kernel_dim: int
    dim: int


@dataclass(frozen=True)
class TwoSampleSpectrum:
    d: int
    mu: float
    lambda1: float  # top eigenvalue of the all-ones sample operator
    lambda2: float  # top eigenvalue of the perturbed sample operator
    v1_plus: np.ndarray
    v1_minus: np.ndarray
    v2_plus: np.ndarray
    v2_minus: np.ndarray
    v_mu_plus: np.ndarray  # eigenvector of the small eigenvalue +mu
    v_mu_minus: np.ndarray
    a1: np.ndarray
    a2: np.ndarray

    def operators(self) -> tuple[ConvOperator, ConvOperator]:
        return ConvOperator(self.a1, 2), ConvOperator(self.a2, 2)


@dataclass(frozen=True)
class NormBounds:
    lower: float
    upper: float
    estimate: float
    converged: bool
    iterations: int


def _pair(value: float, raw: np.ndarray) -> EigenPair:
    n = np.linalg.norm(raw)
    return EigenPair(float(value), raw, raw / n)


def eigensystem_k2(a, tol: float = 1e-12) -> EigenSystem:
    """Closed-form nonzero eigensystem of the k=2 operator for signed sample a.

    Case selection uses the relative tolerance tol*||a|| on ||a -+ P a||;
    a = 0 is compared exactly.
    """
    a = as_vector(a, "a")
    d = a.size
    na = float(np.linalg.norm(a))
    dim = d + 2
    if na == 0.0:
        return EigenSystem("zero", (), kernel_dim=dim, dim=dim)
    pa = shift_right(a)
    thresh = tol * na
    root2 = np.sqrt(2.0)
    if np.linalg.norm(a - pa) <= thresh:
        lam = root2 * na
        v1 = np.concatenate([[na, na], root2 * a])
        v2 = np.concatenate([[-na, -na], root2 * a])
        pairs = (_pair(lam, v1), _pair(-lam, v2))
        return EigenSystem("shift_symmetric", pairs, kernel_dim=dim - 2, dim=dim)
    if np.linalg.norm(a + pa) <= thresh:
        lam = root2 * na
        v1 = np.concatenate([[na, -na], root2 * a])
        v2 = np.concatenate([[-na, na], root2 * a])
        pairs = (_pair(lam, v1), _pair(-lam, v2))
        return EigenSystem("shift_antisymmetric", pairs, kernel_dim=dim - 2, dim=dim)
    s = float(a @ pa)
    ap = float(np.sqrt(na**2 + s))
    am = float(np.sqrt(na**2 - s))
    plus = a + pa
    minus = a - pa
    pairs = (
        _pair(ap, np.concatenate([[ap, ap], plus])),
        _pair(-ap, np.concatenate([[-ap, -ap], plus])),
        _pair(am, np.concatenate([[am, -am], minus])),
        _pair(-am, np.concatenate([[-am, am], minus])),
    )
    return EigenSystem("generic", pairs, kernel_dim=dim - 4, dim=dim)


def two_sample_spectrum(d: int, mu: float) -> TwoSampleSpectrum:
    """Spectra of the two operators of the margin-mu two-sample dataset.

    Sample 1 is all-ones with label +1, sample 2 is all-ones with its first
    coordinate bumped by mu and label -1.  The small eigenvalues +-mu come
    with eigenvectors supported on the first four coordinates; both lie in
    the kernel of the first operator (validated here).
    """
    if d < 3:
        raise ValueError(f"two-sample spectrum needs d >= 3, got d={d}")
    if not np.isfinite(mu) or mu <= 0:
        raise ValueError(f"margin mu must be positive and finite, got {mu}")
    a1 = np.ones(d)
    a2 = -np.ones(d)
    a2[0] = -(1.0 + mu)

    lambda1 = float(np.sqrt(2.0 * d))
    lambda2 = float(np.sqrt((2.0 + mu) ** 2 + 2.0 * (d - 2)))

    # shift-symmetric patterns for a1 (P a1 = a1)
    na1 = float(np.linalg.norm(a1))
    v1_plus = np.concatenate([[na1, na1], np.sqrt(2.0) * a1])
    v1_minus = np.concatenate([[-na1, -na1], np.sqrt(2.0) * a1])

    # generic-case patterns for a2; the small pair is built from a2 - P a2,
    # whose only nonzero entries are -+ the realized margin, so the
    # normalized vectors are exact [.5, -.5, -.5, .5, 0, ...] patterns and
    # the cancellation-prone sqrt(||a||^2 - s) route is avoided.
    pa2 = shift_right(a2)
    plus = a2 + pa2
    minus = a2 - pa2
    mu_real = float(minus[1])  # fl(1+mu) - 1, the margin realized in floats
    v2_plus = np.concatenate([[lambda2, lambda2], plus])
    v2_minus = np.concatenate([[-lambda2, -lambda2], plus])
    v_mu_plus = np.concatenate([[mu_real, -mu_real], minus])
    v_mu_minus = np.concatenate([[-mu_real, mu_real], minus])

    def unit(v):
        return v / np.linalg.norm(v)

    spec = TwoSampleSpectrum(
        d=d,
        mu=float(mu),
        lambda1=lambda1,
        lambda2=lambda2,
        v1_plus=unit(v1_plus),
        v1_minus=unit(v1_minus),
        v2_plus=unit(v2_plus),
        v2_minus=unit(v2_minus),
        v_mu_plus=unit(v_mu_plus),
        v_mu_minus=unit(v_mu_minus),
        a1=a1,
        a2=a2,
    )
    op1 = ConvOperator(a1, 2)
    for v in (spec.v_mu_plus, spec.v_mu_minus):
        resid = np.linalg.norm(op1.matvec(v))
        if resid > 1e-8:
            raise AssertionError(f"small-eigenvalue vector not in ker(A1): residual {resid}")
    return spec


def _power_norm(matvec, dim: int, rel_tol: float, max_iters: int):
    """Spectral norm of a symmetric operator via power iteration on A^2.

    The start vector is drawn from a fixed stream keyed by the dimension, so
    repeated calls are deterministic while overlapping every eigenspace (a
    structured start can sit nearly orthogonal to the top one and stall the
    estimate on a lower eigenvalue).  Stopping is residual-based: with unit u,
    q = ||A u||^2 equals the Rayleigh quotient of A^2, and
    ||A^2 u - q u|| <= rel_tol * q bounds the eigenvalue error of q, so the
    returned estimate sqrt(q) carries relative error at most ~rel_tol/2 (a
    plain change-based stop can fire far from the limit when eigenvalues
    cluster).  Returns (estimate, converged, iterations); the estimate never
    exceeds the true norm.
    """
    u = spawn_rng(0x908F, dim).standard_normal(dim)
    u /= np.linalg.norm(u)
    est = 0.0
    for it in range(1, max_iters + 1):
        y = matvec(u)
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return 0.0, True, it
        est = ny  # u is unit, so ||A u|| <= ||A|| with equality in the limit
        z = matvec(y)
        if np.linalg.norm(z - (ny * ny) * u) <= rel_tol * ny * ny:
            return est, True, it
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return est, True, it
        u = z / nz
    return est, False, max_iters


def operator_norm(op, rel_tol: float = 1e-10, max_iters: int = 10**4):
    """Power-iteration estimate of ||A|| for an operator with .matvec/.dim."""
    return _power_norm(op.matvec, op.dim, rel_tol, max_iters)


def norm_bounds(op: ConvOperator, rel_tol: float = 1e-10, max_iters: int = 10**4) -> NormBounds:
    """Sandwich bounds and a power-iteration estimate of ||A||.

    lower = (1/sqrt(k)) ||sum_j P^{j-1} a|| (strengthened to ||a|| for k=2),
    upper = sqrt(k) ||a||.
    """
    k = op.k
    na = float(np.linalg.norm(op.a))
    lower = float(np.linalg.norm(op.shifts.sum(axis=0)) / np.sqrt(k))
    if k == 2:
        lower = max(lower, na)
    upper = float(np.sqrt(k) * na)
    est, converged, iters = operator_norm(op, rel_tol, max_iters)
    return NormBounds(lower=lower, upper=upper, estimate=est, converged=converged, iterations=iters)


def recommend_step_size(signed_rows, k: int, rel_tol: float = 1e-10, max_iters: int = 10**4) -> float:
    """Largest safe step size 1 / max_i ||A_i|| for the quadratic perceptron.

    signed_rows holds a_i = y_i b_i as rows.  Samples whose norm estimate
    fails to converge fall back to the sqrt(k)||a_i|| upper bound (making the
    recommendation smaller, never larger than 1/||A_i||).
    """
    rows = np.atleast_2d(np.asarray(signed_rows, dtype=np.float64))
    if rows.ndim != 2 or rows.size == 0:
        raise ValueError("signed_rows must be a non-empty (n, d) array")
    worst = 0.0
    for a in rows:
        if not np.any(a != 0.0):
            continue
        op = ConvOperator(a, k)
        est, converged, _ = operator_norm(op, rel_tol, max_iters)
        worst = max(worst, est if converged else op.norm_upper())
    if worst == 0.0:
        raise ValueError("all samples are zero; no finite step size recommendation")
    return 1.0 / worst


def _top_eigenvalue_dense(M: np.ndarray, rel_tol: float = 1e-10, max_iters: int = 10**4) -> float:
    """Largest (signed) eigenvalue of a symmetric matrix via shifted power iteration."""
    # Gershgorin shift makes M + c I positive semidefinite.
    c = float(np.max(np.sum(np.abs(M), axis=1)))
    if c == 0.0:
        return 0.0
    shifted = M + c * np.eye(M.shape[0])
    est, _, _ = _power_norm(lambda x: shifted @ x, M.shape[0], rel_tol, max_iters)
    return float(est - c)


def reduce_block_quadratic(Asub: np.ndarray, a, b: float, p: int) -> float:
    """Maximum of x^T B x over the unit ball for the replicated-column block form.

    B places p identical columns a (and the scalar diagonal b) next to Asub;
    the maximum equals the top eigenvalue of the (dim+1) compression
    [[Asub, sqrt(p) a], [sqrt(p) a^T, p b]], clamped at 0 (x = 0 is feasible).
    """
    Asub = np.asarray(Asub, dtype=np.float64)
    if Asub.ndim != 2 or Asub.shape[0] != Asub.shape[1]:
        raise ValueError(f"Asub must be square, got shape {Asub.shape}")
    if not np.allclose(Asub, Asub.T, atol=1e-12):
        raise ValueError("Asub must be symmetric")
    a = as_vector(a, "a")
    if a.size != Asub.shape[0]:
        raise ValueError(f"a has length {a.size}, expected {Asub.shape[0]}")
    if p < 1:
        raise ValueError(f"replication count p must be >= 1, got {p}")
    m = Asub.shape[0]
    C = np.zeros((m + 1, m + 1))
    C[:m, :m] = Asub
    C[:m, m] = np.sqrt(p) * a
    C[m, :m] = np.sqrt(p) * a
    C[m, m] = p * float(b)
    return max(_top_eigenvalue_dense(C), 0.0)
