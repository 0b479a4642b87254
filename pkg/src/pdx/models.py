"""Model families, logistic loss, gradient-descent steps, curvature probes.

All model families share the margin form y_i m(b_i; w) = a_i . u(w) with
a_i = y_i b_i the signed sample and u(w) an effective linear weight:

- linear:      m(b; v) = b . v,               u = v
- conv:        m(b; c, v) = (c (*) b) . v,    u = sum_j c_j P^{-(j-1)} v
- two_layer:   m(b; C, v) = (C b) . v,        u = C^T v
- multi_layer: m(b; C_1..C_l, v) = (C_1 ... C_l b) . v,  u = C_l^T ... C_1^T v

GD on the mean logistic loss f(w) = (1/n) sum_i log(1 + exp(-y_i m(b_i; w)))
moves by w+ = w + gamma_eff * g(w, r) where r = (1/n) sum_i s_i a_i,
s_i = 1/(1 + exp(y_i m(b_i; w))), and g is the margin gradient with the
signed sample replaced by r (the models are linear in the sample, so the
per-sample gradients aggregate into one structured evaluation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .linalg import (
    DENSE_CAP,
    ConvOperator,
    MultiLinearMap,
    TwoLayerOperator,
    as_vector,
    circular_conv,
)

__all__ = [
    "ModelParams",
    "LossReport",
    "HessianProbe",
    "sigmoid",
    "softplus",
    "model_eval",
    "margins",
    "logistic_loss",
    "gd_step",
    "train_to_separation",
    "hessian_probe",
    "curvature_probe_dataset",
    "sample_curved_point",
]

_KINDS = ("linear", "conv", "two_layer", "multi_layer")


def softplus(t: np.ndarray) -> np.ndarray:
    """log(1 + exp(t)) without overflow on either tail."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t > 0
    out[pos] = t[pos] + np.log1p(np.exp(-t[pos]))
    out[~pos] = np.log1p(np.exp(t[~pos]))
    return out


def sigmoid(t: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(-t)) without overflow on either tail."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass(frozen=True)
class ModelParams:
    """Packed parameters of one model family.

    conv packs w = [c; v]; two_layer packs w = [vec(C); v] column-major;
    multi_layer packs w = [vec(C_1); ...; vec(C_l); v].
    """

    kind: str
    w: np.ndarray
    d: int
    k: int = 0
    f: int = 0
    layer_dims: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        w = as_vector(self.w, "w")
        object.__setattr__(self, "w", w)
        if self.kind == "linear":
            expected = self.d
        elif self.kind == "conv":
            if not 1 <= self.k <= self.d:
                raise ValueError(f"conv kernel k={self.k} must satisfy 1 <= k <= d={self.d}")
            expected = self.k + self.d
        elif self.kind == "two_layer":
            if self.f < 1:
                raise ValueError(f"two_layer width f={self.f} must be >= 1")
            expected = self.f * self.d + self.f
        else:
            dims = tuple(self.layer_dims)
            if len(dims) < 2 or dims[-1] != self.d:
                raise ValueError(f"layer_dims {dims} must end with d={self.d}")
            object.__setattr__(self, "layer_dims", dims)
            expected = MultiLinearMap(dims, np.ones(self.d)).dim
        if w.size != expected:
            raise ValueError(f"{self.kind} parameters need length {expected}, got {w.size}")

    @classmethod
    def linear(cls, v) -> "ModelParams":
        v = as_vector(v, "v")
        return cls("linear", v, d=v.size)

    @classmethod
    def conv(cls, c, v) -> "ModelParams":
        c = as_vector(c, "c")
        v = as_vector(v, "v")
        return cls("conv", np.concatenate([c, v]), d=v.size, k=c.size)

    @classmethod
    def two_layer(cls, C, v) -> "ModelParams":
        C = np.asarray(C, dtype=np.float64)
        v = as_vector(v, "v")
        if C.ndim != 2 or C.shape[0] != v.size:
            raise ValueError(f"C shape {C.shape} incompatible with v length {v.size}")
        w = np.concatenate([C.flatten(order="F"), v])
        return cls("two_layer", w, d=C.shape[1], f=C.shape[0])

    @classmethod
    def multi_layer(cls, mats, v) -> "ModelParams":
        mats = [np.asarray(M, dtype=np.float64) for M in mats]
        v = as_vector(v, "v")
        dims = tuple(M.shape[0] for M in mats) + (mats[-1].shape[1],)
        w = MultiLinearMap.pack(mats, v)
        return cls("multi_layer", w, d=dims[-1], layer_dims=dims)

    @property
    def n_layers(self) -> int:
        if self.kind == "multi_layer":
            return len(self.layer_dims) - 1
        return {"linear": 0, "conv": 1, "two_layer": 1}[self.kind]

    def split_conv(self) -> tuple[np.ndarray, np.ndarray]:
        return self.w[: self.k], self.w[self.k :]

    def split_two_layer(self) -> tuple[np.ndarray, np.ndarray]:
        return self.w[: self.f * self.d].reshape((self.f, self.d), order="F"), self.w[self.f * self.d :]

    def multilinear(self, a) -> MultiLinearMap:
        return MultiLinearMap(self.layer_dims, a)

    def effective_weight(self) -> np.ndarray:
        """u(w) with margin_i = a_i . u(w)."""
        if self.kind == "linear":
            return self.w.copy()
        if self.kind == "conv":
            c, v = self.split_conv()
            u = np.zeros(self.d)
            shifted = v
            for j in range(self.k):
                u += c[j] * shifted
                shifted = np.roll(shifted, -1)
            return u
        if self.kind == "two_layer":
            C, v = self.split_two_layer()
            return C.T @ v
        mats, v = self.multilinear(np.ones(self.d)).unpack(self.w)
        u = v
        for M in mats:
            u = M.T @ u
        return u


def model_eval(params: ModelParams, b) -> float:
    """m(b; w) for a single feature vector."""
    b = as_vector(b, "b")
    if b.size != params.d:
        raise ValueError(f"feature length {b.size} != model d={params.d}")
    return float(b @ params.effective_weight())


def margins(params: ModelParams, ds: Dataset) -> np.ndarray:
    """Signed margins y_i m(b_i; w)."""
    if ds.d != params.d:
        raise ValueError(f"dataset width {ds.d} != model d={params.d}")
    return ds.signed() @ params.effective_weight()


@dataclass(frozen=True)
class LossReport:
    loss: float
    accuracy: float
    separated: bool
    margins: np.ndarray


def logistic_loss(params: ModelParams, ds: Dataset) -> LossReport:
    """Mean logistic loss, 0/1 accuracy (zero margin counts as a miss),
    and whether all margins are strictly positive."""
    m = margins(params, ds)
    return LossReport(
        loss=float(np.mean(softplus(-m))),
        accuracy=float(np.mean(m > 0)),
        separated=bool(np.all(m > 0)),
        margins=m,
    )


def _margin_grad_at(params: ModelParams, r: np.ndarray) -> np.ndarray:
    """Gradient in w of a . u(w), evaluated with the aggregated sample a = r."""
    if params.kind == "linear":
        return r
    if params.kind == "conv":
        c, v = params.split_conv()
        top = np.empty(params.k)
        shifted = v
        for j in range(params.k):
            top[j] = r @ shifted
            shifted = np.roll(shifted, -1)
        return np.concatenate([top, circular_conv(c, r)])
    if params.kind == "two_layer":
        C, v = params.split_two_layer()
        return np.concatenate([np.kron(r, v), C @ r])
    return params.multilinear(r).grad(params.w)


def gd_step(params: ModelParams, ds: Dataset, gamma: float,
            normalized: bool = True) -> ModelParams:
    """One gradient-descent step on the mean logistic loss.

    For multi_layer models with l >= 2 layers the step size is normalized to
    gamma / ||w||^(l-1) when `normalized` (rejecting w = 0); other families
    use gamma as given.
    """
    if not np.isfinite(gamma) or gamma <= 0:
        raise ValueError(f"step size gamma must be positive and finite, got {gamma}")
    m = margins(params, ds)
    s = sigmoid(-m)
    r = (ds.signed().T @ s) / ds.n
    if not np.all(np.isfinite(r)):
        # overflowed margins turn the aggregated sample into nan; surface it
        # as the same divergence signal as a non-finite iterate
        raise FloatingPointError("gradient step produced a non-finite gradient")
    gamma_eff = gamma
    if params.kind == "multi_layer" and normalized and params.n_layers >= 2:
        norm = np.linalg.norm(params.w)
        if norm == 0.0:
            raise ValueError("normalized multi-layer step undefined at w = 0")
        gamma_eff = gamma / norm ** (params.n_layers - 1)
    w_next = params.w + gamma_eff * _margin_grad_at(params, r)
    if not np.all(np.isfinite(w_next)):
        raise FloatingPointError("gradient step produced non-finite parameters")
    return ModelParams(params.kind, w_next, d=params.d, k=params.k, f=params.f,
                       layer_dims=params.layer_dims)


def train_to_separation(params: ModelParams, ds: Dataset, gamma: float,
                        max_iters: int, normalized: bool = True):
    """Run GD until all margins are strictly positive or the budget runs out.

    Returns (params, iterations, separated).  Divergence (non-finite
    parameters) stops the run unseparated at the current count.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(int(max_iters)):
            if bool(np.all(margins(params, ds) > 0)):
                return params, t, True
            try:
                params = gd_step(params, ds, gamma, normalized=normalized)
            except FloatingPointError:
                return params, int(max_iters), False
        separated = bool(np.all(margins(params, ds) > 0))
    return params, int(max_iters), separated


@dataclass(frozen=True)
class HessianProbe:
    loss: float
    grad_norm: float
    hessian_norm_lb: float  # power-iteration estimate, never above the true norm
    dim: int


def hessian_probe(params: ModelParams, ds: Dataset,
                  max_dim: int = DENSE_CAP) -> HessianProbe:
    """Loss, gradient norm, and spectral-norm estimate of the loss Hessian.

    For the quadratic families (conv / two_layer) the Hessian is
    -(1/n) sum_i s_i A_i + (1/n) sum_i s_i (1 - s_i) (A_i w)(A_i w)^T with
    s_i = 1/(1 + exp((1/2) w^T A_i w)); it is materialized densely (capped).
    """
    from .spectral import _power_norm

    if params.kind not in ("conv", "two_layer"):
        raise ValueError(f"hessian_probe supports conv/two_layer, got {params.kind!r}")
    signed = ds.signed()
    if params.kind == "conv":
        ops = [ConvOperator(a, params.k) for a in signed]
    else:
        ops = [TwoLayerOperator(a, params.f) for a in signed]
    dim = ops[0].dim
    if dim > max_dim:
        raise ValueError(f"hessian materialization capped at {max_dim}, dim={dim}")
    w = params.w
    n = ds.n
    H = np.zeros((dim, dim))
    grad = np.zeros(dim)
    loss_terms = np.empty(n)
    for i, op in enumerate(ops):
        q = op.quad_form(w)
        s = float(sigmoid(np.array([-q]))[0])
        loss_terms[i] = softplus(np.array([-q]))[0]
        Aw = op.matvec(w)
        H -= s * op.dense(max_dim)
        H += (s * (1.0 - s)) * np.outer(Aw, Aw)
        grad -= s * Aw
    H /= n
    grad /= n
    est, _, _ = _power_norm(lambda x: H @ x, dim, 1e-10, 10**4)
    return HessianProbe(
        loss=float(np.mean(loss_terms)),
        grad_norm=float(np.linalg.norm(grad)),
        hessian_norm_lb=float(est),
        dim=dim,
    )


def curvature_probe_dataset(d: int) -> Dataset:
    """Single normalized all-ones sample; its k=2 operator has unit ||a||."""
    b = np.ones((1, d)) / np.sqrt(d)
    return Dataset(b, np.array([1.0]), name=f"curvature-probe(d={d})")


def sample_curved_point(d: int, rng) -> tuple[np.ndarray, float, float]:
    """Point w = alpha v1 + beta v2 in the flat-but-curved region.

    v1, v2 are the unit eigenvectors of the probe operator for eigenvalues
    +-sqrt(2); beta ~ U[0, 5], alpha ~ U[beta, sqrt(beta^2 + 1)], keeping the
    margin in (0, sqrt(2)/2] while ||w|| grows with beta.
    """
    a = np.ones(d) / np.sqrt(d)
    bottom = a / np.sqrt(2.0)
    v1 = np.concatenate([[0.5, 0.5], bottom])
    v2 = np.concatenate([[-0.5, -0.5], bottom])
    beta = rng.uniform(0.0, 5.0)
    alpha = rng.uniform(beta, np.sqrt(beta**2 + 1.0))
    return alpha * v1 + beta * v2, alpha, beta
