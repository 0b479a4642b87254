"""Circular-shift convolution and the structured symmetric operators.

Conventions used throughout the package:

- Vectors are 1-D float64 numpy arrays.
- P is the circular right-shift permutation: (P x)_1 = x_d, (P x)_i = x_{i-1}.
  P^d = I.
- Circular convolution of a kernel c (length k) with features b (length d):
  y = sum_j c_j P^{j-1} b, i.e. y_i = sum_j c_j b_{i-j+1} with indices wrapping
  downward (b_0 == b_d).  Kernels longer than the feature vector are rejected.
- Parameter packing for the convolution model is w = [c; v] (kernel block
  first).  For layered models w = [vec(C_1); ...; vec(C_l); v] with vec taken
  column-major.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "as_vector",
    "shift_right",
    "shift_stack",
    "circular_conv",
    "ConvOperator",
    "TwoLayerOperator",
    "MultiLinearMap",
]

DENSE_CAP = 512


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Validate and convert to a finite float64 1-D array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if v.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def shift_right(x) -> np.ndarray:
    """Apply the circular right-shift permutation P."""
    return np.roll(as_vector(x, "x"), 1)


def shift_stack(a: np.ndarray, k: int) -> np.ndarray:
    """Rows P^{j-1} a for j = 1..k, shape (k, d)."""
    a = as_vector(a, "a")
    d = a.size
    if not 1 <= k <= d:
        raise ValueError(f"kernel size k={k} must satisfy 1 <= k <= d={d}")
    out = np.empty((k, d))
    out[0] = a
    for j in range(1, k):
        out[j] = np.roll(out[j - 1], 1)
    return out


def circular_conv(c, b) -> np.ndarray:
    """Circular convolution sum_j c_j P^{j-1} b (kernel c, features b)."""
    c = as_vector(c, "kernel c")
    b = as_vector(b, "features b")
    return shift_stack(b, c.size).T @ c


@dataclass(frozen=True)
class ConvOperator:
    """Symmetric operator A on R^{k+d} encoding one signed sample a = y*b.

    A = [[0_{k x k}, S], [S^T, 0_{d x d}]] with S rows (P^{j-1} a)^T.
    For w = [c; v]: quad_form(w) = (1/2) w^T A w = y * (c (*) b)^T v, the
    signed margin of the convolution model on this sample.
    """

    a: np.ndarray
    k: int
    shifts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = as_vector(self.a, "a")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "shifts", shift_stack(a, self.k))

    @property
    def d(self) -> int:
        return self.a.size

    @property
    def dim(self) -> int:
        return self.k + self.a.size

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = as_vector(x, "x")
        if x.size != self.dim:
            raise ValueError(f"expected length {self.dim}, got {x.size}")
        return x[: self.k], x[self.k :]

    def matvec(self, x) -> np.ndarray:
        x1, x2 = self.split(x)
        return np.concatenate([self.shifts @ x2, self.shifts.T @ x1])

    def quad_form(self, w) -> float:
        """(1/2) w^T A w."""
        x1, x2 = self.split(w)
        return float(x1 @ (self.shifts @ x2))

    def dense(self, max_dim: int = DENSE_CAP) -> np.ndarray:
        if self.dim > max_dim:
            raise ValueError(f"dense materialization capped at {max_dim}, dim={self.dim}")
        A = np.zeros((self.dim, self.dim))
        A[: self.k, self.k :] = self.shifts
        A[self.k :, : self.k] = self.shifts.T
        return A

    def norm_upper(self) -> float:
        """sqrt(k) * ||a||, always an upper bound on the spectral norm."""
        return float(np.sqrt(self.k) * np.linalg.norm(self.a))


@dataclass(frozen=True)
class TwoLayerOperator:
    """Symmetric operator for the two-layer model m(b; C, v) = (C b)^T v.

    Packing w = [vec(C); v] with C of shape (f, d), vec column-major.
    A = [[0, a (x) I_f], [a^T (x) I_f, 0]]; quad_form(w) = v^T C a.
    """

    a: np.ndarray
    f: int

    def __post_init__(self):
        a = as_vector(self.a, "a")
        if self.f < 1:
            raise ValueError(f"width f={self.f} must be >= 1")
        object.__setattr__(self, "a", a)

    @property
    def d(self) -> int:
        return self.a.size

    @property
    def dim(self) -> int:
        return self.f * self.a.size + self.f

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = as_vector(x, "x")
        if x.size != self.dim:
            raise ValueError(f"expected length {self.dim}, got {x.size}")
        return x[: self.f * self.d], x[self.f * self.d :]

    def unpack(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(C, v) from packed coordinates."""
        x1, x2 = self.split(x)
        return x1.reshape((self.f, self.d), order="F"), x2

    def matvec(self, x) -> np.ndarray:
        C, v = self.unpack(x)
        return np.concatenate([np.kron(self.a, v), C @ self.a])

    def quad_form(self, w) -> float:
        """(1/2) w^T A w = v^T C a."""
        C, v = self.unpack(w)
        return float(v @ (C @ self.a))

    def dense(self, max_dim: int = DENSE_CAP) -> np.ndarray:
        if self.dim > max_dim:
            raise ValueError(f"dense materialization capped at {max_dim}, dim={self.dim}")
        A = np.zeros((self.dim, self.dim))
        block = np.kron(self.a[:, None], np.eye(self.f))  # (f*d, f)
        A[: self.f * self.d, self.f * self.d :] = block
        A[self.f * self.d :, : self.f * self.d] = block.T
        return A


@dataclass(frozen=True)
class MultiLinearMap:
    """Symmetric (l+1)-linear form for the layered model (C_1 ... C_l b)^T v.

    layer_dims = (f_1, ..., f_l, d); C_j has shape (f_j, f_{j+1}) with
    f_{l+1} = d, and v has length f_1.  Packing
    w = [vec(C_1); ...; vec(C_l); v], vec column-major.

    value(w) = v^T C_1 ... C_l a, the diagonal evaluation of the symmetric
    multilinear form divided by (l+1); grad(w) is its gradient in w, i.e. the
    form with one argument left open and the rest set to w.
    """

    layer_dims: tuple
    a: np.ndarray

    def __post_init__(self):
        dims = tuple(int(f) for f in self.layer_dims)
        if len(dims) < 2:
            raise ValueError("layer_dims needs at least (f_1, d)")
        if any(f < 1 for f in dims):
            raise ValueError(f"layer_dims must be positive, got {dims}")
        a = as_vector(self.a, "a")
        if a.size != dims[-1]:
            raise ValueError(f"a has length {a.size}, layer_dims ends with d={dims[-1]}")
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "a", a)

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def arity(self) -> int:
        return self.n_layers + 1

    @property
    def block_shapes(self) -> list[tuple[int, int]]:
        dims = self.layer_dims
        return [(dims[j], dims[j + 1]) for j in range(self.n_layers)]

    @property
    def dim(self) -> int:
        return sum(r * c for r, c in self.block_shapes) + self.layer_dims[0]

    def unpack(self, w) -> tuple[list[np.ndarray], np.ndarray]:
        w = as_vector(w, "w")
        if w.size != self.dim:
            raise ValueError(f"expected length {self.dim}, got {w.size}")
        mats = []
        pos = 0
        for r, c in self.block_shapes:
            mats.append(w[pos : pos + r * c].reshape((r, c), order="F"))
            pos += r * c
        return mats, w[pos:]

    @staticmethod
    def pack(mats, v) -> np.ndarray:
        parts = [np.asarray(M, dtype=np.float64).flatten(order="F") for M in mats]
        parts.append(as_vector(v, "v"))
        return np.concatenate(parts)

    def value(self, w) -> float:
        """v^T C_1 ... C_l a."""
        mats, v = self.unpack(w)
        out = self.a
        for M in reversed(mats):
            out = M @ out
        return float(v @ out)

    def grad(self, w) -> np.ndarray:
        """Gradient of value(w); for l = 1 this equals the operator matvec."""
        mats, v = self.unpack(w)
        # suffix[j] = C_{j+1} ... C_l a ; prefix[j] = (C_1 ... C_{j-1})^T v
        suffix = [None] * (self.n_layers + 1)
        suffix[self.n_layers] = self.a
        for j in range(self.n_layers - 1, -1, -1):
            suffix[j] = mats[j] @ suffix[j + 1]
        prefix = [None] * (self.n_layers + 1)
        prefix[0] = v
        for j in range(1, self.n_layers + 1):
            prefix[j] = mats[j - 1].T @ prefix[j - 1]
        parts = []
        for j in range(self.n_layers):
            parts.append(np.outer(prefix[j], suffix[j + 1]).flatten(order="F"))
        parts.append(suffix[0])
        return np.concatenate(parts)
