"""Datasets, IDX/CSV input-output, run configuration, and trace records.

File formats:
- dataset CSV: header ``y,b_1,...,b_d``; y in {-1, +1}; floats written with 17
  significant digits so values round-trip exactly.
- trace CSV: header ``run_id,algo,t,loss,accuracy,iterate_norm,
  violated_count,corr_mu_plus,step_kind,step_size``; corr_mu_plus is empty
  when the observable is undefined for the algorithm.
- sweep CSV: header ``d,mu,algo,seed,step_size,iterations,separated``.
- IDX: the big-endian binary format with magic 0x00000803 (ubyte images,
  dims n x rows x cols) and 0x00000801 (ubyte labels); pixels are scaled
  to [0, 1] on load.
- run config: flat ``key = value`` text, ``#`` comments; unknown keys are
  rejected.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, fields

import numpy as np

from .rng import spawn_rng

__all__ = [
    "Dataset",
    "TraceRecord",
    "SweepRow",
    "RunConfig",
    "ConfigError",
    "make_two_sample",
    "make_separable",
    "load_idx_pair",
    "write_idx_pair",
    "load_csv_dataset",
    "write_csv_dataset",
    "write_trace",
    "write_sweep",
    "load_sweep",
    "parse_config",
    "dataset_from_config",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

TRACE_COLUMNS = [
    "run_id", "algo", "t", "loss", "accuracy", "iterate_norm",
    "violated_count", "corr_mu_plus", "step_kind", "step_size",
]
SWEEP_COLUMNS = ["d", "mu", "algo", "seed", "step_size", "iterations", "separated"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Dataset:
    """Labeled features: rows b_i in R^d, labels y_i in {-1, +1}."""

    b: np.ndarray
    y: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.b, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if b.ndim != 2 or b.shape[0] != y.size:
            raise ValueError(f"features {b.shape} and labels {y.shape} disagree")
        if not np.all(np.isfinite(b)):
            raise ValueError("features have non-finite entries")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def d(self) -> int:
        return self.b.shape[1]

    def signed(self) -> np.ndarray:
        """Rows a_i = y_i b_i."""
        return self.y[:, None] * self.b


def make_two_sample(d: int, mu: float) -> Dataset:
    """The minimal hard pair: all-ones labeled +1 vs first coordinate bumped
    by mu labeled -1."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not np.isfinite(mu) or mu <= 0:
        raise ValueError(f"margin mu must be positive and finite, got {mu}")
    b = np.ones((2, d))
    b[1, 0] = 1.0 + mu
    return Dataset(b, np.array([1.0, -1.0]), name=f"two-sample(d={d},mu={mu})")


def make_separable(d: int, n: int, margin: float, seed: int) -> Dataset:
    """Random dataset separable by a planted unit direction with the given margin."""
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = spawn_rng(seed, 0xDA7A)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    x = rng.standard_normal((n, d))
    x -= np.outer(x @ v, v)
    slack = rng.random(n)
    b = x + ((margin + slack) * y)[:, None] * v
    return Dataset(b, y, name=f"separable(d={d},n={n},margin={margin},seed={seed})")


def _read_idx(path: str, magic_expected: int) -> np.ndarray:
    with open(path, "rb") as f:
        magic, = struct.unpack(">I", f.read(4))
        if magic != magic_expected:
            raise ValueError(f"{path}: IDX magic 0x{magic:08x}, expected 0x{magic_expected:08x}")
        ndim = magic & 0xFF
        dims = struct.unpack(f">{ndim}I", f.read(4 * ndim))
        data = np.frombuffer(f.read(), dtype=np.uint8)
    if data.size != int(np.prod(dims)):
        raise ValueError(f"{path}: payload has {data.size} bytes, header says {dims}")
    return data.reshape(dims)


def load_idx_pair(images_path: str, labels_path: str, class_a: int, class_b: int,
                  limit: int | None = None, seed: int = 0) -> Dataset:
    """Two-class dataset from an IDX image/label file pair.

    class_a maps to label +1, class_b to -1.  Pixels are flattened and scaled
    to [0, 1].  With a limit, each class is subsampled to at most `limit`
    rows using the seeded generator (all rows kept when fewer are available).
    """
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(
            f"IDX pair disagrees: {images.shape[0]} images vs {labels.shape[0]} labels")
    if class_a == class_b:
        raise ValueError("class_a and class_b must differ")
    flat = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    rows, ys = [], []
    for cls, lab in ((class_a, 1.0), (class_b, -1.0)):
        idx = np.flatnonzero(labels == cls)
        if idx.size == 0:
            raise ValueError(f"class {cls} not present in {labels_path}")
        if limit is not None and idx.size > limit:
            rng = spawn_rng(seed, 0x1D8, cls)
            idx = np.sort(rng.choice(idx, size=limit, replace=False))
        rows.append(flat[idx])
        ys.append(np.full(idx.size, lab))
    return Dataset(np.vstack(rows), np.concatenate(ys),
                   name=f"idx({class_a}vs{class_b})")


def write_idx_pair(images: np.ndarray, labels: np.ndarray,
                   images_path: str, labels_path: str) -> None:
    """Write a ubyte image stack (n, rows, cols) and label vector as IDX files."""
    images = np.asarray(images)
    labels = np.asarray(labels)
    if images.ndim != 3:
        raise ValueError(f"images must be (n, rows, cols), got {images.shape}")
    if labels.shape != (images.shape[0],):
        raise ValueError("labels length must match image count")
    if images.dtype != np.uint8 or labels.dtype != np.uint8:
        raise ValueError("IDX payloads must be uint8")
    n, r, c = images.shape
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, r, c))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, n))
        f.write(labels.tobytes())


def load_csv_dataset(path: str) -> Dataset:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty dataset file")
        d = len(header) - 1
        expected = ["y"] + [f"b_{i}" for i in range(1, d + 1)]
        if header != expected or d < 1:
            raise ValueError(f"{path}: bad dataset header {header!r}")
        ys, bs = [], []
        for row in reader:
            if len(row) != d + 1:
                raise ValueError(f"{path}: row with {len(row)} fields, expected {d + 1}")
            ys.append(float(row[0]))
            bs.append([float(x) for x in row[1:]])
    if not ys:
        raise ValueError(f"{path}: dataset has no rows")
    return Dataset(np.array(bs), np.array(ys), name=path)


def write_csv_dataset(ds: Dataset, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["y"] + [f"b_{i}" for i in range(1, ds.d + 1)])
        for yi, bi in zip(ds.y, ds.b):
            w.writerow([f"{int(yi):d}"] + [_fmt(x) for x in bi])


@dataclass(frozen=True)
class TraceRecord:
    run_id: str
    algo: str
    t: int
    loss: float
    accuracy: float
    iterate_norm: float
    violated_count: int
    corr_mu_plus: float | None  # None when undefined for the algorithm
    step_kind: str
    step_size: float


def write_trace(records, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRACE_COLUMNS)
        for r in records:
            w.writerow([
                r.run_id, r.algo, r.t, _fmt(r.loss), _fmt(r.accuracy),
                _fmt(r.iterate_norm), r.violated_count,
                "" if r.corr_mu_plus is None else _fmt(r.corr_mu_plus),
                r.step_kind, _fmt(r.step_size),
            ])


@dataclass(frozen=True)
class SweepRow:
    d: int
    mu: float
    algo: str
    seed: int
    step_size: float
    iterations: int
    separated: bool


def write_sweep(rows, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r.d, _fmt(r.mu), r.algo, r.seed, _fmt(r.step_size),
                        r.iterations, "true" if r.separated else "false"])


def load_sweep(path: str) -> list[SweepRow]:
    out = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != SWEEP_COLUMNS:
            raise ValueError(f"{path}: bad sweep header {header!r}")
        for row in reader:
            out.append(SweepRow(int(row[0]), float(row[1]), row[2], int(row[3]),
                                float(row[4]), int(row[5]), row[6] == "true"))
    return out


class ConfigError(ValueError):
    """Bad run configuration (unknown key, missing value, wrong type)."""


_ALGORITHMS = ("batch", "quad", "two-sample", "gd-linear", "gd-conv")
_MODELS = ("linear", "conv")


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    d: int = 0  # inferred from the dataset when it carries its own width
    k: int = 2
    n: int = 2
    mu: float = 0.0
    gamma: float | str = "auto"
    sigma: float = 0.0
    seed: int = 0
    max_iters: int = 100_000
    trace_stride: int = 1
    model: str = ""
    dataset: str = "two-sample"


_INT_KEYS = {"d", "k", "n", "seed", "max_iters", "trace_stride"}
_FLOAT_KEYS = {"mu", "sigma"}


def parse_config(path: str) -> RunConfig:
    raw: dict[str, str] = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in raw:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value

    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {', '.join(unknown)}")
    if "algorithm" not in raw:
        raise ConfigError(f"{path}: missing required key 'algorithm'")

    kwargs: dict = {}
    for key, value in raw.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key == "gamma":
                kwargs[key] = value if value == "auto" else float(value)
            else:
                kwargs[key] = value
        except ValueError as e:
            raise ConfigError(f"{path}: bad value for {key!r}: {value!r}") from e
    cfg = RunConfig(**kwargs)
    return validate_config(cfg, origin=path)


def validate_config(cfg: RunConfig, origin: str = "config") -> RunConfig:
    if cfg.algorithm not in _ALGORITHMS:
        raise ConfigError(f"{origin}: algorithm must be one of {_ALGORITHMS}, got {cfg.algorithm!r}")
    if cfg.model and cfg.model not in _MODELS:
        raise ConfigError(f"{origin}: model must be one of {_MODELS}, got {cfg.model!r}")
    if isinstance(cfg.gamma, str) and cfg.gamma != "auto":
        raise ConfigError(f"{origin}: gamma must be a number or 'auto', got {cfg.gamma!r}")
    if isinstance(cfg.gamma, float) and (not np.isfinite(cfg.gamma) or cfg.gamma <= 0):
        raise ConfigError(f"{origin}: gamma must be positive and finite")
    if cfg.sigma < 0 or not np.isfinite(cfg.sigma):
        raise ConfigError(f"{origin}: sigma must be >= 0 and finite")
    if cfg.max_iters < 1:
        raise ConfigError(f"{origin}: max_iters must be >= 1")
    if cfg.trace_stride < 1:
        raise ConfigError(f"{origin}: trace_stride must be >= 1")
    if cfg.dataset == "two-sample":
        if cfg.d < 1:
            raise ConfigError(f"{origin}: two-sample dataset needs d >= 1")
        if cfg.mu <= 0:
            raise ConfigError(f"{origin}: two-sample dataset needs mu > 0")
    elif not (cfg.dataset.startswith("csv:") or cfg.dataset.startswith("idx:")):
        raise ConfigError(
            f"{origin}: dataset must be 'two-sample', 'csv:PATH', or "
            f"'idx:IMAGES,LABELS,CLASS_A,CLASS_B[,LIMIT]', got {cfg.dataset!r}")
    if not 1 <= cfg.k:
        raise ConfigError(f"{origin}: kernel size k must be >= 1")
    return cfg


def dataset_from_config(cfg: RunConfig) -> Dataset:
    if cfg.dataset == "two-sample":
        return make_two_sample(cfg.d, cfg.mu)
    if cfg.dataset.startswith("csv:"):
        return load_csv_dataset(cfg.dataset[4:])
    if cfg.dataset.startswith("idx:"):
        parts = cfg.dataset[4:].split(",")
        if len(parts) not in (4, 5):
            raise ConfigError(f"bad idx dataset spec {cfg.dataset!r}")
        limit = int(parts[4]) if len(parts) == 5 else None
        return load_idx_pair(parts[0], parts[1], int(parts[2]), int(parts[3]),
                             limit=limit, seed=cfg.seed)
    raise ConfigError(f"unsupported dataset {cfg.dataset!r}")
