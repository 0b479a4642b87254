"""Backend selection for the hot run loops.

The compiled extension (pdx._kernels, Cython) is preferred; the pure-numpy
fallback (pdx._kernels_py) is used when the build did not produce it.  Both
expose batch_run and two_sample_run with identical signatures and status
codes.  quad_run (the generic-kernel batch quadratic loop) is matrix-product
bound and always uses the numpy implementation.

``python -m benchmarks.bench_backends`` (repo checkout) times the two
backends side by side.
"""

from __future__ import annotations

from . import _kernels_py

try:  # pragma: no cover - exercised implicitly by whichever env runs the tests
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover
    _impl = _kernels_py
    BACKEND = "python"

SEPARATED = _kernels_py.SEPARATED
MAX_ITERS = _kernels_py.MAX_ITERS
STALLED = _kernels_py.STALLED
DIVERGED = _kernels_py.DIVERGED

_STATUS_NAMES = {SEPARATED: "separated", MAX_ITERS: "max_iters",
                 STALLED: "stalled", DIVERGED: "diverged"}

batch_run = _impl.batch_run
two_sample_run = _impl.two_sample_run
quad_run = _kernels_py.quad_run


def status_name(code: int) -> str:
    return _STATUS_NAMES[code]


def backends() -> dict:
    """Name -> module for every available backend (for tests/benchmarks)."""
    out = {"python": _kernels_py}
    if BACKEND == "compiled":
        out["compiled"] = _impl
    return out
