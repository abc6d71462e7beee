"""Backend selection for the metric kernels.

The compiled extension is preferred when importable; the numpy implementation
is the fallback.  ``CAT0PROX_BACKEND=pure`` (or ``compiled``) forces a choice
at import time, and :func:`use_backend` switches at runtime (used by the
benchmark and the backend-parity tests).
"""

import os

from . import _kernels_py

EUCLIDEAN = _kernels_py.EUCLIDEAN
HYPERBOLOID = _kernels_py.HYPERBOLOID
SPIDER = _kernels_py.SPIDER

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None

_impl = None
backend_name = None


def available_backends():
    names = ["pure"]
    if _kernels_c is not None:
        names.append("compiled")
    return names


def use_backend(name):
    """Select the kernel implementation: 'pure', 'compiled', or 'auto'."""
    global _impl, backend_name
    if name == "auto":
        name = "compiled" if _kernels_c is not None else "pure"
    if name == "pure":
        _impl = _kernels_py
    elif name == "compiled":
        if _kernels_c is None:
            raise RuntimeError("compiled kernel extension is not available")
        _impl = _kernels_c
    else:
        raise ValueError(f"unknown backend {name!r}")
    backend_name = name
    return name


use_backend(os.environ.get("CAT0PROX_BACKEND", "auto"))


def dist_scalar(kind, x, y):
    return _impl.dist_scalar(kind, x, y)


def geodesic_scalar(kind, x, y, t):
    return _impl.geodesic_scalar(kind, x, y, t)


def dist_rows(kind, X, Y):
    return _impl.dist_rows(kind, X, Y)


def dist_one_many(kind, x, Y):
    return _impl.dist_one_many(kind, x, Y)


def dist_sq_block_accum(kind, A, B, acc):
    return _impl.dist_sq_block_accum(kind, A, B, acc)


def max_pairwise_sq(kind, X):
    return _impl.max_pairwise_sq(kind, X)


def geodesic_rows(kind, X, Y, T):
    return _impl.geodesic_rows(kind, X, Y, T)
