"""Kernel backend selection and thread control.

The compiled extension is used when importable; otherwise the NumPy versions
take over. ``PERFHOM_BACKEND=python`` forces the fallback.
"""
import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_THREADS = 1


def _select():
    if os.environ.get("PERFHOM_BACKEND", "").lower() == "python" or _compiled is None:
        return _kernels_py, "python"
    return _compiled, "cython"


_impl, BACKEND = _select()


def use_backend(name):
    """Switch between ``"cython"`` and ``"python"`` kernels at runtime."""
    global _impl, BACKEND
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _impl, BACKEND = _compiled, "cython"
    elif name == "python":
        _impl, BACKEND = _kernels_py, "python"
    else:
        raise ValueError(f"unknown backend {name!r}")


def compiled_available():
    return _compiled is not None


def set_num_threads(n):
    global _THREADS
    _THREADS = max(1, int(n))


def get_num_threads():
    return _THREADS


def threads_from_env(default=1):
    raw = os.environ.get("PERFHOM_THREADS")
    return int(raw) if raw else default


def face_laplacian(u, mask, comp, periodic, inv_h2, out):
    _impl.face_laplacian(u, mask, comp, periodic, inv_h2, out, _THREADS)
    return out


def divergence(u0, u1, u2, periodic, inv_h, out):
    _impl.divergence(u0, u1, u2, periodic, inv_h, out, _THREADS)
    return out


def gradient(p, mask, comp, periodic, inv_h, out):
    _impl.gradient(p, mask, comp, periodic, inv_h, out, _THREADS)
    return out


def convection(a0, a1, a2, v, mask, comp, periodic, inv_h, out):
    _impl.convection(a0, a1, a2, v, mask, comp, periodic, inv_h, out, _THREADS)
    return out


def dot(x, y):
    return _impl.dot(np.ascontiguousarray(x).ravel(), np.ascontiguousarray(y).ravel())
