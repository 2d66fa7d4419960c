"""Select the compiled kernels when available, else the numpy fallback.

Set ``LMSAMPLING_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback
from . import rng as _rng

NAME = "python"
_ext = None
if os.environ.get("LMSAMPLING_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _ext
        NAME = "compiled"
    except ImportError:  # extension not built
        _ext = None


def noise_field(key, positions, backend=None):
    pos = np.ascontiguousarray(positions, dtype=np.int64)
    if _use_ext(backend):
        return _ext.noise_field(int(key) & _rng.MASK64, pos.ravel()).reshape(pos.shape)
    return _rng.noise_field(key, pos)


def ma_at_indices(psi, indices, key, scale=1.0, backend=None):
    psi = np.ascontiguousarray(psi, dtype=np.float64)
    idx = np.ascontiguousarray(indices, dtype=np.int64)
    if idx.size == 0:
        return np.empty(0)
    if _use_ext(backend):
        return _ext.ma_at_indices(psi, idx, int(key) & _rng.MASK64, float(scale))
    return _fallback.ma_at_indices(psi, idx, key, scale)


def _use_ext(backend):
    if backend is None:
        return _ext is not None
    if backend == "compiled":
        if _ext is None:
            raise ImportError("compiled kernels are not built")
        return True
    if backend == "python":
        return False
    raise ValueError(f"unknown backend {backend!r}")
