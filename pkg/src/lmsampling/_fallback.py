"""Pure-numpy versions of the compiled kernels.

The recipe and summation order match the extension; numpy's vectorised
``log``/``cos`` may differ from the C library by one ulp, so the two backends
agree to rounding rather than bit for bit.
"""
from __future__ import annotations

import numpy as np

from .rng import noise_field

# innovations materialised per chunk: rows * (m+1) doubles
_CHUNK_ELEMS = 1 << 22


def ma_at_indices(psi, indices, key, scale):
    psi = np.ascontiguousarray(psi, dtype=np.float64)
    idx = np.ascontiguousarray(indices, dtype=np.int64)
    m1 = psi.shape[0]
    out = np.empty(idx.shape[0], dtype=np.float64)
    lags = np.arange(m1, dtype=np.int64)
    rows = max(1, _CHUNK_ELEMS // m1)
    for start in range(0, idx.shape[0], rows):
        blk = idx[start:start + rows]
        eps = _window_noise(key, blk, m1)[lags[:, None], np.arange(blk.shape[0])]
        acc = np.zeros(blk.shape[0])
        for j in range(m1):
            acc += psi[j] * eps[j]
        out[start:start + rows] = scale * acc
    return out


class _Windows:
    """Innovations on the union of windows [t - m, t], merged."""

    def __init__(self, noise, base):
        self.noise = noise
        self.base = base  # flat offset of eps(t) for each column

    def __getitem__(self, key):
        lag, col = key
        return self.noise[self.base[col] - lag]


def _window_noise(key, blk, m1):
    starts = blk - (m1 - 1)
    new = np.ones(blk.shape[0], dtype=bool)
    new[1:] = starts[1:] > blk[:-1]
    group = np.cumsum(new) - 1
    g_start = starts[new]
    last = np.append(np.flatnonzero(new)[1:] - 1, blk.shape[0] - 1)
    lens = blk[last] - g_start + 1
    offsets = np.concatenate(([0], np.cumsum(lens)[:-1]))
    shift = np.repeat(g_start - offsets, lens)
    positions = np.arange(int(lens.sum()), dtype=np.int64) + shift
    noise = noise_field(key, positions)
    base = offsets[group] + (blk - g_start[group])
    return _Windows(noise, base)
