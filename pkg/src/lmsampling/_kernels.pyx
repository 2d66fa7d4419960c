# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: noise field and moving-average evaluation at indices.

Built with -ffp-contract=off so the accumulation is the same sequence of
IEEE operations as the numpy fallback in ``_fallback.py``.
"""
import numpy as np

from libc.math cimport sqrt, log, cos
from libc.stdint cimport uint64_t, int64_t
from libc.string cimport memmove

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _normal(uint64_t key, int64_t pos) noexcept nogil:
    cdef uint64_t k = <uint64_t>pos
    cdef uint64_t a = _mix64(key + (2 * k + 1) * GOLDEN)
    cdef uint64_t b = _mix64(key + (2 * k + 2) * GOLDEN)
    cdef double u1 = (<double>(a >> 11) + 0.5) * INV53
    cdef double u2 = <double>(b >> 11) * INV53
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


def noise_field(uint64_t key, const int64_t[::1] positions):
    cdef Py_ssize_t i, n = positions.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _normal(key, positions[i])
    return out


def ma_at_indices(const double[::1] psi, const int64_t[::1] indices,
                  uint64_t key, double scale):
    """X[i] = scale * sum_j psi[j] * eps(indices[i] - j), j ascending.

    ``indices`` must be strictly increasing.  A window of the last m+1
    innovations is kept and shifted, so dense index sets cost O(n m)
    multiply-adds and O(n) noise evaluations.
    """
    cdef Py_ssize_t n = indices.shape[0]
    cdef Py_ssize_t m1 = psi.shape[0]
    cdef Py_ssize_t i, j, shift
    cdef int64_t t, prev = 0
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    buf_arr = np.empty(m1, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] buf = buf_arr
    cdef bint have = False
    with nogil:
        for i in range(n):
            t = indices[i]
            # buf[k] holds eps(t - (m1 - 1) + k)
            if have and t - prev < m1:
                shift = <Py_ssize_t>(t - prev)
                memmove(&buf[0], &buf[shift], (m1 - shift) * sizeof(double))
                for j in range(m1 - shift, m1):
                    buf[j] = _normal(key, t - (m1 - 1) + j)
            else:
                for j in range(m1):
                    buf[j] = _normal(key, t - (m1 - 1) + j)
            have = True
            prev = t
            acc = 0.0
            for j in range(m1):
                acc = acc + psi[j] * buf[m1 - 1 - j]
            o[i] = scale * acc
    return out
