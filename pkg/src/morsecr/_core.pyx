# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled rotation kernels: batched Rodrigues maps and chain products.

Mirrors ``morsecr._purepy``; selected at import time by ``morsecr._backend``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()

cdef double SMALL_ANGLE = 1e-6


cdef inline void _rodrigues_one(const double* w, double* r) noexcept nogil:
    cdef double n2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
    cdef double n = sqrt(n2)
    cdef double a, b
    if n < SMALL_ANGLE:
        a = 1.0 - n2 / 6.0
        b = 0.5 - n2 / 24.0
    else:
        a = sin(n) / n
        b = (1.0 - cos(n)) / n2
    cdef double x = w[0], y = w[1], z = w[2]
    r[0] = 1.0 + b * (-z * z - y * y)
    r[1] = -a * z + b * x * y
    r[2] = a * y + b * x * z
    r[3] = a * z + b * x * y
    r[4] = 1.0 + b * (-z * z - x * x)
    r[5] = -a * x + b * y * z
    r[6] = -a * y + b * x * z
    r[7] = a * x + b * y * z
    r[8] = 1.0 + b * (-y * y - x * x)


cdef inline void _mat3_mul(const double* p, const double* q, double* out) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += p[3 * i + k] * q[3 * k + j]
            out[3 * i + j] = acc


def rodrigues(w):
    """Rotation matrix for a single axis-angle vector ``w`` (radians)."""
    return rodrigues_batch(np.asarray(w, dtype=np.float64).reshape(1, 3))[0]


def rodrigues_batch(w):
    """Rotation matrices for (M, 3) axis-angle rows; returns (M, 3, 3)."""
    cdef const double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t m = wv.shape[0], i
    out = np.empty((m, 3, 3))
    cdef double[:, :, ::1] ov = out
    with nogil:
        for i in range(m):
            _rodrigues_one(&wv[i, 0], &ov[i, 0, 0])
    return out


def rotation_chains(thetas):
    """Cumulative rotation products along a joint chain.

    Accepts (N, 3) for one configuration or (B, N, 3) for a batch; returns
    the matching (N, 3, 3) / (B, N, 3, 3) array of products R_0 R_1 ... R_i.
    """
    arr = np.asarray(thetas, dtype=np.float64)
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    cdef const double[:, :, ::1] tv = np.ascontiguousarray(arr)
    cdef Py_ssize_t b = tv.shape[0], n = tv.shape[1], ib, i
    out = np.empty((b, n, 3, 3))
    cdef double[:, :, :, ::1] ov = out
    cdef double rot[9]
    cdef double acc[9]
    with nogil:
        for ib in range(b):
            _rodrigues_one(&tv[ib, 0, 0], &ov[ib, 0, 0, 0])
            for i in range(1, n):
                _rodrigues_one(&tv[ib, i, 0], rot)
                _mat3_mul(&ov[ib, i - 1, 0, 0], rot, acc)
                ov[ib, i, 0, 0] = acc[0]
                ov[ib, i, 0, 1] = acc[1]
                ov[ib, i, 0, 2] = acc[2]
                ov[ib, i, 1, 0] = acc[3]
                ov[ib, i, 1, 1] = acc[4]
                ov[ib, i, 1, 2] = acc[5]
                ov[ib, i, 2, 0] = acc[6]
                ov[ib, i, 2, 1] = acc[7]
                ov[ib, i, 2, 2] = acc[8]
    return out[0] if single else out
