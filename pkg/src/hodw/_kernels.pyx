# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Walsh-Hadamard butterflies, block-match SSD,
patch gather/scatter. Signatures mirror ``_kernels_py``."""

import numpy as np


def fwht_inplace(double[:, ::1] a):
    """In-place unnormalized Walsh-Hadamard transform of each row.

    Row length must be a power of two (checked by the caller)."""
    cdef Py_ssize_t rows = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t b, i, j, h = 1
    cdef double x, y
    while h < n:
        for b in range(rows):
            for i in range(0, n, 2 * h):
                for j in range(i, i + h):
                    x = a[b, j]
                    y = a[b, j + h]
                    a[b, j] = x + y
                    a[b, j + h] = x - y
        h *= 2


def ssd_window(const double[:, :, ::1] img, Py_ssize_t ar, Py_ssize_t ac,
               Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1,
               Py_ssize_t p):
    """Sum of squared differences between the patch at (ar, ac) and every
    patch whose top-left corner lies in [r0, r1) x [c0, c1)."""
    out = np.empty((r1 - r0, c1 - c0), dtype=np.float64)
    cdef double[:, ::1] d = out
    cdef Py_ssize_t i, j, di, dj, ch
    cdef double acc, diff
    for i in range(r0, r1):
        for j in range(c0, c1):
            acc = 0.0
            for di in range(p):
                for dj in range(p):
                    for ch in range(3):
                        diff = img[ar + di, ac + dj, ch] - img[i + di, j + dj, ch]
                        acc += diff * diff
            d[i - r0, j - c0] = acc
    return out


def gather_groups(const double[:, :, ::1] img, const long[:, ::1] rows,
                  const long[:, ::1] cols, Py_ssize_t p):
    """Stack patch groups into a (G, p, p, 3, L) array."""
    cdef Py_ssize_t ng = rows.shape[0], nl = rows.shape[1]
    out = np.empty((ng, p, p, 3, nl), dtype=np.float64)
    cdef double[:, :, :, :, ::1] t = out
    cdef Py_ssize_t g, l, i, j, ch, r, c
    for g in range(ng):
        for l in range(nl):
            r = rows[g, l]
            c = cols[g, l]
            for i in range(p):
                for j in range(p):
                    for ch in range(3):
                        t[g, i, j, ch, l] = img[r + i, c + j, ch]
    return out


def scatter_groups(double[:, :, ::1] num, double[:, :, ::1] den,
                   const long[:, ::1] rows, const long[:, ::1] cols,
                   const double[:, :, :, :, ::1] tens):
    """Scatter-add group tensors into ``num`` and unit counts into ``den``.

    Accumulation order is fixed (group, member, raster) so results are
    reproducible and match the numpy fallback."""
    cdef Py_ssize_t ng = rows.shape[0], nl = rows.shape[1], p = tens.shape[1]
    cdef Py_ssize_t g, l, i, j, ch, r, c
    for g in range(ng):
        for l in range(nl):
            r = rows[g, l]
            c = cols[g, l]
            for i in range(p):
                for j in range(p):
                    for ch in range(3):
                        num[r + i, c + j, ch] += tens[g, i, j, ch, l]
                        den[r + i, c + j, ch] += 1.0
