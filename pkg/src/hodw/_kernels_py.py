"""Pure-numpy kernels, the fallback when the compiled extension is absent.

Same signatures and (up to summation order in ``ssd_window``) the same
results as ``_kernels.pyx``. The butterfly pairing in ``fwht_inplace`` and
the accumulation order in ``scatter_groups`` match the compiled code
exactly, so those two are bit-identical across backends.
"""

from __future__ import annotations

import numpy as np


def fwht_inplace(a: np.ndarray) -> None:
    """In-place unnormalized Walsh-Hadamard transform of each row of a
    C-contiguous (rows, n) float64 array; n must be a power of two."""
    rows, n = a.shape
    h = 1
    while h < n:
        b = a.reshape(rows * (n // (2 * h)), 2 * h)
        x = b[:, :h].copy()
        y = b[:, h:].copy()
        b[:, :h] = x + y
        b[:, h:] = x - y
        h *= 2


def ssd_window(img: np.ndarray, ar: int, ac: int, r0: int, r1: int,
               c0: int, c1: int, p: int) -> np.ndarray:
    """SSD between the patch at (ar, ac) and every patch with top-left in
    [r0, r1) x [c0, c1)."""
    ref = img[ar:ar + p, ac:ac + p, :]
    out = np.empty((r1 - r0, c1 - c0), dtype=np.float64)
    for i in range(r0, r1):
        band = img[i:i + p, c0:c1 + p - 1, :]
        wins = np.lib.stride_tricks.sliding_window_view(band, (p, p, 3))
        out[i - r0, :] = ((wins[0, :, 0] - ref) ** 2).sum(axis=(1, 2, 3))
    return out


def gather_groups(img: np.ndarray, rows: np.ndarray, cols: np.ndarray,
                  p: int) -> np.ndarray:
    ng, nl = rows.shape
    out = np.empty((ng, p, p, 3, nl), dtype=np.float64)
    for g in range(ng):
        for l in range(nl):
            r, c = rows[g, l], cols[g, l]
            out[g, :, :, :, l] = img[r:r + p, c:c + p, :]
    return out


def scatter_groups(num: np.ndarray, den: np.ndarray, rows: np.ndarray,
                   cols: np.ndarray, tens: np.ndarray) -> None:
    ng, nl = rows.shape
    p = tens.shape[1]
    for g in range(ng):
        for l in range(nl):
            r, c = rows[g, l], cols[g, l]
            num[r:r + p, c:c + p, :] += tens[g, :, :, :, l]
            den[r:r + p, c:c + p, :] += 1.0
