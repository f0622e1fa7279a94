"""Per-group higher-order dictionaries learned by HOSVD.

For every anchor of the stride grid, the L most similar patches are
stacked as a (p, p, 3, L) tensor and decomposed into four orthonormal
sub-dictionaries, one per mode (patch rows, patch columns, color,
nonlocal members). The core tensors are the sparse representation:
analysis multiplies each group tensor by the transposed factors,
synthesis reconstructs groups and aggregates them back to an image.

Group transforms run batched over all groups: factors are stacked
(G, n, n) arrays and cores a single (G, p, p, 3, L) array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .grouping import anchor_grid, match_all
from .tensor import fix_signs

# A SparseRep is a (G, p, p, 3, L) float64 array of group core tensors.
SparseRep = np.ndarray


@dataclass(frozen=True)
class HigherOrderDictionary:
    """Stacked orthonormal factors plus the group geometry they were
    learned on."""
    factors: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    rows: np.ndarray        # (G, L) member top-left rows
    cols: np.ndarray        # (G, L) member top-left cols
    degenerate: np.ndarray  # (G,) pool-smaller-than-L flags
    h: int
    w: int
    p: int
    L: int

    @property
    def n_groups(self) -> int:
        return self.rows.shape[0]


def _mode_sizes(p: int, L: int) -> tuple[int, int, int, int]:
    return (p, p, 3, L)


def _batch_mode_product(t: np.ndarray, u: np.ndarray, axis: int,
                        transpose: bool) -> np.ndarray:
    """Mode product along ``axis`` (1..4 within the group tensor) with the
    per-group matrices ``u`` (G, n, n), optionally transposed."""
    moved = np.moveaxis(t, axis, 1)
    lead = moved.shape[:2]
    flat = np.ascontiguousarray(moved).reshape(lead[0], lead[1], -1)
    mat = np.swapaxes(u, 1, 2) if transpose else u
    out = mat @ flat
    out = out.reshape((lead[0], mat.shape[1]) + moved.shape[2:])
    return np.moveaxis(out, 1, axis)


def _analyze_tensors(tens: np.ndarray, factors) -> np.ndarray:
    out = tens
    for k in range(4):
        out = _batch_mode_product(out, factors[k], k + 1, transpose=True)
    return out


def _reconstruct_tensors(cores: np.ndarray, factors) -> np.ndarray:
    out = cores
    for k in range(4):
        out = _batch_mode_product(out, factors[k], k + 1, transpose=False)
    return out


def _gather(d_or_img, rows, cols, p):
    img = np.ascontiguousarray(d_or_img, dtype=np.float64)
    return kernels.gather_groups(img, rows, cols, p)


def learn_dictionary(x_ref: np.ndarray, p: int, L: int, stride: int,
                     window: int) -> tuple[HigherOrderDictionary, SparseRep]:
    """Group the reference image and HOSVD every group.

    Returns the dictionary and the core tensors of ``x_ref`` itself, which
    double as the magnitude side information for the weighted filters.
    """
    h, w = x_ref.shape[:2]
    anchors = anchor_grid(h, w, p, stride)
    rows, cols, degenerate = match_all(x_ref, anchors, window, L, p)
    tens = _gather(x_ref, rows, cols, p)

    ng = tens.shape[0]
    factors = []
    zero_group = ~tens.reshape(ng, -1).any(axis=1)
    for k, n in enumerate(_mode_sizes(p, L)):
        unf = np.ascontiguousarray(np.moveaxis(tens, k + 1, 1)).reshape(ng, n, -1)
        gram = unf @ np.swapaxes(unf, 1, 2)
        _, vecs = np.linalg.eigh(gram)
        u = fix_signs(np.ascontiguousarray(vecs[:, :, ::-1]))
        if zero_group.any():
            u[zero_group] = np.eye(n)
        factors.append(u)
    factors = tuple(factors)
    cores = _analyze_tensors(tens, factors)
    d = HigherOrderDictionary(factors=factors, rows=rows, cols=cols,
                              degenerate=degenerate, h=h, w=w, p=p, L=L)
    return d, cores


def analyze(v: np.ndarray, d: HigherOrderDictionary) -> SparseRep:
    """Core tensors of ``v`` extracted along the dictionary's groups."""
    if v.shape != (d.h, d.w, 3):
        raise ValueError(f"image shape {v.shape} does not match dictionary "
                         f"({d.h}, {d.w}, 3)")
    tens = _gather(v, d.rows, d.cols, d.p)
    return _analyze_tensors(tens, d.factors)


def synthesize(a: SparseRep, d: HigherOrderDictionary,
               fallback: np.ndarray | None = None) -> np.ndarray:
    """Reconstruct all groups from their cores and aggregate.

    The stride grid covers every pixel, so the fallback (default zeros) is
    only reachable with hand-built dictionaries.
    """
    expected = (d.n_groups,) + _mode_sizes(d.p, d.L)
    if a.shape != expected:
        raise ValueError(f"sparse rep shape {a.shape} != expected {expected}")
    tens = _reconstruct_tensors(a, d.factors)
    num = np.zeros((d.h, d.w, 3), dtype=np.float64)
    den = np.zeros((d.h, d.w, 3), dtype=np.float64)
    kernels.scatter_groups(num, den, d.rows, d.cols,
                           np.ascontiguousarray(tens))
    covered = den > 0
    if fallback is None:
        fallback = np.zeros((d.h, d.w, 3), dtype=np.float64)
    return np.where(covered, num / np.where(covered, den, 1.0), fallback)
