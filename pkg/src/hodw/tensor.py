"""Dense order-4 tensor algebra: unfolding, mode products, HOSVD.

Tensors are float64 ndarrays of shape (n1, n2, n3, n4). Linear layout is
mode-1 fastest: flat index i1 + n1*(i2 + n2*(i3 + n3*i4)). Mode arguments
are 1-based (1..4), the usual convention in multilinear algebra.
"""

from __future__ import annotations

import numpy as np

_ORDER = 4


def _check_mode(t: np.ndarray, mode: int) -> None:
    if t.ndim != _ORDER:
        raise ValueError(f"expected an order-{_ORDER} tensor, got ndim={t.ndim}")
    if not 1 <= mode <= _ORDER:
        raise ValueError(f"mode must be in 1..{_ORDER}, got {mode}")


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-k matricization: rows indexed by mode k, columns by the
    remaining modes in ascending order with the lowest mode fastest."""
    _check_mode(t, mode)
    return np.reshape(np.moveaxis(t, mode - 1, 0), (t.shape[mode - 1], -1),
                      order="F")


def fold(m: np.ndarray, mode: int, dims: tuple[int, int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold` for the given full tensor dims."""
    if len(dims) != _ORDER:
        raise ValueError("dims must have length 4")
    if not 1 <= mode <= _ORDER:
        raise ValueError(f"mode must be in 1..{_ORDER}, got {mode}")
    rest = [dims[j] for j in range(_ORDER) if j != mode - 1]
    if m.shape != (dims[mode - 1], int(np.prod(rest))):
        raise ValueError(f"matrix shape {m.shape} inconsistent with dims {dims}")
    t = np.reshape(m, [dims[mode - 1]] + rest, order="F")
    return np.moveaxis(t, 0, mode - 1)


def mode_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Mode-k product t x_k m; m has shape (new_nk, nk)."""
    _check_mode(t, mode)
    if m.ndim != 2 or m.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"matrix shape {m.shape} does not match mode-{mode} size "
            f"{t.shape[mode - 1]}")
    moved = np.moveaxis(t, mode - 1, 0)
    flat = moved.reshape(moved.shape[0], -1)
    out = (m @ flat).reshape((m.shape[0],) + moved.shape[1:])
    return np.moveaxis(out, 0, mode - 1)


def frobenius_norm(t: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.asarray(t, dtype=np.float64) ** 2)))


def fix_signs(u: np.ndarray) -> np.ndarray:
    """Resolve the sign ambiguity of each column: the largest-magnitude
    entry (first occurrence on ties) is made positive. Accepts stacked
    (..., n, n) factor arrays."""
    idx = np.abs(u).argmax(axis=-2)
    pivot = np.take_along_axis(u, idx[..., None, :], axis=-2)[..., 0, :]
    sign = np.where(pivot < 0.0, -1.0, 1.0)
    return u * sign[..., None, :]


def hosvd(t: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Full higher-order SVD.

    Returns (core, factors) where factors[k] is the square orthonormal
    matrix of left singular vectors of the mode-(k+1) unfolding, ordered by
    descending singular value with the fixed sign convention, and
    core = t x_1 factors[0].T x_2 ... x_4 factors[3].T. A zero tensor gets
    identity factors.

    Factors come from an eigendecomposition of the small mode Gram matrix;
    orthonormality (hence exact reconstruction) holds to machine precision
    regardless of the spectrum.
    """
    if t.ndim != _ORDER:
        raise ValueError(f"expected an order-{_ORDER} tensor, got ndim={t.ndim}")
    t = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor contains non-finite values")
    if not t.any():
        return t.copy(), [np.eye(n) for n in t.shape]
    factors = []
    for mode in range(1, _ORDER + 1):
        u = unfold(t, mode)
        gram = u @ u.T
        _, vecs = np.linalg.eigh(gram)
        factors.append(fix_signs(np.ascontiguousarray(vecs[:, ::-1])))
    core = t
    for mode in range(1, _ORDER + 1):
        core = mode_product(core, factors[mode - 1].T, mode)
    return core, factors


def reconstruct(core: np.ndarray, factors: list[np.ndarray]) -> np.ndarray:
    """Successive mode products core x_1 factors[0] ... x_4 factors[3]."""
    out = core
    for mode in range(1, _ORDER + 1):
        out = mode_product(out, factors[mode - 1], mode)
    return out
