"""Structurally random Walsh-Hadamard sensing operator.

Each color channel is measured as y_C = sqrt(N/M) * P_C * (H/sqrt(N)) *
diag(sign_C) * x_C, where H is the Sylvester-ordered Hadamard matrix of
size N (smallest power of two >= h*w, zero-padded), sign_C is an i.i.d.
+-1 scrambling and P_C selects a sorted uniform random M-subset of rows.
The three channels draw independent randomness keyed by (seed, channel).

The realized sign/row sequences travel inside the measurement file, so
decoding never has to reproduce the generator.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import DataFormatError

_MAGIC = b"HODWMEAS"
_VERSION = 1
_CHANNELS = ("R", "G", "B")


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def fwht(v: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform (Sylvester ordering) of the
    last axis; fwht(fwht(v)) == len(v) * v. Length must be a power of two."""
    a = np.array(v, dtype=np.float64, order="C")
    n = a.shape[-1]
    if n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    flat = a.reshape(-1, n)
    kernels.fwht_inplace(flat)
    return a


@dataclass(frozen=True)
class SensingOperator:
    h: int
    w: int
    subrate: float
    seed: int
    n_pad: int
    m: int
    signs: np.ndarray  # (3, n_pad) float64 of +-1, channel order R,G,B
    rows: np.ndarray   # (3, m) int64, sorted unique per channel

    @property
    def n_pixels(self) -> int:
        return self.h * self.w


@dataclass(frozen=True)
class MeasurementSet:
    y: np.ndarray  # (3, m) float64, channel order R,G,B
    h: int
    w: int
    subrate: float
    seed: int


def build_operator(h: int, w: int, subrate: float, seed: int) -> SensingOperator:
    if h < 1 or w < 1:
        raise ValueError("image dimensions must be positive")
    if not 0.0 < subrate <= 1.0:
        raise ValueError(f"subrate must be in (0, 1], got {subrate}")
    n = h * w
    n_pad = _next_pow2(n)
    m = int(np.floor(subrate * n))
    if m < 1:
        raise ValueError("subrate too small: zero measurements")
    signs = np.empty((3, n_pad), dtype=np.float64)
    rows = np.empty((3, m), dtype=np.int64)
    for c in range(3):
        rng = np.random.Generator(np.random.Philox(key=[seed, c]))
        signs[c] = rng.integers(0, 2, n_pad).astype(np.float64) * 2.0 - 1.0
        rows[c] = np.sort(rng.choice(n_pad, size=m, replace=False))
    return SensingOperator(h=h, w=w, subrate=float(subrate), seed=int(seed),
                           n_pad=n_pad, m=m, signs=signs, rows=rows)


def _check_image(op: SensingOperator, x: np.ndarray) -> None:
    if x.shape != (op.h, op.w, 3):
        raise ValueError(f"image shape {x.shape} does not match operator "
                         f"({op.h}, {op.w}, 3)")


def sense_channels(op: SensingOperator, x: np.ndarray) -> np.ndarray:
    """Raw forward map: (h, w, 3) image to (3, m) measurement array."""
    n = op.n_pixels
    z = np.zeros((3, op.n_pad), dtype=np.float64)
    z[:, :n] = np.moveaxis(np.asarray(x, dtype=np.float64), 2, 0).reshape(3, n)
    z *= op.signs
    kernels.fwht_inplace(z)
    z *= 1.0 / np.sqrt(op.n_pad)
    return np.take_along_axis(z, op.rows, axis=1) * np.sqrt(op.n_pad / op.m)


def adjoint_channels(op: SensingOperator, y: np.ndarray) -> np.ndarray:
    """Raw adjoint map: (3, m) measurement array to (h, w, 3) image."""
    z = np.zeros((3, op.n_pad), dtype=np.float64)
    np.put_along_axis(z, op.rows, y, axis=1)
    kernels.fwht_inplace(z)
    z *= 1.0 / np.sqrt(op.n_pad)
    z *= op.signs
    x = z[:, :op.n_pixels] * np.sqrt(op.n_pad / op.m)
    return np.moveaxis(x.reshape(3, op.h, op.w), 0, 2).copy()


def sense(op: SensingOperator, x: np.ndarray) -> MeasurementSet:
    """Apply the operator: flatten row-major, pad, scramble, transform,
    select rows."""
    _check_image(op, x)
    return MeasurementSet(y=sense_channels(op, x), h=op.h, w=op.w,
                          subrate=op.subrate, seed=op.seed)


def adjoint(op: SensingOperator, meas: MeasurementSet) -> np.ndarray:
    """Exact adjoint of :func:`sense` under the standard inner product."""
    if meas.y.shape != (3, op.m):
        raise ValueError(f"measurement shape {meas.y.shape} does not match "
                         f"operator (3, {op.m})")
    return adjoint_channels(op, meas.y)


def write_measurements(path, op: SensingOperator, meas: MeasurementSet) -> None:
    """Binary little-endian measurement file; see the format doc in the
    README. Sign bit 1 means +1, packed LSB-first."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IIIQdII", _VERSION, op.h, op.w, op.seed,
                            op.subrate, op.m, op.n_pad))
        for c in range(3):
            bits = (op.signs[c] > 0).astype(np.uint8)
            f.write(np.packbits(bits, bitorder="little").tobytes())
            f.write(op.rows[c].astype("<u4").tobytes())
            f.write(meas.y[c].astype("<f8").tobytes())


def read_measurements(path) -> tuple[SensingOperator, MeasurementSet]:
    """Parse a measurement file, rebuilding the operator from the stored
    sign/row realizations."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 8 or data[:8] != _MAGIC:
        raise DataFormatError(f"{path}: bad magic, not a measurement file")
    header = struct.Struct("<IIIQdII")
    if len(data) < 8 + header.size:
        raise DataFormatError(f"{path}: truncated header")
    version, h, w, seed, subrate, m, n_pad = header.unpack_from(data, 8)
    if version != _VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    if h < 1 or w < 1 or not 0.0 < subrate <= 1.0 or m < 1 or n_pad < 1:
        raise DataFormatError(f"{path}: invalid header fields")
    if n_pad & (n_pad - 1) or n_pad < h * w or n_pad >= 2 * max(h * w, 1):
        raise DataFormatError(f"{path}: inconsistent padded length {n_pad}")
    nbytes_sign = (n_pad + 7) // 8
    per_channel = nbytes_sign + 4 * m + 8 * m
    expected = 8 + header.size + 3 * per_channel
    if len(data) != expected:
        raise DataFormatError(f"{path}: size {len(data)} != expected {expected}")
    signs = np.empty((3, n_pad), dtype=np.float64)
    rows = np.empty((3, m), dtype=np.int64)
    y = np.empty((3, m), dtype=np.float64)
    off = 8 + header.size
    for c in range(3):
        raw = np.frombuffer(data, dtype=np.uint8, count=nbytes_sign, offset=off)
        bits = np.unpackbits(raw, count=n_pad, bitorder="little")
        signs[c] = bits.astype(np.float64) * 2.0 - 1.0
        off += nbytes_sign
        rc = np.frombuffer(data, dtype="<u4", count=m, offset=off).astype(np.int64)
        if rc.max(initial=0) >= n_pad or np.any(np.diff(rc) <= 0):
            raise DataFormatError(f"{path}: channel {_CHANNELS[c]} row index "
                                  "list not strictly increasing in range")
        rows[c] = rc
        off += 4 * m
        y[c] = np.frombuffer(data, dtype="<f8", count=m, offset=off)
        off += 8 * m
    if not np.all(np.isfinite(y)):
        raise DataFormatError(f"{path}: non-finite measurement values")
    op = SensingOperator(h=h, w=w, subrate=subrate, seed=seed, n_pad=n_pad,
                         m=m, signs=signs, rows=rows)
    meas = MeasurementSet(y=y, h=h, w=w, subrate=subrate, seed=seed)
    return op, meas
