"""Weighted-sparsity filters applied to group core tensors.

The weighting solves a per-coefficient quadratic, so at run time it
reduces to one of three scalar shrinkage maps controlled by a noise-level
parameter sigma_star (soft shrinkage, a Wiener-style gain, or hard
thresholding), or to the oracle MMSE gain a0^2/(a0^2 + sigma^2) when the
true coefficients are available. The quadratic-penalty scale cancels out
of all four forms, so no extra multiplier exists at run time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("soft", "wiener", "hard", "oracle")

# Tuned noise levels per (kind, subrate); nearest listed subrate is used,
# ties rounding down.
_SIGMA_SUBRATES = (0.1, 0.2, 0.3, 0.4)
_SIGMA_TABLE = {
    "soft": (10 ** 0.8, 10 ** 0.6, 10 ** 0.4, 10 ** 0.4),
    "wiener": (10 ** 1.2, 10 ** 0.8, 10 ** 0.6, 10 ** 0.6),
    "hard": (10 ** 1.6, 10 ** 1.2, 10 ** 1.0, 10 ** 1.0),
}


@dataclass(frozen=True)
class WeightDesign:
    """Filter selection: kind in {soft, wiener, hard, oracle}.

    sigma_star drives the three practical kinds (None means look up the
    default for the measurement subrate). The oracle kind carries the true
    core tensors and the current error standard deviation instead.
    """
    kind: str
    sigma_star: float | None = None
    alpha0: np.ndarray | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        if self.sigma_star is not None and self.sigma_star < 0:
            raise ValueError("sigma_star must be >= 0")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def sigma_star_default(kind: str, subrate: float) -> float:
    """Tuned sigma_star for a practical kind at the nearest listed subrate
    (ties round down)."""
    if kind == "oracle":
        raise ValueError("the oracle design has no sigma_star default")
    if kind not in _SIGMA_TABLE:
        raise ValueError(f"unknown design kind {kind!r}")
    diffs = [abs(subrate - s) for s in _SIGMA_SUBRATES]
    return _SIGMA_TABLE[kind][int(np.argmin(diffs))]


def filter_soft(r, sigma_star):
    """sign(r) * max(|r| - sigma_star, 0)."""
    r = np.asarray(r, dtype=np.float64)
    return np.sign(r) * np.maximum(np.abs(r) - sigma_star, 0.0)


def filter_wiener(r, sigma_star):
    """r * max(r^2 - sigma_star^2, 0) / r^2, with 0 at r = 0.

    The gain is computed as max(t - s, 0)/t with t = r^2 so that
    sigma_star = 0 gives gain exactly 1 and the filter is the identity.
    """
    r = np.asarray(r, dtype=np.float64)
    t = r * r
    safe = np.where(t > 0.0, t, 1.0)
    gain = np.maximum(t - sigma_star * sigma_star, 0.0) / safe
    return np.where(t > 0.0, r * gain, 0.0)


def filter_hard(r, sigma_star):
    """r where |r| > sigma_star (strictly), else 0."""
    r = np.asarray(r, dtype=np.float64)
    return np.where(np.abs(r) > sigma_star, r, 0.0)


def filter_oracle(r, alpha0, sigma_t):
    """MMSE gain a0^2 / (a0^2 + sigma_t^2) applied to r; defined as 0 when
    both a0 and sigma_t vanish."""
    r = np.asarray(r, dtype=np.float64)
    a2 = np.asarray(alpha0, dtype=np.float64) ** 2
    denom = a2 + sigma_t * sigma_t
    gain = np.where(denom > 0.0, a2 / np.where(denom > 0.0, denom, 1.0), 0.0)
    return gain * r


def apply_design(design: WeightDesign, r: np.ndarray) -> np.ndarray:
    """Apply the design's scalar filter to every coefficient of every
    group core tensor."""
    if design.kind == "soft":
        return filter_soft(r, design.sigma_star)
    if design.kind == "wiener":
        return filter_wiener(r, design.sigma_star)
    if design.kind == "hard":
        return filter_hard(r, design.sigma_star)
    if design.alpha0 is None or design.sigma is None:
        raise ValueError("oracle design requires alpha0 and sigma")
    if design.alpha0.shape != np.shape(r):
        raise ValueError(f"alpha0 shape {design.alpha0.shape} does not "
                         f"match r {np.shape(r)}")
    return filter_oracle(r, design.alpha0, design.sigma)


def estimate_error_std(r: np.ndarray, alpha0: np.ndarray) -> tuple[float, float]:
    """Mean and standard deviation of (r - alpha0) over all coefficients."""
    if np.shape(r) != np.shape(alpha0):
        raise ValueError("shape mismatch between r and alpha0")
    e = np.asarray(r, dtype=np.float64) - np.asarray(alpha0, dtype=np.float64)
    return float(e.mean()), float(e.std())
