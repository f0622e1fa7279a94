"""Quality and diagnostic measurements."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import hodict

HIST_BINS = 129


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for [0, 255] images, one MSE over
    all 3*h*w entries; identical images report +inf."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    mse = float(np.mean(diff ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(255.0 ** 2 / mse))


def cross_channel_correlation(x: np.ndarray) -> tuple[float, float, float]:
    """Pearson correlations (rho_RG, rho_RB, rho_GB) of the color channels."""
    chans = [np.asarray(x[:, :, c], dtype=np.float64).ravel() for c in range(3)]
    centered = []
    for name, v in zip("RGB", chans):
        c = v - v.mean()
        norm = np.linalg.norm(c)
        if norm == 0.0:
            raise ValueError(f"channel {name} is constant; correlation "
                             "undefined")
        centered.append(c / norm)
    return (float(centered[0] @ centered[1]),
            float(centered[0] @ centered[2]),
            float(centered[1] @ centered[2]))


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    mse_r: float
    mse_g: float
    mse_b: float
    rho_rg: float
    rho_rb: float
    rho_gb: float

    CSV_HEADER = "psnr_db,mse_r,mse_g,mse_b,rho_rg,rho_rb,rho_gb"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def csv_row(self) -> str:
        return ",".join(repr(v) for v in (
            self.psnr_db, self.mse_r, self.mse_g, self.mse_b,
            self.rho_rg, self.rho_rb, self.rho_gb))


def quality_report(recovered: np.ndarray, reference: np.ndarray) -> QualityReport:
    """PSNR, per-channel MSE of the pair, and channel correlations of the
    recovered image."""
    if recovered.shape != reference.shape:
        raise ValueError(f"shape mismatch {recovered.shape} vs "
                         f"{reference.shape}")
    diff = (np.asarray(recovered, dtype=np.float64)
            - np.asarray(reference, dtype=np.float64))
    mse = [float(np.mean(diff[:, :, c] ** 2)) for c in range(3)]
    rho = cross_channel_correlation(recovered)
    return QualityReport(psnr_db=psnr(recovered, reference),
                         mse_r=mse[0], mse_g=mse[1], mse_b=mse[2],
                         rho_rg=rho[0], rho_rb=rho[1], rho_gb=rho[2])


def residual_stats(r: np.ndarray, alpha0: np.ndarray):
    """Histogram (HIST_BINS bins over [-4*std, 4*std]) and moments of the
    coefficient error r - alpha0.

    Returns (counts, bin_edges, mean, std). A zero-spread residual puts all
    mass in the center bin of a unit-width grid around the mean.
    """
    if np.shape(r) != np.shape(alpha0):
        raise ValueError("shape mismatch between r and alpha0")
    e = (np.asarray(r, dtype=np.float64)
         - np.asarray(alpha0, dtype=np.float64)).ravel()
    mean = float(e.mean())
    std = float(e.std())
    if std == 0.0:
        lo, hi = mean - 0.5, mean + 0.5
    else:
        lo, hi = -4.0 * std, 4.0 * std
    counts, edges = np.histogram(e, bins=HIST_BINS, range=(lo, hi))
    return counts, edges, mean, std


def lln_diagnostic(x: np.ndarray, alpha: np.ndarray,
                   d: hodict.HigherOrderDictionary, b: np.ndarray,
                   r: np.ndarray | None = None) -> tuple[float, float]:
    """Two estimates of the per-entry residual power that should agree for
    large images: the image-domain mean square of x - alpha*D - b, and the
    coefficient-domain mean square of r - alpha with r the analysis of
    x - b."""
    if r is None:
        r = hodict.analyze(x - b, d)
    resid = x - hodict.synthesize(alpha, d) - b
    lhs = float(np.mean(resid ** 2))
    rhs = float(np.mean((r - alpha) ** 2))
    return lhs, rhs
