"""8-bit RGB image reading and writing (PNG and binary PPM)."""

from __future__ import annotations

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataFormatError

_CONVERTIBLE = {"RGB", "L", "P", "RGBA", "LA", "1"}


def read_image(path) -> np.ndarray:
    """Load an image as a float64 (h, w, 3) array in [0, 255]."""
    try:
        img = Image.open(path)
    except (UnidentifiedImageError, OSError) as exc:
        raise DataFormatError(f"{path}: cannot read image ({exc})") from exc
    if img.mode not in _CONVERTIBLE:
        raise DataFormatError(f"{path}: mode {img.mode} is not 8-bit RGB")
    arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    return arr


def quantize(img: np.ndarray) -> np.ndarray:
    """Clip to [0, 255] and round half away from zero to uint8."""
    return np.floor(np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)


def write_image(path, img: np.ndarray) -> None:
    """Write a float image (quantized) or a uint8 array as PNG or PPM,
    chosen by extension."""
    if img.dtype != np.uint8:
        img = quantize(img)
    pil = Image.fromarray(img, mode="RGB")
    name = str(path).lower()
    fmt = "PPM" if name.endswith((".ppm", ".pnm")) else "PNG"
    pil.save(path, format=fmt)
