"""Target image preparation and synthetic test targets.

Prepared targets follow the inverted convention: image black (desired
shadow, i.e. high pressure) maps to 1, white to 0.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .optimize import TargetImage

__all__ = ["load_grayscale", "prepare_target", "checkerboard"]


def load_grayscale(path, allow_convert: bool = False) -> np.ndarray:
    """Image file as floats in [0, 1]; P5 graymaps and PNGs supported."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        from .formats import read_pgm

        return read_pgm(path)
    img = Image.open(path)
    if img.mode not in ("L", "I;16", "I") and not allow_convert:
        raise ValueError(
            f"{path.name} is not grayscale; pass the conversion flag to convert"
        )
    img = img.convert("L") if img.mode not in ("L",) else img
    return np.asarray(img, dtype=np.float64) / 255.0


def prepare_target(gray: np.ndarray, nx: int, ny: int) -> TargetImage:
    """Invert and bicubic-resize a [0, 1] grayscale image to the plane size."""
    gray = np.asarray(gray, dtype=np.float64)
    inverted = 1.0 - gray
    if inverted.shape != (ny, nx):
        img = Image.fromarray(inverted.astype(np.float32), mode="F")
        img = img.resize((nx, ny), resample=Image.BICUBIC)
        inverted = np.asarray(img, dtype=np.float64)
    return TargetImage(np.clip(inverted, 0.0, 1.0))


def checkerboard(nx: int = 192, ny: int = 192, cells: int = 8) -> TargetImage:
    """cells x cells checkerboard in the inverted convention (1 = shadow)."""
    iy, ix = np.indices((ny, nx))
    cw_x = nx // cells
    cw_y = ny // cells
    board = ((ix // cw_x + iy // cw_y) % 2).astype(np.float64)
    return TargetImage(board)
