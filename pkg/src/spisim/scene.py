"""Target objects: a binary mask plus the signal-path channel transmittance."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pgm import read_pgm, write_pgm

DEFAULT_ETA_0 = 0.015


@dataclass(frozen=True, eq=False)
class TargetScene:
    mask: np.ndarray
    eta_0: float = DEFAULT_ETA_0

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.ndim != 2:
            raise ValueError("scene mask must be 2D")
        if not np.isin(mask, (0, 1)).all():
            raise ValueError("scene mask entries must be 0 or 1")
        if not 0.0 <= self.eta_0 <= 1.0:
            raise ValueError(f"eta_0 must lie in [0, 1], got {self.eta_0}")
        mask = mask.astype(np.uint8)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape


def _letter_a(rows: int, cols: int) -> np.ndarray:
    # Block capital A: two slanted legs meeting in a flat apex, plus a crossbar.
    mask = np.zeros((rows, cols), dtype=np.uint8)
    top = max(1, rows // 8)
    bottom = rows - max(1, rows // 8)
    height = bottom - top
    stroke = max(1, round(cols / 8))
    cx = (cols - 1) / 2
    half_top = stroke / 2
    half_bottom = (cols - 2 * max(1, cols // 8)) / 2
    bar = top + round(0.6 * (height - 1))
    for r in range(top, bottom):
        t = (r - top) / max(height - 1, 1)
        half = half_top + t * (half_bottom - half_top)
        left = int(round(cx - half))
        right = cols - 1 - left
        mask[r, max(left, 0) : min(left + stroke, cols)] = 1
        mask[r, max(right - stroke + 1, 0) : min(right + 1, cols)] = 1
        if r < top + stroke or bar <= r < bar + stroke:
            mask[r, max(left, 0) : min(right + 1, cols)] = 1
    return mask


def builtin_scene(name: str, rows: int, cols: int, eta_0: float = DEFAULT_ETA_0) -> TargetScene:
    """``letter_A``, ``full_bright`` (all ones) or ``empty`` (all zeros)."""
    if rows < 1 or cols < 1:
        raise ValueError("frame dimensions must be positive")
    if name == "full_bright":
        mask = np.ones((rows, cols), dtype=np.uint8)
    elif name == "empty":
        mask = np.zeros((rows, cols), dtype=np.uint8)
    elif name == "letter_A":
        if rows < 8 or cols < 8:
            raise ValueError(f"letter_A needs a frame of at least 8x8, got {rows}x{cols}")
        mask = _letter_a(rows, cols)
    else:
        raise ValueError(f"unknown builtin scene {name!r}")
    return TargetScene(mask, eta_0)


def load_scene(path, eta_0: float = DEFAULT_ETA_0) -> TargetScene:
    """Load a graymap; pixels strictly above ``maxval / 2`` become object pixels."""
    img, maxval = read_pgm(path)
    return TargetScene((img > maxval / 2).astype(np.uint8), eta_0)


def save_scene(scene: TargetScene, path, binary: bool = True) -> Path:
    return write_pgm(path, scene.mask.astype(np.int64) * 255, binary=binary)
