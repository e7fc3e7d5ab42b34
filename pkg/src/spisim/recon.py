"""Covariance (computational ghost imaging) reconstruction."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .patterns import PatternBasis
from .pgm import write_pgm


@dataclass(frozen=True, eq=False)
class MeasurementSeries:
    """Intensities ``values[k]`` measured under pattern ``pattern_ids[k]`` of a basis."""

    values: np.ndarray
    pattern_ids: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        ids = np.asarray(self.pattern_ids, dtype=np.int64).ravel()
        if values.shape != ids.shape:
            raise ValueError("values and pattern_ids must have equal length")
        if np.any(values < 0):
            raise ValueError("intensities must be >= 0")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "pattern_ids", ids)

    @classmethod
    def for_basis(cls, basis: PatternBasis, values) -> "MeasurementSeries":
        """One value per basis entry, in basis order."""
        return cls(values, np.arange(len(basis)))


@dataclass(frozen=True, eq=False)
class ReconstructedImage:
    g2: np.ndarray


def covariance_image(patterns: np.ndarray, intensities: np.ndarray) -> np.ndarray:
    """``<P I> - <P><I>`` over the first axis (population covariance).

    ``patterns`` is (N, rows, cols); ``intensities`` is (N,) or (T, N) for a
    batch of T measurement series, giving (rows, cols) or (T, rows, cols).
    """
    N = patterns.shape[0]
    P = patterns.reshape(N, -1).astype(float)
    I = np.asarray(intensities, dtype=float)
    # Centre the intensities first; mathematically identical, numerically tighter.
    Ic = I - I.mean(axis=-1, keepdims=True)
    g = (Ic @ P) / N
    return g.reshape(I.shape[:-1] + patterns.shape[1:])


def reconstruct(basis: PatternBasis, series: MeasurementSeries) -> ReconstructedImage:
    ids = series.pattern_ids
    if ids.size < 2:
        raise ValueError("need at least two measurements")
    if ids.min() < 0 or ids.max() >= len(basis):
        raise ValueError("pattern id outside the basis")
    g2 = covariance_image(basis.entries[ids], series.values)
    return ReconstructedImage(g2)


def normalize_image(img) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant image maps to 0.5 everywhere."""
    g = np.asarray(getattr(img, "g2", img), dtype=float)
    lo, hi = g.min(), g.max()
    if hi == lo:
        return np.full_like(g, 0.5)
    return (g - lo) / (hi - lo)


def save_g2_csv(img: ReconstructedImage, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in img.g2:
            w.writerow([repr(float(v)) for v in row])
    return path


def save_image_pgm(img, path, maxval: int = 255) -> Path:
    return write_pgm(path, normalize_image(img) * maxval, maxval=maxval)


def read_measurements(path) -> MeasurementSeries:
    """CSV with header ``pattern_id,count`` (extra columns are ignored)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"pattern_id", "count"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns pattern_id,count")
        ids, vals = [], []
        for row in reader:
            ids.append(int(row["pattern_id"]))
            vals.append(float(row["count"]))
    return MeasurementSeries(np.array(vals), np.array(ids))


def write_measurements(series: MeasurementSeries, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pattern_id", "count"])
        for pid, v in zip(series.pattern_ids, series.values):
            w.writerow([int(pid), int(v) if float(v).is_integer() else repr(float(v))])
    return path
