"""Image SNR and its Monte Carlo distribution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .patterns import PatternBasis, overlaps
from .photostat import SchemeConfig, sample_count
from .recon import covariance_image, normalize_image
from .scene import TargetScene

INFINITE_SNR = float("inf")


@dataclass(frozen=True)
class SnrReport:
    mu_O: float
    mu_B: float
    sigma_O: float
    sigma_B: float
    snr: float


def snr(image, object_mask) -> SnrReport:
    """``|mu_O - mu_B|^2 / (2 (sigma_O + sigma_B)^2)`` over object and background pixels.

    Standard deviations are population ones. Perfectly flat regions with a
    nonzero separation give :data:`INFINITE_SNR`.
    """
    img = np.asarray(image, dtype=float)
    mask = np.asarray(object_mask).astype(bool)
    if img.shape != mask.shape:
        raise ValueError(f"image shape {img.shape} != mask shape {mask.shape}")
    obj, bg = img[mask], img[~mask]
    if obj.size == 0 or bg.size == 0:
        raise ValueError("object and background regions must both be non-empty")
    mu_O, mu_B = float(obj.mean()), float(bg.mean())
    s_O, s_B = float(obj.std()), float(bg.std())
    gap = (mu_O - mu_B) ** 2
    denom = 2.0 * (s_O + s_B) ** 2
    if gap == 0:
        value = 0.0
    elif denom == 0:
        value = INFINITE_SNR
    else:
        value = gap / denom
    return SnrReport(mu_O, mu_B, s_O, s_B, value)


def _batch_snr(images: np.ndarray, mask: np.ndarray) -> np.ndarray:
    # Vectorised snr() over a (T, rows, cols) stack of raw images.
    flat = images.reshape(images.shape[0], -1)
    lo = flat.min(axis=1, keepdims=True)
    span = flat.max(axis=1, keepdims=True) - lo
    norm = np.where(span > 0, (flat - lo) / np.where(span > 0, span, 1.0), 0.5)
    m = mask.ravel().astype(bool)
    obj, bg = norm[:, m], norm[:, ~m]
    gap = (obj.mean(axis=1) - bg.mean(axis=1)) ** 2
    denom = 2.0 * (obj.std(axis=1) + bg.std(axis=1)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(gap == 0, 0.0, np.where(denom == 0, INFINITE_SNR, gap / denom))
    return out


@dataclass(frozen=True)
class SnrDistribution:
    p10: float
    p50: float
    p90: float
    mean: float
    values: np.ndarray


def trial_generator(seed, trial: int) -> np.random.Generator:
    """Generator for one trial, derived from ``seed`` (int or SeedSequence) and the trial index."""
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (trial,))
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(trial,))
    return np.random.default_rng(ss)


def simulate_snrs(
    cfg: SchemeConfig,
    scene: TargetScene,
    basis: PatternBasis,
    trials: int,
    seed,
    object_mask=None,
    counts_fn: Callable = sample_count,
) -> np.ndarray:
    """SNR of ``trials`` independent end-to-end simulations (counts, covariance, min-max, SNR)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    mask = scene.mask if object_mask is None else np.asarray(object_mask)
    chi = overlaps(basis, scene)
    counts = np.stack([np.asarray(counts_fn(cfg, chi, trial_generator(seed, t)), dtype=float)
                       for t in range(trials)])
    images = covariance_image(basis.entries, counts)
    return _batch_snr(images, mask)


def summarize(values) -> SnrDistribution:
    v = np.sort(np.asarray(values, dtype=float))
    p10, p50, p90 = np.percentile(v, [10, 50, 90])
    return SnrDistribution(float(p10), float(p50), float(p90), float(v.mean()), v)


def snr_distribution(
    cfg: SchemeConfig,
    scene: TargetScene,
    basis: PatternBasis,
    trials: int,
    seed,
    object_mask=None,
    counts_fn: Callable = sample_count,
) -> SnrDistribution:
    """10th/50th/90th percentiles (linear interpolation) and mean of simulated SNRs."""
    if trials < 2:
        raise ValueError("trials must be >= 2")
    return summarize(simulate_snrs(cfg, scene, basis, trials, seed, object_mask, counts_fn))


def image_snr(g2, object_mask) -> SnrReport:
    """SNR of a raw covariance image after min-max normalisation."""
    return snr(normalize_image(g2), object_mask)
