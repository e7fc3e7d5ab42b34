"""Sweeps over schemes, noise levels and pulse widths, writing CSV and PGM outputs.

Every sweep cell draws from its own generator, keyed on the base seed, the
scheme, the noise level and the series variant, never on the pulse width or
the worker that runs it. QSPI rows are therefore bit-identical across pulse
widths and outputs do not depend on the worker count.
"""

from __future__ import annotations

import csv
import logging
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .metrics import image_snr, snr_distribution, trial_generator
from .patterns import PatternBasis, generate_hadamard, overlaps, select_subset
from .photostat import Scheme, sample_count
from .recon import (MeasurementSeries, reconstruct, save_g2_csv, save_image_pgm,
                    write_measurements)
from .scene import TargetScene, builtin_scene, load_scene
from .timetags import EventParams, event_counts

log = logging.getLogger(__name__)

SCHEME_KEYS = {"CSPI": 1, "QSPI": 2, "PSPI": 3}
SNR_COLUMNS = ["scheme", "eta_h", "noise_level", "T_w", "trials", "p10", "p50", "p90",
               "mean", "seed", "config_hash"]
GRID_COLUMNS = ["scheme", "eta_h", "noise_level", "T_w", "snr", "mu_O", "mu_B",
                "sigma_O", "sigma_B", "image", "seed", "config_hash"]


@dataclass(frozen=True)
class Cell:
    scheme: str
    noise_level: float
    T_w: float
    eta_h: float | None = None  # None -> device default

    @property
    def variant(self) -> int:
        return 0 if self.eta_h is None else 1

    def label(self) -> str:
        tag = "" if self.eta_h is None else f"_etah{self.eta_h:g}"
        return f"{self.scheme}{tag}_nu{self.noise_level:g}_Tw{self.T_w * 1e3:g}ms"


def _float_key(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def cell_seed(seed: int, cell: Cell) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        seed, spawn_key=(SCHEME_KEYS[cell.scheme], _float_key(cell.noise_level), cell.variant))


def build_scene(cfg: ExperimentConfig) -> TargetScene:
    if cfg.scene in ("letter_A", "full_bright", "empty"):
        return builtin_scene(cfg.scene, cfg.rows, cfg.rows, cfg.eta_0)
    scene = load_scene(cfg.scene, cfg.eta_0)
    if scene.shape != (cfg.rows, cfg.rows):
        raise ValueError(f"scene {cfg.scene} is {scene.shape}, config rows = {cfg.rows}")
    return scene


def build_basis(cfg: ExperimentConfig) -> PatternBasis:
    full = generate_hadamard(cfg.rows, cfg.rows)
    return select_subset(full, cfg.pair_count, cfg.subset_strategy, cfg.subset_seed)


def counts_function(cfg: ExperimentConfig):
    if cfg.mode == "analytic":
        return sample_count
    params = EventParams(resolution=cfg.tag_resolution, jitter_fwhm=cfg.jitter_fwhm,
                         g2_range=cfg.g2_range, xcorr_bins_per_pulse=cfg.xcorr_bins_per_pulse)
    return partial(event_counts, params=params)


def _scheme_config(cfg: ExperimentConfig, cell: Cell):
    over = {} if cell.eta_h is None else {"eta_h": cell.eta_h}
    return cfg.scheme_config(cell.scheme, cell.noise_level, cell.T_w, **over)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _distribution_task(cfg: ExperimentConfig, cell: Cell):
    d = snr_distribution(_scheme_config(cfg, cell), build_scene(cfg), build_basis(cfg),
                         cfg.trials, cell_seed(cfg.seed, cell), counts_fn=counts_function(cfg))
    return d.p10, d.p50, d.p90, d.mean


def _image_task(cfg: ExperimentConfig, cell: Cell):
    basis, scene = build_basis(cfg), build_scene(cfg)
    rng = trial_generator(cell_seed(cfg.seed, cell), 0)
    counts = np.asarray(counts_function(cfg)(_scheme_config(cfg, cell), overlaps(basis, scene), rng))
    img = reconstruct(basis, MeasurementSeries.for_basis(basis, counts))
    return counts, img


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path: Path, header: list[str], rows: list[list]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _eta_h(cfg: ExperimentConfig, cell: Cell) -> float:
    return cfg.eta_h if cell.eta_h is None else cell.eta_h


def _distribution_rows(cfg: ExperimentConfig, cells: list[Cell], workers: int) -> list[list]:
    results = _map(partial(_distribution_task, cfg), cells, workers)
    h = cfg.config_hash()
    return [[c.scheme, _fmt(_eta_h(cfg, c)), _fmt(c.noise_level), _fmt(c.T_w), cfg.trials,
             *map(_fmt, r), cfg.seed, h] for c, r in zip(cells, results)]


def run_image_grid(cfg: ExperimentConfig, out_dir, workers: int = 1) -> list[Path]:
    """One reconstructed image per (scheme, noise level, pulse width) plus an SNR table."""
    out_dir = Path(out_dir)
    cells = [Cell(s, nu, tw) for s in cfg.schemes for nu in cfg.noise_levels
             for tw in cfg.pulse_widths]
    if not cells:
        return []
    results = _map(partial(_image_task, cfg), cells, workers)
    basis, scene = build_basis(cfg), build_scene(cfg)
    h = cfg.config_hash()
    img_dir = out_dir / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    rows, written = [], []
    for cell, (counts, img) in zip(cells, results):
        stem = cell.label()
        pgm = save_image_pgm(img, img_dir / f"{stem}.pgm")
        save_g2_csv(img, img_dir / f"{stem}_g2.csv")
        write_measurements(MeasurementSeries(counts, basis.source_ids),
                           img_dir / f"{stem}_measurements.csv")
        rep = image_snr(img.g2, scene.mask)
        rows.append([cell.scheme, _fmt(_eta_h(cfg, cell)), _fmt(cell.noise_level), _fmt(cell.T_w),
                     _fmt(rep.snr), _fmt(rep.mu_O), _fmt(rep.mu_B), _fmt(rep.sigma_O),
                     _fmt(rep.sigma_B), pgm.name, cfg.seed, h])
        written.append(pgm)
    written.append(_write_rows(out_dir / "grid_snr.csv", GRID_COLUMNS, rows))
    log.info("grid: %d cells -> %s", len(cells), out_dir)
    return written


def run_snr_surface(cfg: ExperimentConfig, out_dir, workers: int = 1) -> Path:
    """Mean SNR (with percentile band) over the noise-level x pulse-width grid."""
    if len(cfg.noise_levels) < 2 or len(cfg.pulse_widths) < 2:
        raise ValueError("surface needs at least two noise levels and two pulse widths")
    if cfg.trials < 2:
        raise ValueError("surface needs trials >= 2")
    cells = [Cell(s, nu, tw) for s in cfg.schemes for tw in cfg.pulse_widths
             for nu in cfg.noise_levels]
    rows = _distribution_rows(cfg, cells, workers)
    return _write_rows(Path(out_dir) / "snr_surface.csv", SNR_COLUMNS, rows)


def run_snr_curves(cfg: ExperimentConfig, out_dir, workers: int = 1) -> Path:
    """Percentile bands per scheme and noise level, plus ideal-heralding QSPI."""
    if cfg.trials < 2:
        raise ValueError("curves need trials >= 2")
    cells = []
    for tw in cfg.pulse_widths:
        for s in cfg.schemes:
            cells += [Cell(s, nu, tw) for nu in cfg.noise_levels]
            if s == Scheme.QSPI.value:
                cells += [Cell(s, nu, tw, eta_h=1.0) for nu in cfg.noise_levels]
    rows = _distribution_rows(cfg, cells, workers)
    return _write_rows(Path(out_dir) / "snr_curves.csv", SNR_COLUMNS, rows)


def write_config_snapshot(cfg: ExperimentConfig, out_dir) -> Path:
    path = Path(out_dir) / "config.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(f"# config_hash = {cfg.config_hash()}\n" + cfg.to_text(), encoding="utf-8")
    return path
