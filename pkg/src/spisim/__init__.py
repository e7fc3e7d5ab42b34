"""Photon-counting single-pixel imaging simulator.

Compares conventional (CSPI), photon-pair heralded (QSPI) and pulsed
classical (PSPI) single-pixel imaging under thermal background light.
"""

from .config import ExperimentConfig, calibrated_config
from .metrics import SnrReport, snr, snr_distribution
from .patterns import PatternBasis, generate_hadamard, pattern_overlap, select_subset
from .photostat import Scheme, SchemeConfig, expected_count, sample_count
from .recon import MeasurementSeries, normalize_image, reconstruct
from .scene import TargetScene, builtin_scene, load_scene

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "MeasurementSeries", "PatternBasis", "Scheme", "SchemeConfig",
    "SnrReport", "TargetScene", "builtin_scene", "calibrated_config", "expected_count",
    "generate_hadamard", "load_scene", "normalize_image", "pattern_overlap", "reconstruct",
    "sample_count", "select_subset", "snr", "snr_distribution",
]
