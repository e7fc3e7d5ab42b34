"""Device defaults, noise-level calibration and the experiment config file."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace

from .kvconfig import ConfigError, as_float, as_int, as_list, format_kv, read_kv
from .photostat import Scheme, SchemeConfig, equal_power_signal

# Device parameters (seconds / dimensionless).
DEVICE_DEFAULTS = {
    "T_aq": 1.5,
    "T_c": 650e-12,
    "tau_sc": 13.3e-6,
    "tau_sq": 5e-12,
    "tau_i": 5e-12,
    "tau_b": 681e-9,
    "eta_d": 0.65,
    "eta_h": 0.12,
    "eta_0": 0.015,
}
DEFAULT_PULSE_WIDTHS = (1e-3, 75e-3)
SIGNAL_COUNTS = 12000.0  # detected signal per acquisition, fully bright pattern


def calibrated_config(
    scheme,
    noise_level: float = 0.0,
    T_w: float = 1e-3,
    signal_counts: float = SIGNAL_COUNTS,
    **overrides,
) -> SchemeConfig:
    """Scheme config whose photon numbers reproduce the lab calibration.

    The quantum source is set so a fully bright pattern yields
    ``signal_counts`` detected signal photons per acquisition, the classical
    source is matched to it in accumulated power, and the background is set
    so its detected count is ``noise_level * signal_counts``.
    """
    if noise_level < 0:
        raise ValueError("noise_level must be >= 0")
    params = {**DEVICE_DEFAULTS, **overrides}
    unknown = set(params) - set(DEVICE_DEFAULTS)
    if unknown:
        raise ValueError(f"unknown device parameters: {sorted(unknown)}")
    if params["eta_d"] == 0 or params["eta_0"] == 0:
        raise ValueError("calibration needs eta_d > 0 and eta_0 > 0")
    L_sq = params["T_aq"] / params["tau_sq"]
    L_b = params["T_aq"] / params["tau_b"]
    cfg = SchemeConfig(
        scheme=Scheme(scheme),
        n_bar_sc=0.0,
        n_bar_sq=signal_counts / (L_sq * params["eta_d"] * params["eta_0"]),
        n_bar_b=noise_level * signal_counts / (L_b * params["eta_d"]),
        T_w=T_w,
        **params,
    )
    return equal_power_signal(cfg)


# Full-scale protocol versus the default desk-scale run.
FULL_SCALE = {"rows": 32, "pair_count": 350, "trials": 5000}


@dataclass
class ExperimentConfig:
    schemes: list = field(default_factory=lambda: ["CSPI", "QSPI", "PSPI"])
    noise_levels: list = field(default_factory=lambda: [0.0, 12.0, 36.0, 72.0, 120.0])
    pulse_widths: list = field(default_factory=lambda: list(DEFAULT_PULSE_WIDTHS))
    mode: str = "analytic"
    trials: int = 200
    seed: int = 0
    rows: int = 16
    pair_count: int = 128
    subset_strategy: str = "sequency_prefix"
    subset_seed: int = 0
    scene: str = "letter_A"
    signal_counts: float = SIGNAL_COUNTS
    T_aq: float = DEVICE_DEFAULTS["T_aq"]
    T_c: float = DEVICE_DEFAULTS["T_c"]
    tau_sc: float = DEVICE_DEFAULTS["tau_sc"]
    tau_sq: float = DEVICE_DEFAULTS["tau_sq"]
    tau_i: float = DEVICE_DEFAULTS["tau_i"]
    tau_b: float = DEVICE_DEFAULTS["tau_b"]
    eta_d: float = DEVICE_DEFAULTS["eta_d"]
    eta_h: float = DEVICE_DEFAULTS["eta_h"]
    eta_0: float = DEVICE_DEFAULTS["eta_0"]
    # Event-mode processing.
    tag_resolution: float = 100e-12
    jitter_fwhm: float = 300e-12
    g2_range: float = 5e-9
    xcorr_bins_per_pulse: int = 10
    # Recorded for completeness; only affects wall-clock time in the lab.
    pattern_switch_time: float = 1.0

    def __post_init__(self):
        self.schemes = [Scheme(s).value for s in self.schemes]
        self.noise_levels = [float(v) for v in self.noise_levels]
        self.pulse_widths = [float(v) for v in self.pulse_widths]
        if any(v < 0 for v in self.noise_levels):
            raise ConfigError("noise_levels must be >= 0")
        if any(v <= 0 for v in self.pulse_widths):
            raise ConfigError("pulse_widths must be > 0")
        if self.mode not in ("analytic", "event"):
            raise ConfigError(f"mode must be 'analytic' or 'event', got {self.mode!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.subset_strategy not in ("sequency_prefix", "seeded_random"):
            raise ConfigError(f"unknown subset_strategy {self.subset_strategy!r}")

    def device(self) -> dict:
        return {k: getattr(self, k) for k in DEVICE_DEFAULTS}

    def scheme_config(self, scheme, noise_level: float, T_w: float, **overrides) -> SchemeConfig:
        dev = {**self.device(), **overrides}
        return calibrated_config(scheme, noise_level, T_w, self.signal_counts, **dev)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        return format_kv(self.to_dict())

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(cls)}
        unknown = set(mapping) - set(types)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for key, raw in mapping.items():
            kind = types[key]
            if kind == "list":
                items = as_list(raw)
                kw[key] = items if key == "schemes" else [as_float(key, v) for v in items]
            elif kind == "int":
                kw[key] = as_int(key, raw)
            elif kind == "float":
                kw[key] = as_float(key, raw)
            else:
                kw[key] = raw
        try:
            return cls(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_mapping(read_kv(path))
