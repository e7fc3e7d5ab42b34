"""Photon statistics of the effective beam-splitter detection model.

Per coherence block the detected photon number is Bose-Einstein (thermal
background, and each marginal of the two-mode squeezed vacuum) or Poisson
(coherent signal). Over an acquisition spanning ``L`` blocks the sum is drawn
from a normal with mean ``L * mean`` and variance ``L * var``, and the
detector's photoelectric conversion adds a final Poisson draw whose rate
depends on how each scheme gates the background:

    CSPI  lam = mu_sc + mu_b
    QSPI  lam = eta_h * mu_sq + mu_b * mu_i * T_c / T_aq
    PSPI  lam = mu_sc + mu_b * T_w / T_aq
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from enum import Enum

import numpy as np

from .kvconfig import ConfigError, as_float, format_kv, parse_kv


class Scheme(str, Enum):
    CSPI = "CSPI"
    QSPI = "QSPI"
    PSPI = "PSPI"


@dataclass(frozen=True)
class SchemeConfig:
    """Physical parameters of one imaging scheme.

    Photon numbers ``n_bar_*`` are per coherence block of the respective
    source and are taken *before* channel and detector losses. Times are in
    seconds.
    """

    scheme: Scheme
    n_bar_sc: float
    n_bar_sq: float
    n_bar_b: float
    T_w: float
    T_aq: float
    T_c: float
    tau_sc: float
    tau_sq: float
    tau_i: float
    tau_b: float
    eta_d: float
    eta_h: float
    eta_0: float

    def __post_init__(self):
        try:
            object.__setattr__(self, "scheme", Scheme(self.scheme))
        except ValueError:
            raise ValueError(f"unknown scheme {self.scheme!r}") from None
        for name in ("T_w", "T_aq", "T_c", "tau_sc", "tau_sq", "tau_i", "tau_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.T_c < self.T_w <= self.T_aq:
            raise ValueError("require T_c < T_w <= T_aq")
        for name in ("eta_d", "eta_h", "eta_0"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("n_bar_sc", "n_bar_sq", "n_bar_b"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("L_sc", "L_sq", "L_i", "L_b"):
            if getattr(self, name) < 1:
                raise ValueError(f"block count {name} < 1; coherence time exceeds its window")

    # Block counts. CSPI illuminates continuously, so its signal spans T_aq.
    @property
    def signal_window(self) -> float:
        return self.T_w if self.scheme is Scheme.PSPI else self.T_aq

    @property
    def L_sc(self) -> float:
        return self.signal_window / self.tau_sc

    @property
    def L_sq(self) -> float:
        return self.T_aq / self.tau_sq

    @property
    def L_i(self) -> float:
        return self.T_aq / self.tau_i

    @property
    def L_b(self) -> float:
        return self.T_aq / self.tau_b

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        return d

    def to_text(self) -> str:
        return format_kv(self.to_dict())

    @classmethod
    def from_mapping(cls, mapping: dict) -> "SchemeConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(mapping) - names
        if unknown:
            raise ConfigError(f"unknown SchemeConfig keys: {sorted(unknown)}")
        missing = names - set(mapping)
        if missing:
            raise ConfigError(f"missing SchemeConfig keys: {sorted(missing)}")
        kw = {k: (v if k == "scheme" else as_float(k, v) if isinstance(v, str) else float(v))
              for k, v in mapping.items()}
        return cls(**kw)

    @classmethod
    def from_text(cls, text: str) -> "SchemeConfig":
        return cls.from_mapping(parse_kv(text))


def bose_einstein_moments(n_bar, eta):
    """Mean and variance of a thermal mode of mean ``n_bar`` after transmittance ``eta``.

    Loss maps a thermal state to a thermal state of mean ``n_bar * eta``.
    """
    n_bar = np.asarray(n_bar, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(n_bar < 0) or np.any(eta < 0) or np.any(eta > 1):
        raise ValueError("need n_bar >= 0 and 0 <= eta <= 1")
    m = n_bar * eta
    mean, var = m, m * (m + 1.0)
    if mean.ndim == 0:
        return float(mean), float(var)
    return mean, var


def poisson_moments(n_bar, eta):
    """Mean and variance (equal) of an attenuated coherent state."""
    n_bar = np.asarray(n_bar, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(n_bar < 0) or np.any(eta < 0) or np.any(eta > 1):
        raise ValueError("need n_bar >= 0 and 0 <= eta <= 1")
    m = n_bar * eta
    if m.ndim == 0:
        return float(m), float(m)
    return m, m


def sample_bose_einstein(n_bar: float, size, rng: np.random.Generator) -> np.ndarray:
    """Photon numbers of a single thermal mode (geometric on 0, 1, 2, ...)."""
    if n_bar < 0:
        raise ValueError("n_bar must be >= 0")
    if n_bar == 0:
        return np.zeros(size, dtype=np.int64)
    return rng.geometric(1.0 / (1.0 + n_bar), size=size) - 1


def sample_poisson(n_bar: float, size, rng: np.random.Generator) -> np.ndarray:
    """Photon numbers of a single coherent mode."""
    if n_bar < 0:
        raise ValueError("n_bar must be >= 0")
    return rng.poisson(n_bar, size=size)


def sample_thermal_block_sum(n_bar: float, blocks: int, size, rng: np.random.Generator) -> np.ndarray:
    """Exact sum of ``blocks`` independent thermal modes (negative binomial).

    Reference for the normal approximation used by :func:`sample_accumulated`.
    """
    if n_bar < 0 or blocks < 1:
        raise ValueError("need n_bar >= 0 and blocks >= 1")
    if n_bar == 0:
        return np.zeros(size, dtype=np.int64)
    return rng.negative_binomial(blocks, 1.0 / (1.0 + n_bar), size=size)


def sample_accumulated(mean, variance, blocks, rng: np.random.Generator, size=None):
    """Photon number accumulated over ``blocks`` coherence blocks.

    Normal with mean ``blocks * mean`` and variance ``blocks * variance``;
    negative draws are clamped to zero. Zero variance returns the mean exactly.
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(mean < 0) or np.any(variance < 0):
        raise ValueError("mean and variance must be >= 0")
    if np.any(np.asarray(blocks) < 1):
        raise ValueError("blocks must be >= 1")
    draw = rng.normal(blocks * mean, np.sqrt(blocks * variance), size=size)
    out = np.maximum(draw, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _check_chi(chi_tilde):
    chi = np.asarray(chi_tilde, dtype=float)
    if np.any(chi < 0) or np.any(chi > 1):
        raise ValueError("chi_tilde must lie in [0, 1]")
    return chi


def _signal_moments(cfg: SchemeConfig, chi):
    """Per-block moments and block count of the detected signal."""
    if cfg.scheme is Scheme.QSPI:
        m, v = bose_einstein_moments(cfg.n_bar_sq, cfg.eta_d * cfg.eta_0 * chi)
        return m, v, cfg.L_sq
    m, v = poisson_moments(cfg.n_bar_sc, cfg.eta_d * cfg.eta_0 * chi)
    return m, v, cfg.L_sc


def mean_noise(cfg: SchemeConfig) -> float:
    """Expected detected background photons over one acquisition."""
    return cfg.L_b * bose_einstein_moments(cfg.n_bar_b, cfg.eta_d)[0]


def mean_idler(cfg: SchemeConfig) -> float:
    """Expected detected idler photons over one acquisition."""
    return cfg.L_i * bose_einstein_moments(cfg.n_bar_sq, cfg.eta_d)[0]


def mean_signal(cfg: SchemeConfig, chi_tilde=1.0):
    m, _, L = _signal_moments(cfg, _check_chi(chi_tilde))
    return L * m


def _compose(cfg: SchemeConfig, mu_s, mu_b, mu_i=None):
    if cfg.scheme is Scheme.CSPI:
        return mu_s + mu_b
    if cfg.scheme is Scheme.PSPI:
        return mu_s + mu_b * (cfg.T_w / cfg.T_aq)
    return cfg.eta_h * mu_s + mu_b * mu_i * (cfg.T_c / cfg.T_aq)


def expected_count(cfg: SchemeConfig, chi_tilde):
    """Poisson rate of the detected count with every accumulated number at its mean."""
    if not isinstance(cfg.scheme, Scheme):
        raise ValueError(f"unknown scheme {cfg.scheme!r}")
    chi = _check_chi(chi_tilde)
    lam = _compose(cfg, mean_signal(cfg, chi), mean_noise(cfg), mean_idler(cfg))
    return float(lam) if np.ndim(lam) == 0 else lam


def sample_count(cfg: SchemeConfig, chi_tilde, rng: np.random.Generator):
    """Draw detected counts, one per entry of ``chi_tilde``.

    Draw order (signal, background, idler, photoelectric) is fixed so a given
    generator state always yields the same counts.
    """
    chi = _check_chi(chi_tilde)
    size = chi.shape if chi.ndim else None
    m, v, L = _signal_moments(cfg, chi)
    mu_s = sample_accumulated(m, v, L, rng, size=size)
    bm, bv = bose_einstein_moments(cfg.n_bar_b, cfg.eta_d)
    mu_b = sample_accumulated(bm, bv, cfg.L_b, rng, size=size)
    mu_i = None
    if cfg.scheme is Scheme.QSPI:
        im, iv = bose_einstein_moments(cfg.n_bar_sq, cfg.eta_d)
        mu_i = sample_accumulated(im, iv, cfg.L_i, rng, size=size)
    lam = _compose(cfg, mu_s, mu_b, mu_i)
    counts = rng.poisson(lam)
    return int(counts) if np.ndim(counts) == 0 else counts


def equal_power_signal(cfg: SchemeConfig) -> SchemeConfig:
    """Rescale the classical brightness so ``L_sc * N_sc == L_sq * N_sq``.

    Quantum configs are returned unchanged.
    """
    if cfg.scheme is Scheme.QSPI:
        return cfg
    return replace(cfg, n_bar_sc=cfg.n_bar_sq * cfg.L_sq / cfg.L_sc)
