"""Event-level photon streams and TCSPC-style post-processing.

Each acquisition of length ``T_aq`` is simulated as explicit arrival times,
then reduced to the per-pattern intensity of a scheme:

* CSPI: total count in the acquisition.
* QSPI: signal/idler delay histogram, counts inside ``T_c`` around its peak.
* PSPI: maximum over lags of the overlap between the drive pulse and the
  detected stream.

Background is a homogeneous Poisson process. Thermal bunching is ignored
here because ``tau_b`` is far shorter than any counting window; the analytic
sampler in :mod:`spisim.photostat` keeps the thermal excess variance.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .photostat import Scheme, SchemeConfig, mean_idler, mean_noise, mean_signal

Channel = Literal["signal_detector", "idler_detector"]
CHANNELS = ("signal_detector", "idler_detector")

DEFAULT_RESOLUTION = 100e-12
FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


class NoPeakError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeTagStream:
    """Sorted arrival times (seconds) in ``[0, T_aq)`` on one detector."""

    tags: np.ndarray
    channel: Channel = "signal_detector"
    resolution: float = DEFAULT_RESOLUTION
    T_aq: float = 1.5

    def __post_init__(self):
        tags = np.asarray(self.tags, dtype=float).ravel()
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        if tags.size:
            if tags[0] < 0 or tags[-1] >= self.T_aq:
                raise ValueError("tags must lie in [0, T_aq)")
            if np.any(np.diff(tags) < 0):
                raise ValueError("tags must be sorted")
        tags.setflags(write=False)
        object.__setattr__(self, "tags", tags)

    def __len__(self) -> int:
        return self.tags.size


@dataclass(frozen=True)
class PulseTemplate:
    """Rectangular drive pulse ``f(t)``: one pulse of ``width`` per ``period``."""

    start: float
    width: float
    period: float
    shape: str = "rectangular"

    def __post_init__(self):
        if self.shape != "rectangular":
            raise ValueError("only rectangular pulses are supported")
        if not (self.start >= 0 and self.width > 0 and self.start + self.width <= self.period):
            raise ValueError("require 0 <= start and start + width <= period")

    @classmethod
    def from_config(cls, cfg: SchemeConfig, start: float = 0.0) -> "PulseTemplate":
        return cls(start=start, width=cfg.T_w, period=cfg.T_aq)


def _sorted_uniform(n: int, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    # Uniform order statistics from normalised exponential spacings; avoids a sort.
    if n == 0:
        return np.empty(0)
    pos = np.cumsum(rng.standard_exponential(n + 1))
    t = pos[:-1]
    t *= (hi - lo) / pos[-1]
    t += lo
    if t[-1] >= hi:
        np.minimum(t, np.nextafter(hi, lo), out=t)
    return t


def _bernoulli_indices(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices of successes among ``n`` Bernoulli(p) trials, via geometric gaps."""
    if p <= 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(n)
    out = []
    pos = -1
    while True:
        k = max(16, int(1.2 * (n - pos) * p) + 16)
        idx = pos + np.cumsum(rng.geometric(p, size=k))
        if idx[-1] >= n:
            out.append(idx[idx < n])
            break
        out.append(idx)
        pos = int(idx[-1])
    return np.concatenate(out)


def gen_noise_stream(cfg: SchemeConfig, rng: np.random.Generator,
                     resolution: float = DEFAULT_RESOLUTION) -> TimeTagStream:
    """Background photons on the signal detector over one acquisition."""
    n = rng.poisson(mean_noise(cfg))
    return TimeTagStream(_sorted_uniform(n, 0.0, cfg.T_aq, rng), "signal_detector",
                         resolution, cfg.T_aq)


def gen_pulsed_signal_stream(cfg: SchemeConfig, chi_tilde: float, template: PulseTemplate,
                             rng: np.random.Generator,
                             resolution: float = DEFAULT_RESOLUTION) -> TimeTagStream:
    """Signal photons confined to the drive pulse (PSPI)."""
    if cfg.scheme is not Scheme.PSPI:
        raise ValueError("pulsed signal stream needs a PSPI config")
    n = rng.poisson(mean_signal(cfg, chi_tilde))
    tags = _sorted_uniform(n, template.start, template.start + template.width, rng)
    return TimeTagStream(tags, "signal_detector", resolution, cfg.T_aq)


def gen_cw_signal_stream(cfg: SchemeConfig, chi_tilde: float, rng: np.random.Generator,
                         resolution: float = DEFAULT_RESOLUTION) -> TimeTagStream:
    """Signal photons spread over the whole acquisition (CSPI)."""
    n = rng.poisson(mean_signal(cfg, chi_tilde))
    return TimeTagStream(_sorted_uniform(n, 0.0, cfg.T_aq, rng), "signal_detector",
                         resolution, cfg.T_aq)


def _jitter(tags: np.ndarray, sigma: float, T_aq: float, rng) -> np.ndarray:
    if sigma <= 0 or tags.size == 0:
        return tags
    out = tags + sigma * rng.standard_normal(tags.size)
    out = np.mod(out, T_aq)
    out.sort(kind="stable")
    return out


def gen_pair_streams(cfg: SchemeConfig, chi_tilde: float, rng: np.random.Generator,
                     jitter_fwhm: float = 300e-12, path_delay: float = 0.0,
                     resolution: float = DEFAULT_RESOLUTION) -> tuple[TimeTagStream, TimeTagStream]:
    """Heralded photon pairs: ``(signal, idler)`` streams for one acquisition.

    Idler detections form a Poisson process at the source rate. Each one
    yields a detected signal partner with probability
    ``eta_h * E[mu_sq] / E[mu_i]`` at the same instant shifted by
    ``path_delay``.

    ``jitter_fwhm`` is the FWHM of the measured signal-idler delay. Timing
    noise is applied to the signal detections only: jittering a homogeneous
    Poisson process on a circular window leaves it a homogeneous Poisson
    process, so this has the same joint law as splitting the jitter between
    the two detectors, without drawing a normal per idler.
    """
    if cfg.scheme is not Scheme.QSPI:
        raise ValueError("pair streams need a QSPI config")
    n_i = mean_idler(cfg)
    idler = _sorted_uniform(rng.poisson(n_i), 0.0, cfg.T_aq, rng)
    p = min(1.0, cfg.eta_h * mean_signal(cfg, chi_tilde) / n_i) if n_i > 0 else 0.0
    signal = idler[_bernoulli_indices(idler.size, p, rng)] + path_delay
    signal = _jitter(signal, jitter_fwhm * FWHM_TO_SIGMA, cfg.T_aq, rng)
    if not jitter_fwhm:
        signal = np.sort(np.mod(signal, cfg.T_aq), kind="stable")
    return (TimeTagStream(signal, "signal_detector", resolution, cfg.T_aq),
            TimeTagStream(idler, "idler_detector", resolution, cfg.T_aq))


def merge(a: TimeTagStream, b: TimeTagStream) -> TimeTagStream:
    if a.channel != b.channel or a.resolution != b.resolution or a.T_aq != b.T_aq:
        raise ValueError("can only merge streams with equal channel, resolution and T_aq")
    tags = np.concatenate([a.tags, b.tags])
    tags.sort(kind="stable")
    return TimeTagStream(tags, a.channel, a.resolution, a.T_aq)


def integrate_counts(stream: TimeTagStream) -> int:
    return len(stream)


def coincidence_count(a: TimeTagStream, b: TimeTagStream, window: float, offset: float = 0.0) -> int:
    """Events of ``a`` with at least one ``b`` event in ``t + offset +- window/2``."""
    if not window > 0:
        raise ValueError("window must be > 0")
    t = a.tags + offset
    lo = np.searchsorted(b.tags, t - window / 2, side="left")
    hi = np.searchsorted(b.tags, t + window / 2, side="right")
    return int(np.count_nonzero(hi > lo))


def pair_delays(a: TimeTagStream, b: TimeTagStream, max_delay: float) -> np.ndarray:
    """All delays ``tb - ta`` with ``|tb - ta| <= max_delay``, sorted."""
    ta, tb = a.tags, b.tags
    first = np.searchsorted(tb, ta - max_delay, side="left")
    parts = []
    owner = np.arange(ta.size)
    idx = first
    # Walk forward from each lower bound; windows hold only a few events.
    while owner.size:
        ok = idx < tb.size
        owner, idx = owner[ok], idx[ok]
        d = tb[idx] - ta[owner]
        ok = d <= max_delay
        owner, idx = owner[ok], idx[ok]
        parts.append(d[ok])
        idx = idx + 1
    d = np.concatenate(parts) if parts else np.empty(0)
    d.sort()
    return d


@dataclass(frozen=True, eq=False)
class G2Histogram:
    centers: np.ndarray
    counts: np.ndarray
    bin: float
    delays: np.ndarray


def g2_histogram(a: TimeTagStream, b: TimeTagStream, bin: float = DEFAULT_RESOLUTION,
                 range: float = 5e-9) -> G2Histogram:
    """Histogram of ``b - a`` delays within ``+-range``; bins are centred on multiples of ``bin``."""
    if not (bin > 0 and range > 0):
        raise ValueError("bin and range must be > 0")
    k = int(np.ceil(range / bin - 1e-9))
    centers = np.arange(-k, k + 1) * bin
    edges = (np.arange(-k, k + 2) - 0.5) * bin
    delays = pair_delays(a, b, range)
    counts, _ = np.histogram(delays, bins=edges)
    return G2Histogram(centers, counts, bin, delays)


def _pick_peak(taus: np.ndarray, values: np.ndarray) -> int:
    # Largest value; ties -> smallest |tau|, then smallest tau.
    cand = np.flatnonzero(values == values.max())
    order = np.lexsort((taus[cand], np.abs(taus[cand])))
    return int(cand[order[0]])


def peak_delay(hist: G2Histogram, window: float | None = None) -> tuple[float, int]:
    """Peak position ``tau_0`` and the coincidence count there.

    With ``window`` the count is every delay within ``tau_0 +- window/2``;
    otherwise it is the peak bin alone.
    """
    if hist.counts.size == 0 or hist.counts.max() == 0:
        raise NoPeakError("g2 histogram is empty")
    i = _pick_peak(hist.centers, hist.counts)
    tau0 = float(hist.centers[i])
    if window is None:
        return tau0, int(hist.counts[i])
    lo = np.searchsorted(hist.delays, tau0 - window / 2, side="left")
    hi = np.searchsorted(hist.delays, tau0 + window / 2, side="right")
    return tau0, int(hi - lo)


@dataclass(frozen=True, eq=False)
class CrossCorrelation:
    """``C(tau)`` sampled at lags ``tau`` (signed, circular over the pulse period)."""

    lags: np.ndarray
    values: np.ndarray
    bin: float

    def peak(self) -> tuple[float, int]:
        i = _pick_peak(self.lags, self.values)
        return float(self.lags[i]), int(self.values[i])


def cross_correlate(template: PulseTemplate, stream: TimeTagStream, bin: float) -> CrossCorrelation:
    """Counts of tags inside the pulse window shifted by each lag.

    ``C[l] = #{t : (t - start - l*bin) mod period in [0, w*bin)}`` with
    ``w = T_w / bin``. Lags run over ``round(period / bin)`` bins.
    """
    w = int(round(template.width / bin))
    if w < 1 or abs(w * bin - template.width) > 1e-3 * template.width:
        raise ValueError(f"bin {bin} must divide the pulse width {template.width}")
    n = int(round(template.period / bin))
    if w > n:
        raise ValueError("pulse wider than the period")
    rel = np.mod(stream.tags - template.start, template.period)
    idx = np.minimum((rel / bin).astype(np.int64), n - 1)
    hist = np.bincount(idx, minlength=n)
    ext = np.concatenate([hist, hist[: w - 1]])
    cs = np.concatenate([[0], np.cumsum(ext)])
    values = cs[w : w + n] - cs[:n]
    lag_idx = np.arange(n)
    lags = np.where(lag_idx <= n // 2, lag_idx, lag_idx - n) * bin
    return CrossCorrelation(lags, values, bin)


def max_correlation(cc: CrossCorrelation) -> int:
    """``max C(tau)``; ties resolve to the smallest ``|tau|``."""
    return cc.peak()[1]


@dataclass(frozen=True)
class EventParams:
    """Knobs for event-level acquisition not fixed by the device parameters."""

    resolution: float = DEFAULT_RESOLUTION
    jitter_fwhm: float = 300e-12
    path_delay: float = 0.0
    g2_bin: float = DEFAULT_RESOLUTION
    g2_range: float = 5e-9
    xcorr_bins_per_pulse: int = 10
    pulse_start: float = 0.0


def acquire(cfg: SchemeConfig, chi_tilde: float, rng: np.random.Generator,
            params: EventParams = EventParams(), noise: TimeTagStream | None = None) -> int:
    """Simulate one acquisition and return the scheme's post-processed count.

    A pre-generated background stream may be shared between schemes through
    ``noise``; otherwise one is drawn.
    """
    if params.resolution > cfg.T_c:
        raise ValueError("time-tag resolution must not exceed the coincidence window")
    if noise is None:
        noise = gen_noise_stream(cfg, rng, params.resolution)
    if cfg.scheme is Scheme.CSPI:
        sig = gen_cw_signal_stream(cfg, chi_tilde, rng, params.resolution)
        return integrate_counts(merge(noise, sig))
    if cfg.scheme is Scheme.PSPI:
        tpl = PulseTemplate.from_config(cfg, params.pulse_start)
        sig = gen_pulsed_signal_stream(cfg, chi_tilde, tpl, rng, params.resolution)
        cc = cross_correlate(tpl, merge(noise, sig), cfg.T_w / params.xcorr_bins_per_pulse)
        return max_correlation(cc)
    sig, idler = gen_pair_streams(cfg, chi_tilde, rng, params.jitter_fwhm,
                                  params.path_delay, params.resolution)
    hist = g2_histogram(merge(noise, sig), idler, params.g2_bin, params.g2_range)
    try:
        return peak_delay(hist, cfg.T_c)[1]
    except NoPeakError:
        return 0


def event_counts(cfg: SchemeConfig, chi_tilde, rng: np.random.Generator,
                 params: EventParams = EventParams()) -> np.ndarray:
    """One event-level acquisition per entry of ``chi_tilde``."""
    chi = np.atleast_1d(np.asarray(chi_tilde, dtype=float))
    return np.array([acquire(cfg, c, rng, params) for c in chi], dtype=np.int64)


def write_tags(path, *streams: TimeTagStream) -> Path:
    """Two-column text: channel name, arrival time in integer picoseconds."""
    path = Path(path)
    rows = []
    for s in streams:
        ps = np.rint(s.tags * 1e12).astype(np.int64)
        rows.extend(f"{s.channel} {t}" for t in ps)
    path.write_text("\n".join(rows) + ("\n" if rows else ""), encoding="ascii")
    return path


def read_tags(path, T_aq: float, resolution: float = DEFAULT_RESOLUTION) -> dict[str, TimeTagStream]:
    """Inverse of :func:`write_tags`; returns one stream per channel present."""
    per: dict[str, list[int]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in CHANNELS:
            raise ValueError(f"{path}:{lineno}: expected '<channel> <picoseconds>'")
        per.setdefault(parts[0], []).append(int(parts[1]))
    return {ch: TimeTagStream(np.sort(np.array(v, dtype=np.int64)) * 1e-12, ch, resolution, T_aq)
            for ch, v in per.items()}
