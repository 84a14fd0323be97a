"""Band-limited Gaussian perturbations, FIR low-pass recovery and PSD estimates.

All frequencies are normalized to the sampling rate, so the usable range is
[0, 0.5] cycles per sample.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sps
from scipy.integrate import trapezoid

from .errors import OutputError, ParameterError

DEFAULT_BAND = (0.35, 0.49)
FULL_BAND = (0.0, 0.5)
DEFAULT_NUMTAPS = 65  # order 64


@dataclass(frozen=True)
class NoiseConfig:
    """Strength, frequency band and seed of an injected noise process.

    ``sigma2`` is the sample variance of each generated stream. A band equal
    to the full Nyquist range [0, 0.5] means unfiltered white noise.
    """

    sigma2: float = 0.01
    band: tuple[float, float] = DEFAULT_BAND
    seed: int = 0
    numtaps: int = DEFAULT_NUMTAPS

    def __post_init__(self):
        lo, hi = (float(b) for b in self.band)
        object.__setattr__(self, "band", (lo, hi))
        if not self.sigma2 > 0:
            raise ParameterError(f"sigma2 must be positive, got {self.sigma2}")
        if not 0.0 <= lo < hi <= 0.5:
            raise ParameterError(f"band must satisfy 0 <= f_lo < f_hi <= 0.5, got {self.band}")
        if self.numtaps < 3 or self.numtaps % 2 == 0:
            raise ParameterError(f"numtaps must be odd and >= 3, got {self.numtaps}")

    @property
    def is_white(self) -> bool:
        return self.band == FULL_BAND


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled real signal.

    ``delay`` counts samples of pure group delay accumulated by filtering,
    so ``samples[delay:]`` lines up with the unfiltered source.
    """

    samples: np.ndarray
    dt: float = 1.0
    delay: float = 0.0

    def __post_init__(self):
        s = np.array(self.samples, dtype=float, copy=True).reshape(-1)
        if s.size < 1:
            raise ParameterError("signal needs at least one sample")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided PSD on normalized frequencies in [0, 0.5]."""

    freqs: np.ndarray
    power: np.ndarray

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.freqs.tolist(), self.power.tolist()))

    def total_power(self) -> float:
        return float(trapezoid(self.power, self.freqs))

    def band_fraction(self, lo: float, hi: float) -> float:
        """Fraction of the total power lying in [lo, hi]."""
        # Rectangle rule on bins: bin edges at +/- half a spacing.
        df = self.freqs[1] - self.freqs[0]
        weights = np.full(self.freqs.shape, df)
        weights[0] = weights[-1] = df / 2
        inside = (self.freqs >= lo) & (self.freqs <= hi)
        total = float(np.sum(self.power * weights))
        return float(np.sum(self.power[inside] * weights[inside]) / total) if total > 0 else 0.0


def band_filter(band: tuple[float, float], numtaps: int = DEFAULT_NUMTAPS) -> np.ndarray:
    """Linear-phase FIR taps passing ``band`` (windowed design)."""
    lo, hi = band
    min_width = 4.0 / numtaps
    if hi - lo < min_width:
        raise ParameterError(
            f"band {band} is narrower than {min_width:.3f}, too narrow for a {numtaps}-tap filter")
    if lo == 0.0:
        return sps.firwin(numtaps, hi, fs=1.0)
    if hi == 0.5:
        return sps.firwin(numtaps, lo, pass_zero=False, fs=1.0)
    return sps.firwin(numtaps, [lo, hi], pass_zero=False, fs=1.0)


def noise_streams(n_streams: int, length: int, cfg: NoiseConfig) -> np.ndarray:
    """``n_streams`` independent noise rows of ``length`` samples each.

    White Gaussian samples are band-pass filtered (warm-up discarded) and
    each row is rescaled to sample variance ``cfg.sigma2``.
    """
    if length < cfg.numtaps:
        raise ParameterError(f"length {length} shorter than filter warm-up {cfg.numtaps}")
    rng = np.random.default_rng(cfg.seed)
    if cfg.is_white:
        raw = rng.standard_normal((n_streams, length))
    else:
        taps = band_filter(cfg.band, cfg.numtaps)
        warm = cfg.numtaps - 1
        white = rng.standard_normal((n_streams, length + warm))
        raw = sps.lfilter(taps, 1.0, white, axis=1)[:, warm:]
    std = raw.std(axis=1, keepdims=True)
    return raw * (np.sqrt(cfg.sigma2) / std)


def gen_hf_noise(length: int, cfg: NoiseConfig = NoiseConfig(), dt: float = 1.0) -> Signal:
    """Single band-limited Gaussian noise stream with variance ``cfg.sigma2``."""
    return Signal(noise_streams(1, int(length), cfg)[0], dt)


def lowpass_taps(cutoff: float, numtaps: int = DEFAULT_NUMTAPS) -> np.ndarray:
    if not 0.0 < cutoff < 0.5:
        raise ParameterError(f"cutoff must lie in (0, 0.5), got {cutoff}")
    return sps.firwin(numtaps, cutoff, fs=1.0)


def low_pass(s: Signal, cutoff: float = 0.2, numtaps: int = DEFAULT_NUMTAPS) -> Signal:
    """Causal linear-phase FIR low-pass.

    The filter state starts at steady state for the first sample, so a
    constant input passes unchanged. The output is delayed by
    (numtaps - 1) / 2 samples, which is added to ``Signal.delay``.
    """
    taps = lowpass_taps(cutoff, numtaps)
    x = s.samples
    zi = sps.lfilter_zi(taps, 1.0) * x[0]
    y, _ = sps.lfilter(taps, 1.0, x, zi=zi)
    return Signal(y, s.dt, s.delay + (numtaps - 1) / 2)


def psd(s: Signal, segment_length: int = 256) -> PowerSpectrum:
    """Welch estimate: Hann window, 50% overlap, normalized frequency axis."""
    segment_length = int(segment_length)
    if segment_length < 8:
        raise ParameterError(f"segment_length must be >= 8, got {segment_length}")
    if len(s) < segment_length:
        raise ParameterError(f"signal of {len(s)} samples shorter than segment {segment_length}")
    f, p = sps.welch(s.samples, fs=1.0, window="hann", nperseg=segment_length,
                     noverlap=segment_length // 2, detrend="constant", scaling="density")
    return PowerSpectrum(f, np.maximum(p, 0.0))


def _write_rows(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_signal_csv(s: Signal, path: str | Path) -> None:
    _write_rows(path, ["t", "value"], ((repr(float(t)), repr(float(v))) for t, v in zip(s.times, s.samples)))


def read_signal_csv(path: str | Path) -> Signal:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != ["t", "value"]:
        raise ParameterError(f"{path}: expected header 't,value'")
    data = np.array(rows[1:], dtype=float)
    dt = float(data[1, 0] - data[0, 0]) if len(data) > 1 else 1.0
    return Signal(data[:, 1], dt)


def write_psd_csv(ps: PowerSpectrum, path: str | Path) -> None:
    _write_rows(path, ["freq", "power"], ((repr(float(f)), repr(float(p))) for f, p in ps.pairs()))
