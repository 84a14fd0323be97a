"""Laplacian eigenvalue estimation from an oscillator protocol and FFT peaks.

Each node runs

    x_i' = z_i + sum_j a_ij (z_i - z_j)
    z_i' = -x_i - sum_j a_ij (x_i - x_j)

so (x, z) rotates with angular frequency 1 + lambda_j in every Laplacian
eigenmode. Spectral lines sit at f = (1 + lambda_j) / 2 pi; inverting peak
positions recovers the distinct eigenvalues (multiplicities are lost).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.signal import find_peaks

from .consensus import TimeSeriesMatrix
from .errors import EstimationError, OutputError, ParameterError
from .graph import Graph, laplacian

DEFAULT_DT = 0.01
DEFAULT_SAMPLES = 60_000
DEFAULT_RUNS = 4
DEFAULT_PEAK_THRESHOLD = 0.05


@dataclass(frozen=True, eq=False)
class OscillatorState:
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        z = np.array(self.z, dtype=float)
        if x.shape != z.shape or x.ndim != 1:
            raise ParameterError("x and z must be 1-d arrays of equal length")
        if not (np.isfinite(x).all() and np.isfinite(z).all()):
            raise ParameterError("oscillator state must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @classmethod
    def random(cls, n: int, seed: int = 0) -> "OscillatorState":
        """x uniform in [-1, 1], z = 0."""
        x = np.random.default_rng(seed).uniform(-1.0, 1.0, n)
        return cls(x, np.zeros(n))

    def energy(self) -> float:
        return float(self.x @ self.x + self.z @ self.z)


@dataclass(frozen=True)
class EigenvalueEstimate:
    """Distinct eigenvalues located from spectral peaks.

    ``resolution`` is the FFT bin width expressed in eigenvalue units.
    """

    values: np.ndarray
    resolution: float

    @property
    def lambda_max(self) -> float:
        return float(self.values[-1])

    def to_json(self) -> str:
        return json.dumps({"lambda": [float(v) for v in self.values],
                           "resolution": float(self.resolution)}, indent=2)

    def write_json(self, path: str | Path) -> None:
        try:
            Path(path).write_text(self.to_json() + "\n")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc


class LambdaMaxEstimate(NamedTuple):
    value: float
    error_bound: float
    estimate: EigenvalueEstimate


def max_safe_dt(g: Graph) -> float:
    """Step below which the fastest line stays under Nyquist.

    Uses the Gershgorin bound lambda_max <= 2 * max degree, so no
    eigendecomposition is needed.
    """
    return float(np.pi / (1.0 + 2.0 * g.degrees.max(initial=0)))


def _verlet(M, x, z, dt, total_samples):
    # Stormer-Verlet on the rotation x' = M z, z' = -M x; states may be n x r.
    xs = np.empty((total_samples,) + x.shape)
    zs = np.empty_like(xs)
    half = 0.5 * dt
    for k in range(total_samples):
        xs[k] = x
        zs[k] = z
        z = z - half * (M @ x)
        x = x + dt * (M @ z)
        z = z - half * (M @ x)
    return xs, zs


def simulate_oscillator_protocol(g: Graph, init: OscillatorState, dt: float = DEFAULT_DT,
                                 total_samples: int = DEFAULT_SAMPLES
                                 ) -> tuple[TimeSeriesMatrix, TimeSeriesMatrix]:
    """Integrate the protocol with a symplectic (Stormer-Verlet) step.

    One sample is recorded per step, starting with the initial state. Steps
    that would alias the fastest possible line are rejected.
    """
    if init.x.size != g.n:
        raise ParameterError(f"initial state has {init.x.size} entries for {g.n} nodes")
    if total_samples < 2:
        raise ParameterError("need at least 2 samples")
    limit = max_safe_dt(g)
    if not 0 < dt < limit:
        raise ParameterError(f"dt={dt} would alias spectral lines; need 0 < dt < {limit:.4g}")
    M = np.eye(g.n) + laplacian(g)
    xs, zs = _verlet(M, init.x.copy(), init.z.copy(), dt, int(total_samples))
    return TimeSeriesMatrix(xs.T, dt), TimeSeriesMatrix(zs.T, dt)


def _interpolate(mag, p):
    # Parabola through log-magnitudes of the peak bin and its neighbours.
    a, b, c = mag[p - 1], mag[p], mag[p + 1]
    if min(a, b, c) > 0:
        a, b, c = np.log(a), np.log(b), np.log(c)
    denom = a - 2 * b + c
    return 0.5 * (a - c) / denom if denom != 0 else 0.0


def magnitude_spectrum(series: TimeSeriesMatrix | Sequence[TimeSeriesMatrix], dt: float | None = None):
    """Hann-windowed magnitude spectrum averaged over nodes and runs."""
    runs = [series] if isinstance(series, TimeSeriesMatrix) else list(series)
    if not runs:
        raise ParameterError("no trajectories given")
    T = runs[0].sample_count
    if any(r.sample_count != T for r in runs):
        raise ParameterError("all trajectories must have the same length")
    dt = runs[0].dt_sample if dt is None else dt
    window = np.hanning(T)
    rows = np.vstack([r.values for r in runs])
    mag = np.abs(np.fft.rfft(rows * window, axis=1)).mean(axis=0)
    return np.fft.rfftfreq(T, dt), mag


def estimate_eigenvalues_fft(series: TimeSeriesMatrix | Sequence[TimeSeriesMatrix],
                             dt: float | None = None,
                             peak_threshold: float = DEFAULT_PEAK_THRESHOLD,
                             min_separation: int = 2) -> EigenvalueEstimate:
    """Invert spectral peak positions to eigenvalues, lambda = 2 pi f - 1.

    Peaks are local maxima above ``peak_threshold`` times the global maximum,
    at least ``min_separation`` bins apart, refined by parabolic
    interpolation.
    """
    freqs, mag = magnitude_spectrum(series, dt)
    if len(freqs) < 4:
        raise EstimationError("too few samples for a spectrum")
    df = freqs[1] - freqs[0]
    resolution = 2 * np.pi * df
    top = mag.max()
    if not top > 0:
        raise EstimationError("flat zero spectrum; no oscillation recorded")
    peaks, _ = find_peaks(mag, height=peak_threshold * top, distance=min_separation)
    if len(peaks) == 0:
        raise EstimationError("no spectral peaks above threshold")
    f = np.array([freqs[p] + _interpolate(mag, p) * df for p in peaks])
    lam = np.sort(2 * np.pi * f - 1.0)
    if lam[0] < -resolution:
        raise EstimationError(
            f"peak at lambda={lam[0]:.4g} lies below zero by more than one bin ({resolution:.3g})")
    keep = np.concatenate(([True], np.diff(lam) > 0))
    return EigenvalueEstimate(lam[keep], float(resolution))


def estimate_lambda_max(g: Graph, dt: float = DEFAULT_DT, total_samples: int = DEFAULT_SAMPLES,
                        runs: int = DEFAULT_RUNS, peak_threshold: float = DEFAULT_PEAK_THRESHOLD,
                        seed: int = 0) -> LambdaMaxEstimate:
    """Largest Laplacian eigenvalue from the oscillator probe.

    Spectra of ``runs`` independent random initial states are averaged so
    that no eigenmode is missed because of a small initial projection. The
    returned error bound is the frequency resolution in eigenvalue units.
    """
    if runs < 1:
        raise ParameterError("runs must be >= 1")
    seeds = np.random.SeedSequence(seed).generate_state(runs)
    x0 = np.column_stack([OscillatorState.random(g.n, int(s)).x for s in seeds])
    limit = max_safe_dt(g)
    if not 0 < dt < limit:
        raise ParameterError(f"dt={dt} would alias spectral lines; need 0 < dt < {limit:.4g}")
    M = np.eye(g.n) + laplacian(g)
    xs, _ = _verlet(M, x0, np.zeros_like(x0), dt, int(total_samples))
    series = [TimeSeriesMatrix(xs[:, :, r].T, dt) for r in range(runs)]
    est = estimate_eigenvalues_fft(series, dt, peak_threshold)
    return LambdaMaxEstimate(est.lambda_max, est.resolution, est)
