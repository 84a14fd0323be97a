"""Noisy first-order consensus dynamics x' = -L x + rho on a fixed graph."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InstabilityError, OutputError, ParameterError
from .graph import Graph, lambda_max, laplacian
from .noise import FULL_BAND, NoiseConfig, Signal, noise_streams


def _default_noise():
    return NoiseConfig(sigma2=0.01, band=FULL_BAND, seed=0)


@dataclass(frozen=True)
class SimConfig:
    """Integration and sampling settings.

    One simulation time-step is one time unit holding ``samples_per_step``
    recorded samples; the integrator advances in increments of ``dt`` between
    samples. The defaults (150 steps, 10 samples per step, dt=0.01) give
    1500 samples spaced 0.1 apart.

    ``noise=None`` runs the deterministic protocol. With a full-band (white)
    noise config, ``sigma2`` is the diffusion intensity and increments are
    scaled by sqrt(dt); a band-limited stream is added as a plain forcing term.
    """

    dt: float = 0.01
    steps: int = 150
    samples_per_step: int = 10
    transient_discard: int = 30
    noise: NoiseConfig | None = field(default_factory=_default_noise)
    initial_state: tuple[float, ...] | None = None
    init_seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.steps < 1 or self.samples_per_step < 1:
            raise ParameterError("steps and samples_per_step must be >= 1")
        if self.transient_discard < 0:
            raise ParameterError("transient_discard must be >= 0")
        if self.sample_count < self.transient_discard + 2:
            raise ParameterError(
                f"{self.sample_count} samples leave fewer than 2 after discarding {self.transient_discard}")
        ratio = self.sample_interval / self.dt
        if ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-6:
            raise ParameterError(
                f"sample interval {self.sample_interval} must be an integer multiple of dt={self.dt}")
        if self.initial_state is not None:
            object.__setattr__(self, "initial_state", tuple(float(v) for v in self.initial_state))

    @property
    def sample_interval(self) -> float:
        return 1.0 / self.samples_per_step

    @property
    def substeps(self) -> int:
        return int(round(self.sample_interval / self.dt))

    @property
    def sample_count(self) -> int:
        return self.steps * self.samples_per_step

    def initial_values(self, n: int) -> np.ndarray:
        if self.initial_state is not None:
            if len(self.initial_state) != n:
                raise ParameterError(f"initial_state has {len(self.initial_state)} entries for {n} nodes")
            return np.array(self.initial_state, dtype=float)
        return np.random.default_rng(self.init_seed).uniform(0.0, 1.0, n)


@dataclass(frozen=True, eq=False)
class TimeSeriesMatrix:
    """Node states, one row per node and one column per sample."""

    values: np.ndarray
    dt_sample: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ParameterError(f"values must be an n x T matrix with T > 0, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ParameterError("time series contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def node_count(self) -> int:
        return self.values.shape[0]

    @property
    def sample_count(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.sample_count) * self.dt_sample

    def node(self, i: int) -> Signal:
        return Signal(self.values[i], self.dt_sample)


def simulate_consensus(g: Graph, cfg: SimConfig = SimConfig()) -> TimeSeriesMatrix:
    """Forward-Euler integration of the consensus protocol with injected noise.

    Sample 0 is the initial state; every node receives its own noise stream.
    Raises ParameterError when dt breaks the Euler stability bound 2/lambda_max
    and InstabilityError if a state turns non-finite.
    """
    n = g.n
    lam = lambda_max(g)
    if lam > 0 and cfg.dt >= 2.0 / lam:
        raise ParameterError(
            f"dt={cfg.dt} violates the Euler stability bound dt < 2/lambda_max = {2.0 / lam:.4g}")
    if not g.is_connected():
        warnings.warn(f"graph has {g.component_count()} components; "
                      "each converges to its own consensus value", stacklevel=2)

    L = laplacian(g)
    h = cfg.dt
    sub = cfg.substeps
    T = cfg.sample_count
    x = cfg.initial_values(n)
    out = np.empty((n, T))
    out[:, 0] = x

    n_int = (T - 1) * sub
    rho = None
    if cfg.noise is not None and n_int > 0:
        rho = noise_streams(n, max(n_int, cfg.noise.numtaps), cfg.noise)[:, :n_int]
        gain = np.sqrt(h) if cfg.noise.is_white else h

    for k in range(1, T):
        base = (k - 1) * sub
        for s in range(sub):
            x = x - h * (L @ x)
            if rho is not None:
                x = x + gain * rho[:, base + s]
        if not np.isfinite(x).all():
            raise InstabilityError(f"non-finite state at sample {k} (integration step {base + sub})",
                                   step=base + sub)
        out[:, k] = x
    return TimeSeriesMatrix(out, cfg.sample_interval)


def consensus_disagreement(ts: TimeSeriesMatrix) -> Signal:
    """Per-sample spread max_i x_i - min_i x_i."""
    v = ts.values
    return Signal(v.max(axis=0) - v.min(axis=0), ts.dt_sample)


def decay_rate(disagreement: Signal, upper: float = 1e-6, lower: float = 1e-11) -> float:
    """Exponential decay rate of a disagreement signal.

    Fits log(spread) against time over the samples whose spread, relative to
    the initial spread, lies between ``lower`` and ``upper``. The default
    window is late on purpose: when the initial state barely projects onto
    the slowest mode, faster modes dominate the spread for a long time.
    """
    d = disagreement.samples
    if d[0] <= 0:
        return float("inf")
    rel = d / d[0]
    mask = (rel <= upper) & (rel >= lower)
    if mask.sum() < 3:
        raise ParameterError("not enough late-time samples to fit a decay rate")
    slope = np.polyfit(disagreement.times[mask], np.log(d[mask]), 1)[0]
    return float(-slope)


def write_timeseries_csv(ts: TimeSeriesMatrix, path: str | Path) -> None:
    header = ["t"] + [f"node_{i}" for i in range(ts.node_count)]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for t, col in zip(ts.times, ts.values.T):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in col])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_timeseries_csv(path: str | Path) -> TimeSeriesMatrix:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0][0] != "t" or not all(c.startswith("node_") for c in rows[0][1:]):
        raise ParameterError(f"{path}: expected header 't,node_0,...'")
    data = np.array(rows[1:], dtype=float)
    if data.shape[0] < 1:
        raise ParameterError(f"{path}: no samples")
    dt = float(data[1, 0] - data[0, 0]) if data.shape[0] > 1 else 1.0
    return TimeSeriesMatrix(data[:, 1:].T, dt)
