"""Topology reconstruction from consensus fluctuations and one eigenvalue.

Pipeline: fluctuation correlation C -> Laplacian estimate (sigma2/2) C^+ ->
threshold sweep on the normalized off-diagonal entries, keeping the candidate
whose largest Laplacian eigenvalue best matches a known target.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .consensus import TimeSeriesMatrix
from .errors import OutputError, ParameterError, ReconstructionError
from .graph import Graph, pseudoinverse

# Relative slack for calling two eigenvalues equal.
EIG_TOL = 1e-9


@dataclass(frozen=True)
class ThresholdSweep:
    start: float = 0.05
    stop: float = 0.95
    step: float = 0.005

    def __post_init__(self):
        if not (0 < self.start <= self.stop) or not self.step > 0:
            raise ParameterError(f"invalid sweep {self}")

    def taus(self) -> np.ndarray:
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(count), 10)


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    c: np.ndarray
    sample_count: int
    discard: int


@dataclass(frozen=True, eq=False)
class LaplacianEstimate:
    l_hat: np.ndarray
    sigma2: float
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class TraceRecord:
    tau: float
    g: float
    edge_count: int
    lambda_candidate: float
    error_count: int | None = None


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    adjacency: Graph
    threshold: float
    g_value: float
    lambda_target: float
    lambda_achieved: float
    lambda_tolerance: float = 0.0
    errors_vs_truth: int | None = None
    warnings: tuple[str, ...] = ()
    trace: tuple[TraceRecord, ...] = field(default=(), repr=False)

    @property
    def exact(self) -> bool:
        return self.errors_vs_truth == 0

    def to_dict(self) -> dict:
        return {
            "nodes": self.adjacency.n,
            "edges": [list(e) for e in self.adjacency.edges()],
            "edge_count": self.adjacency.edge_count,
            "threshold": float(self.threshold),
            "g_value": float(self.g_value),
            "lambda_target": float(self.lambda_target),
            "lambda_achieved": float(self.lambda_achieved),
            "lambda_tolerance": float(self.lambda_tolerance),
            "errors_vs_truth": self.errors_vs_truth,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_json(self, path: str | Path) -> None:
        try:
            Path(path).write_text(self.to_json() + "\n")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc


def correlation_matrix(ts: TimeSeriesMatrix, discard: int = 30) -> CorrelationMatrix:
    """Time-averaged outer product of fluctuations about the network mean.

    The first ``discard`` samples are dropped. Subtracting the instantaneous
    average removes the consensus mode, which would otherwise random-walk.
    """
    if discard < 0:
        raise ParameterError("discard must be >= 0")
    if ts.sample_count <= discard + 1:
        raise ParameterError(f"{ts.sample_count} samples are not enough after discarding {discard}")
    x = ts.values[:, discard:]
    zeta = x - x.mean(axis=0, keepdims=True)
    c = zeta @ zeta.T / zeta.shape[1]
    return CorrelationMatrix(0.5 * (c + c.T), zeta.shape[1], discard)


def estimate_laplacian(c: CorrelationMatrix | np.ndarray, sigma2: float = 0.01,
                       rank_tolerance: float | None = None) -> LaplacianEstimate:
    """L_hat = (sigma2 / 2) * pinv(C).

    A connected network leaves exactly one null direction in C; extra
    near-zero modes are reported as a conditioning warning.
    """
    if not sigma2 > 0:
        raise ParameterError(f"sigma2 must be positive, got {sigma2}")
    m = c.c if isinstance(c, CorrelationMatrix) else np.asarray(c, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    tol = rank_tolerance if rank_tolerance is not None else 1e-8 * np.abs(w).max(initial=0.0)
    notes = []
    null_dim = int(np.sum(np.abs(w) <= tol))
    if null_dim > 1:
        notes.append(f"correlation matrix has {null_dim} near-zero modes (expected 1)")
    l_hat = 0.5 * sigma2 * pseudoinverse(m, tol)
    return LaplacianEstimate(l_hat, float(sigma2), tuple(notes))


def normalized_offdiagonal(l_hat: LaplacianEstimate | np.ndarray) -> np.ndarray:
    """Off-diagonal entries scaled so the most negative one is -1; diagonal zeroed."""
    m = l_hat.l_hat if isinstance(l_hat, LaplacianEstimate) else np.asarray(l_hat, dtype=float)
    off = 0.5 * (m + m.T)
    np.fill_diagonal(off, 0.0)
    low = off.min()
    if not low < 0:
        raise ReconstructionError("estimated Laplacian has no negative off-diagonal entry")
    return off / -low


def count_errors(estimated: Graph, truth: Graph) -> int:
    """Hamming distance over the (n^2 - n)/2 upper-triangular entries."""
    if estimated.n != truth.n:
        raise ParameterError(f"node counts differ: {estimated.n} vs {truth.n}")
    diff = estimated.adjacency != truth.adjacency
    return int(np.triu(diff, 1).sum())


class _Candidates:
    """Nested threshold candidates indexed by edge count.

    Thresholding one matrix at increasing tau removes edges in a fixed order,
    so the edge count identifies a candidate uniquely.
    """

    def __init__(self, l_hat):
        off = normalized_offdiagonal(l_hat)
        self.n = off.shape[0]
        iu, ju = np.triu_indices(self.n, 1)
        vals = off[iu, ju]
        order = np.argsort(vals, kind="stable")
        self.iu, self.ju = iu[order], ju[order]
        self.sorted_vals = vals[order]
        self._lam = {}

    def edge_count(self, tau):
        return int(np.searchsorted(self.sorted_vals, -tau, side="right"))

    def adjacency(self, m):
        a = np.zeros((self.n, self.n), dtype=np.int8)
        a[self.iu[:m], self.ju[:m]] = 1
        return a + a.T

    def lambda_max(self, m):
        if m not in self._lam:
            a = self.adjacency(m).astype(float)
            self._lam[m] = float(np.linalg.eigvalsh(np.diag(a.sum(1)) - a)[-1])
        return self._lam[m]


def _trace(cands, lambda_target, sweep, truth):
    records = []
    errors = {}
    for tau in sweep.taus():
        m = cands.edge_count(tau)
        lam = cands.lambda_max(m)
        err = None
        if truth is not None:
            if m not in errors:
                errors[m] = count_errors(Graph(cands.adjacency(m)), truth)
            err = errors[m]
        records.append(TraceRecord(float(tau), abs(lambda_target - lam), m, lam, err))
    return records


def g_trace(l_hat: LaplacianEstimate | np.ndarray, lambda_target: float,
            sweep: ThresholdSweep = ThresholdSweep(), truth: Graph | None = None) -> list[TraceRecord]:
    """Cost g(tau) = |lambda_target - lambda_max(A(tau))| over the sweep."""
    cands = _Candidates(l_hat)
    if truth is not None and truth.n != cands.n:
        raise ParameterError(f"truth has {truth.n} nodes, estimate has {cands.n}")
    return _trace(cands, lambda_target, sweep, truth)


def reconstruct_by_eigenvalue(l_hat: LaplacianEstimate | np.ndarray, lambda_target: float,
                              sweep: ThresholdSweep = ThresholdSweep(),
                              lambda_tolerance: float = 0.0,
                              truth: Graph | None = None,
                              max_relative_g: float = 0.5) -> ReconstructionResult:
    """Pick the adjacency whose largest Laplacian eigenvalue matches the target.

    Thresholds whose cost is within ``lambda_tolerance`` of the minimum are
    tied (with ``lambda_tolerance=0`` only numerically equal costs tie).
    Among tied thresholds the most frequent edge count wins, which selects the
    widest plateau of identical candidates; remaining ties go to the smallest
    threshold. ``lambda_tolerance`` should be the absolute uncertainty of the
    target eigenvalue, e.g. the probe resolution.
    """
    if not lambda_target > 0:
        raise ParameterError(f"lambda_target must be positive, got {lambda_target}")
    if lambda_tolerance < 0:
        raise ParameterError("lambda_tolerance must be >= 0")
    cands = _Candidates(l_hat)
    if truth is not None and truth.n != cands.n:
        raise ParameterError(f"truth has {truth.n} nodes, estimate has {cands.n}")
    records = _trace(cands, lambda_target, sweep, truth)
    usable = [r for r in records if r.edge_count > 0]
    g_min = min((r.g for r in usable), default=np.inf)
    if not usable or g_min > max_relative_g * lambda_target:
        raise ReconstructionError(
            f"no usable threshold candidate (best g={g_min:.4g} for target {lambda_target:.4g})",
            trace=records)

    slack = max(lambda_tolerance, EIG_TOL * max(1.0, lambda_target))
    tied = [r for r in usable if r.g <= g_min + slack]
    counts = Counter(r.edge_count for r in tied)
    top = max(counts.values())
    modes = {m for m, c in counts.items() if c == top}
    best = min((r for r in tied if r.edge_count in modes), key=lambda r: (r.g, r.tau))
    chosen = min((r for r in tied if r.edge_count == best.edge_count), key=lambda r: r.tau)

    adjacency = Graph(cands.adjacency(chosen.edge_count))
    notes = list(l_hat.warnings) if isinstance(l_hat, LaplacianEstimate) else []
    if not adjacency.is_connected():
        notes.append(f"reconstructed graph has {adjacency.component_count()} components")
    return ReconstructionResult(
        adjacency=adjacency,
        threshold=chosen.tau,
        g_value=chosen.g,
        lambda_target=float(lambda_target),
        lambda_achieved=chosen.lambda_candidate,
        lambda_tolerance=float(lambda_tolerance),
        errors_vs_truth=chosen.error_count,
        warnings=tuple(notes),
        trace=tuple(records),
    )


def write_trace_csv(records: list[TraceRecord], path: str | Path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "g", "error_count"])
            for r in records:
                w.writerow([repr(r.tau), repr(r.g), "" if r.error_count is None else r.error_count])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_trace_csv(path: str | Path) -> list[TraceRecord]:
    """Load a ``tau,g,error_count`` file; candidate details are not stored there."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    return [TraceRecord(float(r["tau"]), float(r["g"]), -1, float("nan"),
                        int(r["error_count"]) if r["error_count"] else None) for r in rows]
