"""Configuration-driven reconstruction campaigns and lambda-error sweeps."""

from __future__ import annotations

import copy
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .consensus import SimConfig, TimeSeriesMatrix, simulate_consensus, write_timeseries_csv
from .errors import NetReconError, OutputError, ParameterError
from .graph import Graph, GeneratorParams, generate, lambda_max, write_edge_list
from .noise import NoiseConfig
from .probe import estimate_lambda_max
from .reconstruction import (
    LaplacianEstimate,
    ReconstructionResult,
    ThresholdSweep,
    correlation_matrix,
    estimate_laplacian,
    reconstruct_by_eigenvalue,
    write_trace_csv,
)

log = logging.getLogger(__name__)

LAMBDA_SOURCES = ("oracle", "probe", "oracle_perturbed")


@dataclass(frozen=True)
class ProbeParams:
    dt: float = 0.01
    total_samples: int = 60_000
    runs: int = 4
    peak_threshold: float = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun a campaign bit-for-bit.

    ``lambda_tolerance`` is the declared relative uncertainty of the target
    eigenvalue handed to the reconstruction; with the probe source the probe
    resolution is used when it is larger.
    """

    topology: GeneratorParams = field(default_factory=GeneratorParams)
    sim: SimConfig = field(default_factory=SimConfig)
    lambda_source: str = "oracle"
    relative_error: float = 0.0
    lambda_tolerance: float = 0.0
    probe: ProbeParams = field(default_factory=ProbeParams)
    sweep: ThresholdSweep = field(default_factory=ThresholdSweep)
    rank_tolerance: float | None = None
    max_relative_g: float = 0.5
    trials: int = 10
    seed: int = 0
    output: str | None = None
    save_timeseries: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.lambda_source not in LAMBDA_SOURCES:
            raise ParameterError(f"lambda_source must be one of {LAMBDA_SOURCES}, got {self.lambda_source!r}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.relative_error < 0 or self.lambda_tolerance < 0:
            raise ParameterError("relative_error and lambda_tolerance must be >= 0")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        data = copy.deepcopy(data or {})
        _reject_unknown(cls, data, "config")
        if "topology" in data:
            _reject_unknown(GeneratorParams, data["topology"], "topology")
            data["topology"] = GeneratorParams(**data["topology"])
        if "sim" in data:
            sim = data["sim"]
            _reject_unknown(SimConfig, sim, "sim")
            if "noise" in sim and sim["noise"] is not None:
                _reject_unknown(NoiseConfig, sim["noise"], "sim.noise")
                sim["noise"] = NoiseConfig(**{**sim["noise"], "band": tuple(sim["noise"].get("band", NoiseConfig().band))})
            if sim.get("initial_state") is not None:
                sim["initial_state"] = tuple(sim["initial_state"])
            data["sim"] = SimConfig(**sim)
        if "probe" in data:
            _reject_unknown(ProbeParams, data["probe"], "probe")
            data["probe"] = ProbeParams(**data["probe"])
        if "sweep" in data:
            _reject_unknown(ThresholdSweep, data["sweep"], "sweep")
            data["sweep"] = ThresholdSweep(**data["sweep"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ParameterError(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        if d["sim"]["noise"] is not None:
            d["sim"]["noise"]["band"] = list(d["sim"]["noise"]["band"])
        if d["sim"]["initial_state"] is not None:
            d["sim"]["initial_state"] = list(d["sim"]["initial_state"])
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig.from_dict({**self.to_dict(), **changes})


def _reject_unknown(cls, data, where):
    if not isinstance(data, dict):
        raise ParameterError(f"{where} must be a mapping")
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ParameterError(f"unknown key(s) in {where}: {', '.join(extra)}")


def load_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Read a YAML config and apply dotted-key overrides such as ``sim.steps``."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as exc:
            raise OutputError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ParameterError(f"malformed config {path}: {exc}") from exc
    for key, value in (overrides or {}).items():
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ParameterError(f"cannot override {key}: {part} is not a section")
        node[parts[-1]] = value
    return ExperimentConfig.from_dict(data)


def trial_seeds(base_seed: int, trial: int) -> dict[str, int]:
    """Independent per-trial seeds derived from the campaign seed."""
    g, init, noise, probe = np.random.SeedSequence([int(base_seed), int(trial)]).generate_state(4)
    return {"graph": int(g), "init": int(init), "noise": int(noise), "probe": int(probe)}


@dataclass
class TrialRecord:
    trial: int
    seeds: dict[str, int]
    status: str
    nodes: int | None = None
    edges: int | None = None
    lambda_true: float | None = None
    lambda_target: float | None = None
    samples_used: int | None = None
    result: ReconstructionResult | None = None
    error: str | None = None

    @property
    def mistakes(self) -> int | None:
        return None if self.result is None else self.result.errors_vs_truth

    def to_dict(self) -> dict[str, Any]:
        return {
            "trial": self.trial,
            "seeds": self.seeds,
            "status": self.status,
            "nodes": self.nodes,
            "edges": self.edges,
            "lambda_true": self.lambda_true,
            "lambda_target": self.lambda_target,
            "samples_used": self.samples_used,
            "result": None if self.result is None else self.result.to_dict(),
            "error": self.error,
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    trials: list[TrialRecord]

    def aggregate(self) -> dict[str, Any]:
        ok = [t for t in self.trials if t.status == "ok"]
        mistakes = [t.mistakes for t in ok]
        exact = sum(1 for m in mistakes if m == 0)
        return {
            "trials": len(self.trials),
            "completed": len(ok),
            "failed": len(self.trials) - len(ok),
            "exact": exact,
            "exact_fraction": exact / len(self.trials),
            "mean_errors": float(np.mean(mistakes)) if mistakes else None,
            "samples_used": self.config.sim.sample_count - self.config.sim.transient_discard,
        }

    def to_dict(self) -> dict[str, Any]:
        return {"config": self.config.to_dict(), "aggregate": self.aggregate(),
                "trials": [t.to_dict() for t in self.trials]}


@dataclass
class _Prepared:
    graph: Graph
    series: TimeSeriesMatrix
    l_hat: LaplacianEstimate
    lambda_true: float


def _prepare(cfg: ExperimentConfig, seeds: dict[str, int]) -> _Prepared:
    graph = generate(cfg.topology.with_seed(seeds["graph"]))
    noise = cfg.sim.noise
    if noise is not None:
        noise = NoiseConfig(noise.sigma2, noise.band, seeds["noise"], noise.numtaps)
    sim = SimConfig(dt=cfg.sim.dt, steps=cfg.sim.steps, samples_per_step=cfg.sim.samples_per_step,
                    transient_discard=cfg.sim.transient_discard, noise=noise,
                    initial_state=cfg.sim.initial_state, init_seed=seeds["init"])
    series = simulate_consensus(graph, sim)
    corr = correlation_matrix(series, cfg.sim.transient_discard)
    sigma2 = noise.sigma2 if noise is not None else 1.0
    l_hat = estimate_laplacian(corr, sigma2, cfg.rank_tolerance)
    return _Prepared(graph, series, l_hat, lambda_max(graph))


def _reconstruct(cfg, prep, target, tolerance):
    return reconstruct_by_eigenvalue(prep.l_hat, target, cfg.sweep, tolerance, truth=prep.graph,
                                     max_relative_g=cfg.max_relative_g)


def _worse(a: ReconstructionResult, b: ReconstructionResult) -> ReconstructionResult:
    return b if (b.errors_vs_truth or 0) > (a.errors_vs_truth or 0) else a


def run_trial(cfg: ExperimentConfig, trial: int) -> tuple[TrialRecord, _Prepared | None]:
    seeds = trial_seeds(cfg.seed, trial)
    rec = TrialRecord(trial, seeds, "ok")
    try:
        prep = _prepare(cfg, seeds)
        rec.nodes, rec.edges = prep.graph.n, prep.graph.edge_count
        rec.lambda_true = prep.lambda_true
        rec.samples_used = prep.series.sample_count - cfg.sim.transient_discard
        if cfg.lambda_source == "probe":
            est = estimate_lambda_max(prep.graph, cfg.probe.dt, cfg.probe.total_samples, cfg.probe.runs,
                                      cfg.probe.peak_threshold, seeds["probe"])
            rec.lambda_target = est.value
            tol = max(cfg.lambda_tolerance * est.value, est.error_bound)
            rec.result = _reconstruct(cfg, prep, est.value, tol)
        elif cfg.lambda_source == "oracle_perturbed" and cfg.relative_error > 0:
            results = []
            for sign in (1, -1):
                target = prep.lambda_true * (1 + sign * cfg.relative_error)
                results.append(_reconstruct(cfg, prep, target, cfg.lambda_tolerance * target))
            rec.result = _worse(*results)
            rec.lambda_target = rec.result.lambda_target
        else:
            rec.lambda_target = prep.lambda_true
            rec.result = _reconstruct(cfg, prep, prep.lambda_true, cfg.lambda_tolerance * prep.lambda_true)
        return rec, prep
    except (NetReconError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        rec.status = "error"
        rec.error = f"{type(exc).__name__}: {exc}"
        log.warning("trial %d failed: %s", trial, rec.error)
        return rec, None


def _run_and_write(args):
    cfg, trial, out = args
    rec, prep = run_trial(cfg, trial)
    if out is not None:
        _write_trial(cfg, out, rec, prep)
    log.info("trial %d: %s, mistakes=%s", trial, rec.status, rec.mistakes)
    return rec


def _dump_json(obj, path):
    try:
        Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _trial_dir(out: Path, trial: int) -> Path:
    d = out / f"trial_{trial:03d}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_trial(cfg: ExperimentConfig, out: Path, rec: TrialRecord, prep: _Prepared | None) -> None:
    d = _trial_dir(out, rec.trial)
    _dump_json(rec.to_dict(), d / "result.json")
    if prep is not None:
        write_edge_list(prep.graph, d / "graph.edges")
        if cfg.save_timeseries:
            write_timeseries_csv(prep.series, d / "timeseries.csv")
    if rec.result is not None:
        write_trace_csv(list(rec.result.trace), d / "g_trace.csv")


def _prepare_output(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc}") from exc
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every trial; failures are recorded per trial, never raised.

    When ``cfg.output`` is set, per-trial artifacts go to ``trial_NNN/`` and
    the campaign summary to ``report.json`` and ``summary.csv``.
    """
    out = _prepare_output(cfg.output) if cfg.output else None
    jobs = [(cfg, t, out) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(_run_and_write, jobs))
    else:
        records = [_run_and_write(job) for job in jobs]
    report = ExperimentReport(cfg, records)
    if out is not None:
        write_report(report, out)
    return report


def write_report(report: ExperimentReport, out: Path) -> None:
    _dump_json(report.to_dict(), out / "report.json")
    try:
        with open(out / "summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "status", "nodes", "edges", "lambda_true", "lambda_target",
                        "threshold", "g_value", "mistakes"])
            for t in report.trials:
                r = t.result
                w.writerow([t.trial, t.status, t.nodes, t.edges,
                            "" if t.lambda_true is None else repr(t.lambda_true),
                            "" if t.lambda_target is None else repr(t.lambda_target),
                            "" if r is None else repr(r.threshold),
                            "" if r is None else repr(r.g_value),
                            "" if r is None else r.errors_vs_truth])
    except OSError as exc:
        raise OutputError(f"cannot write summary: {exc}") from exc


@dataclass(frozen=True)
class SweepRow:
    level: float
    mean_errors: float
    worst_errors: int
    exact_fraction: float


def lambda_error_sweep(cfg: ExperimentConfig, error_levels: list[float]) -> list[SweepRow]:
    """Mistaken entries versus relative error of the target eigenvalue.

    Each trial is simulated once; only the target changes across levels.
    Both signs of every level are tried and the worse count is kept. The
    reconstruction uses ``cfg.lambda_tolerance`` as its declared uncertainty
    regardless of the injected error.
    """
    if any(level < 0 for level in error_levels):
        raise ParameterError("error levels must be >= 0")
    per_level: dict[float, list[int]] = {float(level): [] for level in error_levels}
    for t in range(cfg.trials):
        seeds = trial_seeds(cfg.seed, t)
        try:
            prep = _prepare(cfg, seeds)
        except NetReconError as exc:
            log.warning("trial %d failed: %s", t, exc)
            continue
        for level in per_level:
            worst = 0
            for sign in ((1,) if level == 0 else (1, -1)):
                target = prep.lambda_true * (1 + sign * level)
                try:
                    res = _reconstruct(cfg, prep, target, cfg.lambda_tolerance * target)
                    worst = max(worst, res.errors_vs_truth)
                except NetReconError:
                    worst = max(worst, prep.graph.n * (prep.graph.n - 1) // 2)
            per_level[level].append(worst)
    rows = []
    for level, errs in per_level.items():
        if not errs:
            raise NetReconError("every trial failed; nothing to report")
        rows.append(SweepRow(level, float(np.mean(errs)), int(max(errs)),
                             sum(e == 0 for e in errs) / len(errs)))
    if cfg.output:
        out = _prepare_output(cfg.output)
        try:
            with open(out / "lambda_sweep.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["error_level", "mean_errors", "worst_errors", "exact_fraction"])
                for r in rows:
                    w.writerow([repr(r.level), repr(r.mean_errors), r.worst_errors, repr(r.exact_fraction)])
        except OSError as exc:
            raise OutputError(f"cannot write sweep table: {exc}") from exc
    return rows
