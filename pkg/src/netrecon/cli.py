"""Command-line entry point.

Exit codes: 0 success, 1 parameter error, 2 numerical failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .consensus import SimConfig, read_timeseries_csv, simulate_consensus, write_timeseries_csv
from .errors import NetReconError, OutputError, ParameterError
from .experiment import ExperimentConfig, lambda_error_sweep, load_config, run_experiment
from .graph import Graph, generate, lambda_max, read_edge_list, write_edge_list
from .noise import NoiseConfig
from .probe import estimate_lambda_max
from .reconstruction import (
    correlation_matrix,
    estimate_laplacian,
    read_trace_csv,
    reconstruct_by_eigenvalue,
    write_trace_csv,
)

DEFAULT_LEVELS = "0,0.0022,0.0322,0.07,0.152"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ParameterError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = yaml.safe_load(value)
    return out


def _config(args, extra=None) -> ExperimentConfig:
    overrides = _parse_set(getattr(args, "set", None))
    overrides.update(extra or {})
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    return load_config(args.config, overrides)


def _ensure_parent(path):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create directory for {path}: {exc}") from exc


def _graph_from(args, cfg: ExperimentConfig) -> Graph:
    if getattr(args, "graph", None):
        return read_edge_list(args.graph)
    topo = cfg.topology if args.seed is None else cfg.topology.with_seed(args.seed)
    return generate(topo)


def _sim_config(cfg: ExperimentConfig, seed):
    sim = cfg.sim
    if seed is None:
        return sim
    noise = sim.noise
    if noise is not None:
        noise = NoiseConfig(noise.sigma2, noise.band, seed, noise.numtaps)
    return SimConfig(sim.dt, sim.steps, sim.samples_per_step, sim.transient_discard, noise,
                     sim.initial_state, seed)


def cmd_generate(args):
    extra = {}
    for name in ("kind", "n", "k", "p", "rows", "cols", "target_edges"):
        value = getattr(args, name)
        if value is not None:
            extra[f"topology.{name}"] = value
    if args.require_connected:
        extra["topology.require_connected"] = True
    cfg = _config(args, extra)
    g = _graph_from(args, cfg)
    if args.out:
        _ensure_parent(args.out)
        write_edge_list(g, args.out)
    else:
        print(f"# nodes={g.n}")
        for i, j in g.edges():
            print(i, j)
    logging.info("generated %r", g)


def cmd_simulate(args):
    cfg = _config(args)
    g = _graph_from(args, cfg)
    ts = simulate_consensus(g, _sim_config(cfg, args.seed))
    _ensure_parent(args.out)
    write_timeseries_csv(ts, args.out)


def cmd_reconstruct(args):
    cfg = _config(args)
    ts = read_timeseries_csv(args.timeseries)
    truth = read_edge_list(args.truth) if args.truth else None
    target = args.lambda_target
    if target is None:
        if truth is None:
            raise ParameterError("give --lambda or a --truth graph to take lambda_max from")
        target = lambda_max(truth)
    discard = cfg.sim.transient_discard if args.discard is None else args.discard
    sigma2 = args.sigma2 if args.sigma2 is not None else (cfg.sim.noise.sigma2 if cfg.sim.noise else 1.0)
    l_hat = estimate_laplacian(correlation_matrix(ts, discard), sigma2, cfg.rank_tolerance)
    tol = args.lambda_tolerance if args.lambda_tolerance is not None else cfg.lambda_tolerance * target
    res = reconstruct_by_eigenvalue(l_hat, target, cfg.sweep, tol, truth, cfg.max_relative_g)
    if args.out:
        _ensure_parent(args.out)
        res.write_json(args.out)
    else:
        print(res.to_json())
    if args.trace:
        _ensure_parent(args.trace)
        write_trace_csv(list(res.trace), args.trace)


def cmd_experiment(args):
    extra = {}
    if args.seed is not None:
        extra["seed"] = args.seed
    if args.out:
        extra["output"] = args.out
    cfg = _config(args, extra)
    report = run_experiment(cfg)
    agg = report.aggregate()
    print(json.dumps(agg, indent=2, sort_keys=True))
    if args.plots and cfg.output:
        from .plots import emit_plots

        emit_plots(report, Path(cfg.output) / "plots")


def cmd_sweep(args):
    extra = {}
    if args.seed is not None:
        extra["seed"] = args.seed
    if args.out:
        extra["output"] = args.out
    cfg = _config(args, extra)
    try:
        levels = [float(v) for v in args.levels.split(",") if v.strip()]
    except ValueError as exc:
        raise ParameterError(f"bad --levels: {exc}") from exc
    rows = lambda_error_sweep(cfg, levels)
    print("error_level,mean_errors,worst_errors,exact_fraction")
    for r in rows:
        print(f"{r.level!r},{r.mean_errors!r},{r.worst_errors},{r.exact_fraction!r}")


def cmd_probe(args):
    cfg = _config(args)
    g = _graph_from(args, cfg)
    p = cfg.probe
    est = estimate_lambda_max(g, args.dt or p.dt, args.samples or p.total_samples, args.runs or p.runs,
                              p.peak_threshold, 0 if args.seed is None else args.seed)
    if args.out:
        _ensure_parent(args.out)
        est.estimate.write_json(args.out)
    else:
        print(est.estimate.to_json())


def cmd_plot(args):
    from .plots import emit_plots, plot_noise_demo, plot_topology

    out = Path(args.out or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    did = False
    if args.trace:
        emit_plots(read_trace_csv(args.trace), out)
        did = True
    if args.graph:
        g = read_edge_list(args.graph)
        plot_topology(g, out / "topology.png", args.kind, args.cols)
        did = True
    if args.noise_demo:
        cfg = _config(args)
        stats = plot_noise_demo(out, seed=0 if args.seed is None else args.seed, steps=cfg.sim.steps)
        print(json.dumps(stats, sort_keys=True))
        did = True
    if not did:
        raise ParameterError("plot needs --trace, --graph or --noise-demo")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netrecon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config value, e.g. sim.steps=370")
        return p

    p = common(sub.add_parser("generate", help="write a benchmark topology as an edge list"))
    p.add_argument("--kind", choices=("erdos_renyi", "small_world", "pipeline", "grid"))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--target-edges", dest="target_edges", type=int)
    p.add_argument("--require-connected", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = common(sub.add_parser("simulate", help="simulate noisy consensus on a graph"))
    p.add_argument("--graph", help="edge-list file (default: generate from config)")
    p.set_defaults(func=cmd_simulate, out=None)

    p = common(sub.add_parser("reconstruct", help="reconstruct a graph from a time-series CSV"))
    p.add_argument("--timeseries", required=True)
    p.add_argument("--lambda", dest="lambda_target", type=float)
    p.add_argument("--lambda-tolerance", type=float, help="absolute uncertainty of --lambda")
    p.add_argument("--truth", help="ground-truth edge list for scoring")
    p.add_argument("--sigma2", type=float)
    p.add_argument("--discard", type=int)
    p.add_argument("--trace", help="write the g-versus-threshold CSV here")
    p.set_defaults(func=cmd_reconstruct)

    p = common(sub.add_parser("experiment", help="run a full reconstruction campaign"))
    p.add_argument("--trials", type=int)
    p.add_argument("--plots", action="store_true", help="also render figures into OUT/plots")
    p.set_defaults(func=cmd_experiment)

    p = common(sub.add_parser("sweep-lambda", help="mistaken entries versus eigenvalue error"))
    p.add_argument("--trials", type=int)
    p.add_argument("--levels", default=DEFAULT_LEVELS)
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("probe", help="estimate Laplacian eigenvalues by the oscillator protocol"))
    p.add_argument("--graph")
    p.add_argument("--dt", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--runs", type=int)
    p.set_defaults(func=cmd_probe)

    p = common(sub.add_parser("plot", help="render static figures"))
    p.add_argument("--trace", help="g-trace CSV")
    p.add_argument("--graph", help="edge list to draw")
    p.add_argument("--kind", choices=("erdos_renyi", "small_world", "pipeline", "grid"))
    p.add_argument("--cols", type=int)
    p.add_argument("--noise-demo", action="store_true")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "simulate" and not args.out:
        parser.error("simulate requires --out")
    try:
        args.func(args)
    except NetReconError as exc:
        print(f"netrecon: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"netrecon: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
