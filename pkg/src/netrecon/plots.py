"""Static figures: cost curves, noise/filter demonstration and topology drawings."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import networkx as nx  # noqa: E402
import numpy as np  # noqa: E402

from .consensus import SimConfig, simulate_consensus  # noqa: E402
from .errors import OutputError  # noqa: E402
from .graph import Graph, gen_small_world, generate  # noqa: E402
from .noise import NoiseConfig, Signal, gen_hf_noise, low_pass, psd, write_psd_csv, write_signal_csv  # noqa: E402
from .reconstruction import TraceRecord, write_trace_csv  # noqa: E402


def _save(fig, path):
    try:
        fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    except OSError as exc:
        raise OutputError(f"cannot write figure {path}: {exc}") from exc
    finally:
        plt.close(fig)


def plot_g_trace(records: list[TraceRecord], path: str | Path, title: str = "") -> None:
    """Cost g(tau) with the mistaken-entry count overlaid when known."""
    tau = np.array([r.tau for r in records])
    g = np.array([r.g for r in records])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(tau, g, "b-", label="|lambda_N - lambda_N*|")
    ax.axvline(tau[np.argmin(g)], color="g", ls="--", label="min g")
    ax.set_xlabel("threshold tau")
    ax.set_ylabel("eigenvalue error")
    if records and records[0].error_count is not None:
        top = max(r.error_count for r in records) or 1
        err = np.array([r.error_count for r in records], dtype=float)
        ax2 = ax.twinx()
        ax2.plot(tau, err, "k:", label="mistaken entries")
        ax2.set_ylabel("mistaken entries")
        if (err == 0).any():
            ax.axvline(tau[np.argmax(err == 0)], color="r", ls=":", label="zero error")
        ax2.set_ylim(bottom=0, top=top * 1.05)
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_noise_demo(out_dir: str | Path, graph: Graph | None = None, node: int = 0,
                    band=(0.35, 0.49), sigma2: float = 0.01, cutoff: float = 0.2,
                    steps: int = 150, seed: int = 0) -> dict[str, float]:
    """Clean consensus trace plus HF noise, its PSD and the low-pass recovery.

    Writes noise_demo.png, clean.csv, noisy.csv, filtered.csv and psd.csv.
    Returns the recovery RMS error relative to the noise RMS.
    """
    out = Path(out_dir)
    graph = graph if graph is not None else gen_small_world(24, 4, 0.1, seed)
    clean = simulate_consensus(graph, SimConfig(steps=steps, noise=None, init_seed=seed)).node(node)
    noise = gen_hf_noise(len(clean), NoiseConfig(sigma2, band, seed + 1), clean.dt)
    noisy = Signal(clean.samples + noise.samples, clean.dt)
    filtered = low_pass(noisy, cutoff)
    spectrum = psd(noise, 256)
    d = int(filtered.delay)
    err = filtered.samples[d:] - clean.samples[: len(clean) - d]
    ratio = float(np.sqrt(np.mean(err ** 2)) / np.sqrt(np.mean(noise.samples ** 2)))

    write_signal_csv(clean, out / "clean.csv")
    write_signal_csv(noisy, out / "noisy.csv")
    write_signal_csv(filtered, out / "filtered.csv")
    write_psd_csv(spectrum, out / "psd.csv")

    fig, axes = plt.subplots(1, 3, figsize=(14, 3.8))
    axes[0].plot(noisy.times, noisy.samples, lw=0.6)
    axes[0].set_title("consensus signal with HF noise")
    axes[0].set_xlabel("time")
    axes[1].semilogy(spectrum.freqs, spectrum.power)
    axes[1].set_title("PSD of injected noise")
    axes[1].set_xlabel("normalized frequency")
    axes[2].plot(filtered.times, filtered.samples, label="low-passed")
    axes[2].plot(clean.times + d * clean.dt, clean.samples, "r:", label="clean (delayed)")
    axes[2].set_title(f"recovered, delay {d} samples")
    axes[2].legend(fontsize=8)
    _save(fig, out / "noise_demo.png")
    return {"recovery_rms_ratio": ratio, "delay_samples": float(filtered.delay)}


def _layout(g: Graph, kind: str | None, cols: int | None):
    if kind == "grid" and cols:
        return {v: (v % cols, -(v // cols)) for v in range(g.n)}
    if kind == "small_world":
        return nx.circular_layout(range(g.n))
    if kind == "pipeline":
        return {v: (v, (v % 2) * 0.5) for v in range(g.n)}
    return nx.spring_layout(g.to_networkx(), seed=0)


def plot_topology(g: Graph, path: str | Path, kind: str | None = None, cols: int | None = None,
                  title: str = "") -> dict[str, int]:
    """Draw the graph; returns the node and edge counts that were rendered."""
    nxg = g.to_networkx()
    fig, ax = plt.subplots(figsize=(5, 5))
    nx.draw_networkx(nxg, pos=_layout(g, kind, cols), ax=ax, node_size=120, font_size=6, width=0.8)
    ax.set_title(title or f"{g.n} nodes, {g.edge_count} links")
    ax.set_axis_off()
    _save(fig, path)
    return {"nodes": nxg.number_of_nodes(), "edges": nxg.number_of_edges()}


def emit_plots(report, out_dir: str | Path) -> list[Path]:
    """Render cost curves for every completed trial plus a topology drawing.

    ``report`` is an ExperimentReport or a plain list of TraceRecord.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    written = []
    if isinstance(report, list):
        write_trace_csv(report, out / "g_trace.csv")
        plot_g_trace(report, out / "g_trace.png")
        return [out / "g_trace.csv", out / "g_trace.png"]
    topo = report.config.topology
    for t in report.trials:
        if t.result is None:
            continue
        p = out / f"g_trace_{t.trial:03d}.png"
        plot_g_trace(list(t.result.trace), p, f"trial {t.trial}: {t.mistakes} mistaken entries")
        written.append(p)
    first = next((t for t in report.trials if t.result is not None), None)
    if first is not None:
        g = generate(topo.with_seed(first.seeds["graph"]))
        p = out / "topology.png"
        cols = topo.cols or int(round(np.sqrt(g.n)))
        plot_topology(g, p, topo.kind, cols)
        written.append(p)
    return written
