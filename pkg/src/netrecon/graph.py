"""Undirected simple graphs, benchmark topology generators and Laplacian spectra."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import NumericalError, OutputError, ParameterError

__all__ = [
    "Graph",
    "LaplacianSpectrum",
    "GeneratorParams",
    "TOPOLOGIES",
    "gen_erdos_renyi",
    "gen_small_world",
    "gen_grid",
    "gen_pipeline",
    "generate",
    "laplacian",
    "spectrum",
    "lambda_max",
    "pseudoinverse",
    "read_edge_list",
    "write_edge_list",
]

ZERO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph stored as a read-only 0/1 adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=np.int8, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ParameterError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if not np.isin(a, (0, 1)).all():
            raise ParameterError("adjacency entries must be 0 or 1")
        if not np.array_equal(a, a.T):
            raise ParameterError("adjacency must be symmetric")
        if np.any(np.diag(a)):
            raise ParameterError("adjacency must have a zero diagonal")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        a = np.zeros((n, n), dtype=np.int8)
        for i, j in edges:
            if i == j:
                raise ParameterError(f"self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ParameterError(f"edge ({i}, {j}) out of range for {n} nodes")
            a[i, j] = a[j, i] = 1
        return cls(a)

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        nodes = sorted(g.nodes())
        index = {v: k for k, v in enumerate(nodes)}
        return cls.from_edges(len(nodes), ((index[u], index[v]) for u, v in g.edges()))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges())
        return g

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(np.int64)

    def edges(self) -> list[tuple[int, int]]:
        """Upper-triangular edge list in row-major order."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def component_count(self) -> int:
        return int(connected_components(self.adjacency, directed=False)[0])

    def is_connected(self) -> bool:
        return self.component_count() == 1

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.n, self.adjacency.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count})"


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Ascending Laplacian eigenvalues, repeated values kept."""

    eigenvalues: np.ndarray

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def fiedler(self) -> float:
        return float(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else 0.0

    def zero_count(self, tol: float = ZERO_TOL) -> int:
        scale = max(1.0, abs(self.lambda_max))
        return int(np.sum(np.abs(self.eigenvalues) <= tol * scale))

    def distinct(self, tol: float = 1e-6) -> np.ndarray:
        """Eigenvalues with multiplicities merged (values closer than ``tol``)."""
        ev = self.eigenvalues
        keep = np.concatenate(([True], np.diff(ev) > tol))
        return ev[keep]


TOPOLOGIES = ("erdos_renyi", "small_world", "pipeline", "grid")


@dataclass(frozen=True)
class GeneratorParams:
    """Parameters for one of the four benchmark topologies.

    ``rows``/``cols`` are used only by the grid; ``k`` is the ring degree for
    small_world and the band width for pipeline. ``target_edges`` trims a
    pipeline band; ``require_connected`` re-draws Erdos-Renyi graphs.
    """

    kind: str = "small_world"
    n: int = 24
    p: float = 0.1
    k: int = 4
    seed: int = 0
    rows: int | None = None
    cols: int | None = None
    target_edges: int | None = None
    require_connected: bool = False

    def __post_init__(self):
        if self.kind not in TOPOLOGIES:
            raise ParameterError(f"unknown topology {self.kind!r}; expected one of {TOPOLOGIES}")
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")

    def with_seed(self, seed: int) -> "GeneratorParams":
        return GeneratorParams(**{**self.__dict__, "seed": int(seed)})


def _check_n(n: int, minimum: int = 3) -> None:
    if int(n) != n or n < minimum:
        raise ParameterError(f"node count must be an integer >= {minimum}, got {n}")


def gen_erdos_renyi(n: int, p: float, seed: int, require_connected: bool = False,
                    max_attempts: int = 1000) -> Graph:
    """G(n, p) random graph; each pair is an edge independently with probability p.

    With ``require_connected`` the seed is incremented until a connected draw
    appears, so the result is still a deterministic function of the inputs.
    """
    _check_n(n)
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    for attempt in range(max_attempts if require_connected else 1):
        g = Graph.from_networkx(nx.gnp_random_graph(int(n), float(p), seed=int(seed) + attempt))
        if not require_connected or g.is_connected():
            return g
    raise ParameterError(f"no connected G({n}, {p}) found in {max_attempts} draws")


def gen_small_world(n: int, k: int, p: float, seed: int) -> Graph:
    """Watts-Strogatz ring of degree ``k`` with rewiring probability ``p``.

    Rewiring avoids self-loops and duplicate edges, so the edge count stays n*k/2.
    """
    _check_n(n)
    if int(k) != k or k < 2 or k % 2:
        raise ParameterError(f"k must be a positive even integer, got {k}")
    if k >= n:
        raise ParameterError(f"k must be smaller than n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    return Graph.from_networkx(nx.watts_strogatz_graph(int(n), int(k), float(p), seed=int(seed)))


def gen_grid(rows: int, cols: int) -> Graph:
    """rows x cols lattice with 4-neighbourhood and no wraparound.

    Node (r, c) has index r*cols + c.
    """
    if int(rows) != rows or int(cols) != cols or rows < 2 or cols < 2:
        raise ParameterError(f"grid needs rows >= 2 and cols >= 2, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(rows * cols, edges)


def gen_pipeline(n: int, k: int = 2, target_edges: int | None = None) -> Graph:
    """Banded path: node i links to i+1 ... i+k, optionally trimmed.

    Trimming removes edges of the widest band alternately from the tail and
    the head of the chain until ``target_edges`` remain, e.g. (n=24, k=2,
    target_edges=43) drops (21, 23) and (0, 2).
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"band width k must be a positive integer, got {k}")
    if int(n) != n or n < k + 1 or n < 2:
        raise ParameterError(f"pipeline needs n >= k + 1, got n={n}, k={k}")
    edges = [(i, i + s) for s in range(1, k + 1) for i in range(n - s)]
    if target_edges is not None:
        removable = []
        for s in range(k, 1, -1):
            band = [(i, i + s) for i in range(n - s)]
            while band:
                removable.append(band.pop())
                if band:
                    removable.append(band.pop(0))
        excess = len(edges) - int(target_edges)
        if excess < 0 or excess > len(removable):
            raise ParameterError(
                f"target_edges={target_edges} unreachable for n={n}, k={k} "
                f"(band has {len(edges)} edges, path floor {n - 1})")
        drop = set(removable[:excess])
        edges = [e for e in edges if e not in drop]
    return Graph.from_edges(int(n), edges)


def generate(params: GeneratorParams) -> Graph:
    """Dispatch on ``params.kind``."""
    if params.kind == "erdos_renyi":
        return gen_erdos_renyi(params.n, params.p, params.seed, params.require_connected)
    if params.kind == "small_world":
        return gen_small_world(params.n, params.k, params.p, params.seed)
    if params.kind == "pipeline":
        return gen_pipeline(params.n, params.k, params.target_edges)
    rows, cols = params.rows, params.cols
    if rows is None or cols is None:
        side = int(round(np.sqrt(params.n)))
        if side * side != params.n:
            raise ParameterError(f"grid with n={params.n} needs explicit rows and cols")
        rows = cols = side
    return gen_grid(rows, cols)


def laplacian(g: Graph) -> np.ndarray:
    """L = D - A, computed in integers so row sums are exactly zero."""
    a = g.adjacency.astype(np.int64)
    return (np.diag(a.sum(axis=1)) - a).astype(float)


def spectrum(g: Graph) -> LaplacianSpectrum:
    try:
        ev = np.linalg.eigvalsh(laplacian(g))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    ev = np.sort(ev)
    ev.setflags(write=False)
    return LaplacianSpectrum(ev)


def lambda_max(g: Graph) -> float:
    return spectrum(g).lambda_max


def pseudoinverse(m: np.ndarray, rank_tolerance: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix by eigendecomposition.

    Eigenvalues with ``|lam| <= rank_tolerance`` are treated as zero. The
    default tolerance is 1e-8 times the largest eigenvalue magnitude.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {m.shape}")
    scale = max(np.abs(m).max(initial=0.0), 1.0)
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * scale):
        raise ParameterError("pseudoinverse expects a symmetric matrix")
    try:
        w, v = np.linalg.eigh(0.5 * (m + m.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if rank_tolerance is None:
        rank_tolerance = 1e-8 * np.abs(w).max(initial=0.0)
    keep = np.abs(w) > rank_tolerance
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    out = (v * inv) @ v.T
    return 0.5 * (out + out.T)


def write_edge_list(g: Graph, path: str | Path) -> None:
    """Write ``# nodes=N`` followed by one ``i j`` line per undirected edge."""
    lines = [f"# nodes={g.n}"] + [f"{i} {j}" for i, j in g.edges()]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write edge list to {path}: {exc}") from exc


def read_edge_list(path: str | Path) -> Graph:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OutputError(f"cannot read edge list {path}: {exc}") from exc
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "nodes":
                n = int(value)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParameterError(f"{path}:{lineno}: expected 'i j', got {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        raise ParameterError(f"{path}: missing '# nodes=N' header")
    return Graph.from_edges(n, edges)
