import numpy as np
import pytest

from netrecon.graph import Graph, gen_erdos_renyi, gen_grid, gen_pipeline, gen_small_world


def complete(n):
    return Graph(np.ones((n, n), dtype=int) - np.eye(n, dtype=int))


def path(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(leaves):
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def benchmark_graphs():
    """The small benchmark set used by the oracle round-trip checks."""
    graphs = {
        "K3": complete(3),
        "K5": complete(5),
        "P5": path(5),
        "star3": star(3),
        "grid4x6": gen_grid(4, 6),
        "pipeline24": gen_pipeline(24, 2, 43),
        "er24": gen_erdos_renyi(24, 0.15, 0, require_connected=True),
    }
    for seed in (0, 1, 2):
        graphs[f"sw24_s{seed}"] = gen_small_world(24, 4, 0.1, seed)
    return graphs


@pytest.fixture(scope="session")
def benchmarks():
    return benchmark_graphs()


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record a one-line verdict for an acceptance criterion."""

    def record(number, title, passed, detail=""):
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")
