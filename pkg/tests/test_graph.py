import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import complete, path, star
from netrecon.errors import ParameterError
from netrecon.graph import (
    Graph,
    GeneratorParams,
    gen_erdos_renyi,
    gen_grid,
    gen_pipeline,
    gen_small_world,
    generate,
    lambda_max,
    laplacian,
    pseudoinverse,
    read_edge_list,
    spectrum,
    write_edge_list,
)


def bfs_components(g):
    # independent component count used as an oracle for the spectrum rule
    seen, count = set(), 0
    for s in range(g.n):
        if s in seen:
            continue
        count += 1
        stack = [s]
        seen.add(s)
        while stack:
            v = stack.pop()
            for w in np.flatnonzero(g.adjacency[v]):
                if w not in seen:
                    seen.add(int(w))
                    stack.append(int(w))
    return count


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    bits = draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    a = np.zeros((n, n), dtype=int)
    a[np.triu_indices(n, 1)] = bits
    return Graph(a + a.T)


class TestGraphType:
    def test_rejects_asymmetric(self):
        with pytest.raises(ParameterError):
            Graph(np.array([[0, 1], [0, 0]]))

    def test_rejects_self_loop(self):
        with pytest.raises(ParameterError):
            Graph(np.eye(2, dtype=int))

    def test_rejects_weights(self):
        with pytest.raises(ParameterError):
            Graph(np.array([[0, 2], [2, 0]]))

    def test_adjacency_is_read_only(self):
        g = complete(3)
        with pytest.raises(ValueError):
            g.adjacency[0, 1] = 0

    def test_networkx_round_trip(self):
        g = gen_small_world(24, 4, 0.1, 5)
        assert Graph.from_networkx(g.to_networkx()) == g


class TestGenerators:
    def test_er_p0_is_empty(self):
        assert gen_erdos_renyi(5, 0.0, 1).edge_count == 0

    def test_er_p1_is_complete(self):
        assert gen_erdos_renyi(5, 1.0, 1) == complete(5)

    def test_er_48_sparse_count_is_plausible(self):
        # C(48, 2) * 0.01 = 11.28; allow a wide binomial window
        counts = [gen_erdos_renyi(48, 0.01, s).edge_count for s in range(20)]
        assert 5 < np.mean(counts) < 18

    def test_er_require_connected(self):
        g = gen_erdos_renyi(24, 0.15, 0, require_connected=True)
        assert g.is_connected()
        assert g == gen_erdos_renyi(24, 0.15, 0, require_connected=True)

    @pytest.mark.parametrize("n,p", [(1, 0.5), (5, -0.1), (5, 1.5)])
    def test_er_bad_params(self, n, p):
        with pytest.raises(ParameterError):
            gen_erdos_renyi(n, p, 0)

    @pytest.mark.parametrize("n,edges", [(24, 48), (100, 200)])
    def test_small_world_edge_counts(self, n, edges):
        for seed in range(3):
            assert gen_small_world(n, 4, 0.1, seed).edge_count == edges

    def test_small_world_unrewired_is_regular(self):
        g = gen_small_world(10, 4, 0.0, 0)
        assert (g.degrees == 4).all()

    @pytest.mark.parametrize("n,k", [(10, 3), (4, 4), (10, 0)])
    def test_small_world_bad_k(self, n, k):
        with pytest.raises(ParameterError):
            gen_small_world(n, k, 0.1, 0)

    def test_small_world_deterministic(self):
        assert gen_small_world(24, 4, 0.1, 7) == gen_small_world(24, 4, 0.1, 7)

    @pytest.mark.parametrize("rows,cols,edges", [(4, 6, 38), (10, 10, 180), (2, 2, 4)])
    def test_grid_counts(self, rows, cols, edges):
        g = gen_grid(rows, cols)
        assert g.n == rows * cols
        assert g.edge_count == edges == rows * (cols - 1) + cols * (rows - 1)

    def test_grid_2x2_is_cycle(self):
        assert (gen_grid(2, 2).degrees == 2).all()

    @pytest.mark.parametrize("rows,cols", [(1, 5), (0, 3)])
    def test_grid_degenerate(self, rows, cols):
        with pytest.raises(ParameterError):
            gen_grid(rows, cols)

    def test_pipeline_counts(self):
        assert gen_pipeline(24, 2).edge_count == 45
        assert gen_pipeline(24, 2, 43).edge_count == 43
        assert gen_pipeline(5, 1) == path(5)

    def test_pipeline_6_2_enumeration(self):
        g = gen_pipeline(6, 2)
        expected = {(i, i + 1) for i in range(5)} | {(i, i + 2) for i in range(4)}
        assert set(g.edges()) == expected

    def test_pipeline_trim_keeps_path(self):
        g = gen_pipeline(24, 2, 43)
        assert (0, 2) not in g.edges() and (21, 23) not in g.edges()
        assert all((i, i + 1) in g.edges() for i in range(23))

    def test_pipeline_unreachable_target(self):
        with pytest.raises(ParameterError):
            gen_pipeline(24, 2, 10)
        with pytest.raises(ParameterError):
            gen_pipeline(1, 1)

    def test_generate_dispatch(self):
        assert generate(GeneratorParams("grid", n=100)) == gen_grid(10, 10)
        assert generate(GeneratorParams("grid", n=24, rows=4, cols=6)) == gen_grid(4, 6)
        assert generate(GeneratorParams("pipeline", n=24, k=2, target_edges=43)).edge_count == 43
        with pytest.raises(ParameterError):
            generate(GeneratorParams("grid", n=24))
        with pytest.raises(ParameterError):
            GeneratorParams("lattice")


class TestLaplacian:
    def test_k3(self):
        np.testing.assert_array_equal(laplacian(complete(3)), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])

    def test_empty(self):
        np.testing.assert_array_equal(laplacian(Graph(np.zeros((3, 3)))), np.zeros((3, 3)))

    def test_p3(self):
        np.testing.assert_array_equal(laplacian(path(3)), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])

    def test_spectrum_k3(self):
        np.testing.assert_allclose(spectrum(complete(3)).eigenvalues, [0, 3, 3], atol=1e-12)

    def test_spectrum_star(self):
        np.testing.assert_allclose(spectrum(star(3)).eigenvalues, [0, 1, 1, 4], atol=1e-12)
        np.testing.assert_allclose(spectrum(star(3)).distinct(), [0, 1, 4], atol=1e-12)

    def test_spectrum_path_closed_form(self):
        n = 5
        expected = 2 - 2 * np.cos(np.pi * np.arange(n) / n)
        np.testing.assert_allclose(spectrum(path(n)).eigenvalues, np.sort(expected), atol=1e-12)

    def test_spectrum_grid_is_sum_of_paths(self):
        a = 2 - 2 * np.cos(np.pi * np.arange(4) / 4)
        b = 2 - 2 * np.cos(np.pi * np.arange(6) / 6)
        expected = np.sort((a[:, None] + b[None, :]).ravel())
        np.testing.assert_allclose(spectrum(gen_grid(4, 6)).eigenvalues, expected, atol=1e-10)

    def test_two_components(self):
        g = Graph.from_edges(4, [(0, 1), (2, 3)])
        assert spectrum(g).zero_count() == 2 == g.component_count()

    def test_lambda_max_small(self):
        assert lambda_max(complete(3)) == pytest.approx(3)
        assert lambda_max(path(2)) == pytest.approx(2)

    def test_lambda_max_bounded_below_by_degree(self):
        # lambda_max >= d_max + 1 for any graph with an edge
        for seed in range(5):
            g = gen_small_world(100, 4, 0.1, seed)
            assert lambda_max(g) >= g.degrees.max() + 1 - 1e-9

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_spectral_invariants(self, g):
        ev = spectrum(g).eigenvalues
        assert ev[0] == pytest.approx(0, abs=1e-9)
        assert (ev >= -1e-9).all()
        assert spectrum(g).zero_count() == bfs_components(g) == g.component_count()
        np.testing.assert_allclose(laplacian(g).sum(axis=1), 0)
        np.testing.assert_allclose(ev.sum(), 2 * g.edge_count, atol=1e-9)
        assert (g.adjacency == g.adjacency.T).all()


def penrose_residuals(m, p):
    scale = max(np.linalg.norm(m), 1.0)
    pscale = max(np.linalg.norm(p), 1.0)
    return (
        np.linalg.norm(m @ p @ m - m) / scale,
        np.linalg.norm(p @ m @ p - p) / pscale,
        np.linalg.norm(m @ p - (m @ p).T),
        np.linalg.norm(p @ m - (p @ m).T),
    )


class TestPseudoinverse:
    def test_identity(self):
        np.testing.assert_allclose(pseudoinverse(np.eye(4)), np.eye(4), atol=1e-14)

    def test_zero(self):
        np.testing.assert_array_equal(pseudoinverse(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_k3_closed_form(self):
        l = laplacian(complete(3))
        p = pseudoinverse(l)
        np.testing.assert_allclose(p, (3 * np.eye(3) - np.ones((3, 3))) / 9, atol=1e-14)
        np.testing.assert_allclose(l @ p @ l, l, atol=1e-12)

    def test_complete_closed_form(self):
        n = 7
        p = pseudoinverse(laplacian(complete(n)))
        np.testing.assert_allclose(p, (np.eye(n) - np.ones((n, n)) / n) / n, atol=1e-14)

    def test_rejects_asymmetric(self):
        with pytest.raises(ParameterError):
            pseudoinverse(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_penrose_on_benchmarks(self, benchmarks):
        for name, g in benchmarks.items():
            l = laplacian(g)
            assert max(penrose_residuals(l, pseudoinverse(l))) < 1e-9, name

    def test_penrose_on_random_symmetric(self):
        rng = np.random.default_rng(0)
        for trial in range(50):
            n = int(rng.integers(2, 101))
            r = int(rng.integers(1, n + 1))
            b = rng.normal(size=(n, r))
            m = b @ np.diag(rng.choice([-1.0, 1.0], r)) @ b.T
            assert max(penrose_residuals(m, pseudoinverse(m))) < 1e-9, (trial, n, r)


class TestEdgeListIO:
    def test_round_trip(self, tmp_path):
        g = gen_small_world(24, 4, 0.1, 3)
        write_edge_list(g, tmp_path / "g.edges")
        assert read_edge_list(tmp_path / "g.edges") == g
        first = (tmp_path / "g.edges").read_text().splitlines()[0]
        assert first == "# nodes=24"

    def test_isolated_nodes_survive(self, tmp_path):
        g = Graph.from_edges(5, [(0, 1)])
        write_edge_list(g, tmp_path / "g.edges")
        assert read_edge_list(tmp_path / "g.edges").n == 5

    @settings(max_examples=30, deadline=None)
    @given(graphs())
    def test_round_trip_property(self, tmp_path_factory, g):
        p = tmp_path_factory.mktemp("el") / "g.edges"
        write_edge_list(g, p)
        assert read_edge_list(p) == g
