import gzip
import io
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anfsketch.errors import CapacityError, EmptyGraphError, ParameterError, ParseError
from anfsketch.graph import (
    Graph,
    complete_graph,
    gnm_random,
    lattice_degree_for,
    load_edge_list,
    path_graph,
    ring_lattice,
    star_graph,
)
from anfsketch.metrics import avg_clustering
from anfsketch.oracle import exact_average_path_length

from conftest import random_graph


def brute_clustering(g: Graph) -> float:
    adj = [set(g.neighbours(v).tolist()) for v in range(g.n)]
    total = 0.0
    for v in range(g.n):
        nb = sorted(adj[v])
        if len(nb) < 2:
            continue
        links = sum(1 for a, b in combinations(nb, 2) if b in adj[a])
        total += links / (len(nb) * (len(nb) - 1) / 2)
    return total / g.n


class TestLoad:
    def test_two_edges(self):
        g = load_edge_list(b"0 1\n1 2\n")
        assert g.n == 3
        assert g.num_edges == 2
        assert g.edge_count == 4
        assert g.neighbours(1).tolist() == [0, 2]

    def test_comments_loops_duplicates(self):
        g = load_edge_list(b"# header\n\n0 1\n1 0\n2 2\n0 1\n  # indented comment\n1 3\n")
        assert g.num_edges == 2
        assert g.n == 4
        assert g.stats.self_loops == 1
        assert g.stats.duplicates == 2
        assert g.stats.lines == 5

    def test_bad_line_reports_number(self):
        with pytest.raises(ParseError) as err:
            load_edge_list(b"0 1\n# ok\n1 2 3\n")
        assert err.value.line == 3
        assert "line 3" in str(err.value)

    @pytest.mark.parametrize("text", [b"", b"# nothing\n\n"])
    def test_empty(self, text):
        with pytest.raises(EmptyGraphError):
            load_edge_list(text)

    def test_only_self_loops_keeps_nodes(self):
        g = load_edge_list(b"5 5\n")
        assert g.n == 1 and g.num_edges == 0

    def test_gzip(self, tmp_path):
        path = tmp_path / "g.txt.gz"
        path.write_bytes(gzip.compress(b"0 1\n1 2\n2 0\n"))
        assert load_edge_list(path).same_structure(load_edge_list(b"0 1\n1 2\n2 0\n"))

    def test_labels_ordered_by_value(self):
        g = load_edge_list(b"10 9\n9 100\n")
        assert g.labels == (9, 10, 100)
        assert g.id_map == {9: 0, 10: 1, 100: 2}

    def test_string_labels(self):
        g = load_edge_list(io.BytesIO(b"bob alice\nalice carol\n"))
        assert g.labels == ("alice", "bob", "carol")
        assert g.degrees().tolist() == [2, 1, 1]

    def test_line_order_does_not_matter(self):
        a = load_edge_list(b"3 1\n1 2\n2 7\n")
        b = load_edge_list(b"2 7\n3 1\n1 2\n")
        assert a.same_structure(b) and a.labels == b.labels

    def test_directed(self):
        g = load_edge_list(b"0 1\n1 2\n", directed=True)
        assert g.directed
        assert g.num_edges == 2
        assert g.neighbours(1).tolist() == [2]
        assert g.neighbours(2).tolist() == []


class TestStructure:
    @given(st.integers(1, 40), st.integers(0, 200), st.integers(0, 2**32))
    def test_undirected_invariants(self, n, m, seed):
        g = random_graph(np.random.default_rng(seed), n, m)
        assert g.degrees().sum() == 2 * g.num_edges
        src, dst = g.arcs()
        assert not np.any(src == dst)
        pairs = set(zip(src.tolist(), dst.tolist()))
        assert len(pairs) == src.size
        assert all((b, a) in pairs for a, b in pairs)
        for v in range(n):
            nb = g.neighbours(v)
            assert np.all(np.diff(nb) > 0)

    @given(st.integers(1, 40), st.integers(0, 200), st.integers(0, 2**32), st.booleans())
    def test_export_reload(self, n, m, seed, directed):
        g = random_graph(np.random.default_rng(seed), n, m, directed)
        if g.num_edges == 0:
            return
        buf = io.BytesIO()
        g.write_edge_list(buf)
        again = load_edge_list(buf.getvalue(), directed=directed)
        # reload only sees nodes that have edges; compare on labels
        src, dst = g.edges()
        edges = {(int(a), int(b)) for a, b in zip(src, dst)}
        s2, d2 = again.edges()
        assert {(again.label(a), again.label(b)) for a, b in zip(s2.tolist(), d2.tolist())} == edges

    def test_relabel(self):
        g = path_graph(4)
        r = g.relabel([3, 2, 1, 0])
        assert r.same_structure(g)
        with pytest.raises(ParameterError):
            g.relabel([0, 0, 1, 2])

    def test_bad_arcs(self):
        with pytest.raises(ParameterError):
            Graph.from_arcs(2, [0], [2])


class TestGenerators:
    def test_gnm_complete(self):
        g = gnm_random(4, 6, seed=1)
        assert g.same_structure(complete_graph(4))

    @pytest.mark.parametrize("n,m", [(100, 300), (2, 1), (50, 0), (30, 435)])
    def test_gnm_exact_count(self, n, m):
        g = gnm_random(n, m, seed=7)
        assert g.n == n and g.num_edges == m

    def test_gnm_sparse_path(self):
        g = gnm_random(10_000, 30_000, seed=3)
        assert g.num_edges == 30_000

    def test_gnm_deterministic(self):
        assert gnm_random(200, 700, seed=5).same_structure(gnm_random(200, 700, seed=5))
        assert not gnm_random(200, 700, seed=5).same_structure(gnm_random(200, 700, seed=6))

    def test_gnm_over_capacity(self):
        with pytest.raises(CapacityError):
            gnm_random(4, 7)

    def test_gnm_roughly_uniform(self):
        counts = np.zeros(6)
        pairs = list(combinations(range(4), 2))
        for seed in range(3000):
            g = gnm_random(4, 1, seed=seed)
            s, d = g.edges()
            counts[pairs.index((int(s[0]), int(d[0])))] += 1
        assert counts.min() > 400 and counts.max() < 600

    def test_ring_lattice_degrees(self):
        g = ring_lattice(5, 2)
        assert g.degrees().tolist() == [2] * 5
        assert g.neighbours(0).tolist() == [1, 4]

    @pytest.mark.parametrize("n,k", [(5, 3), (4, 4), (4, 6), (3, -2)])
    def test_ring_lattice_rejects(self, n, k):
        with pytest.raises(ParameterError):
            ring_lattice(n, k)

    @pytest.mark.parametrize("n", [20, 33, 100])
    def test_ring_lattice_clustering(self, n):
        g = ring_lattice(n, 4)
        assert brute_clustering(g) == pytest.approx(0.5)
        assert avg_clustering(g) == pytest.approx(0.5)

    @pytest.mark.parametrize("n,k", [(30, 6), (41, 10)])
    def test_ring_lattice_clustering_closed_form(self, n, k):
        expected = 3 * (k - 2) / (4 * (k - 1))
        assert avg_clustering(ring_lattice(n, k)) == pytest.approx(expected)

    def test_six_cycle_apl(self):
        # distances from any node: 1, 1, 2, 2, 3
        assert exact_average_path_length(ring_lattice(6, 2)) == pytest.approx(1.8)

    def test_lattice_degree_choice(self):
        assert lattice_degree_for(star_graph(9)) == 2
        assert lattice_degree_for(complete_graph(6)) == 4
        assert lattice_degree_for(ring_lattice(30, 6)) == 6
