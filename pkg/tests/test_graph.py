import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposynth.errors import (
    DisconnectedGraphError,
    LimitExceededError,
    OddDegreeError,
    OddNodeCountError,
    ToposynthError,
)
from toposynth.graph import (
    Circuit,
    Digraph,
    UGraph,
    elementary_circuits,
    eulerian_circuit,
    graph_cube,
    hop_distances,
    is_strongly_connected,
    min_weight_perfect_matching,
    prim_mst,
)
from toposynth.oracles import brute_force_matching, spanning_trees

from conftest import random_strong_matrix


def test_digraph_rejects_bad_arcs():
    with pytest.raises(ToposynthError):
        Digraph(2, ((0, 2, 1.0),))
    with pytest.raises(ToposynthError):
        Digraph(2, ((0, 1, 1.0), (0, 1, 2.0)))
    with pytest.raises(ToposynthError):
        Digraph(2, ((0, 1, -1.0),))
    with pytest.raises(ToposynthError):
        Digraph(2, ((0, 1, float("inf")),))


def test_ugraph_normalises_edges():
    g = UGraph(3, ((2, 0, 1.0), (1, 0, 2.0)))
    assert g.edges == ((0, 1, 2.0), (0, 2, 1.0))
    with pytest.raises(ToposynthError):
        UGraph(3, ((0, 1, 1.0), (1, 0, 1.0)))


def test_strong_connectivity_examples():
    assert is_strongly_connected(Digraph(3, ((0, 1, 1), (1, 2, 1), (2, 0, 1))))
    assert not is_strongly_connected(Digraph(3, ((0, 1, 1), (1, 2, 1))))
    assert is_strongly_connected(Digraph(1, ()))


@given(st.integers(1, 8), st.integers(0, 10_000))
def test_strong_connectivity_matches_networkx(n, seed):
    rng = np.random.default_rng(seed)
    w = np.where(rng.random((n, n)) < 0.3, 1.0, np.nan)
    g = Digraph.from_matrix(w)
    h = nx.DiGraph()
    h.add_nodes_from(range(n))
    h.add_edges_from((a, b) for a, b, _ in g.arcs)
    assert is_strongly_connected(g) == nx.is_strongly_connected(h)


def test_complete_digraph_circuit_count():
    for n in range(2, 6):
        w = np.ones((n, n))
        np.fill_diagonal(w, np.nan)
        expected = sum(math.comb(n, k) * math.factorial(k - 1) for k in range(2, n + 1))
        assert len(elementary_circuits(Digraph.from_matrix(w))) == expected


def test_self_loops_are_circuits():
    g = Digraph(2, ((0, 0, 5.0), (0, 1, 1.0), (1, 0, 1.0)))
    circs = elementary_circuits(g)
    assert Circuit((0, 0), 1, 5.0) in circs
    assert len(circs) == 2


@given(st.integers(1, 7), st.integers(0, 10_000))
def test_circuits_match_networkx(n, seed):
    rng = np.random.default_rng(seed)
    g = Digraph.from_matrix(random_strong_matrix(n, rng))
    h = nx.DiGraph()
    h.add_nodes_from(range(n))
    h.add_edges_from((a, b) for a, b, _ in g.arcs)
    ours = {c.nodes for c in elementary_circuits(g)}
    theirs = set()
    for cyc in nx.simple_cycles(h):
        k = cyc.index(min(cyc))
        cyc = cyc[k:] + cyc[:k]
        theirs.add(tuple(cyc) + (cyc[0],))
    assert ours == theirs


def test_circuit_enumeration_limit():
    w = np.ones((13, 13))
    with pytest.raises(LimitExceededError):
        elementary_circuits(Digraph.from_matrix(w))


def test_circuit_limit_env_override(monkeypatch):
    w = np.ones((4, 4))
    monkeypatch.setenv("TOPOSYNTH_ORACLE_LIMIT", "3")
    with pytest.raises(LimitExceededError):
        elementary_circuits(Digraph.from_matrix(w))


def test_prim_matches_exhaustive_small(rng):
    for _ in range(20):
        n = int(rng.integers(2, 8))
        w = rng.uniform(1, 10, (n, n))
        g = UGraph.complete((w + w.T) / 2)
        best = min(t.total_weight() for t in spanning_trees(g))
        assert math.isclose(prim_mst(g).total_weight(), best, rel_tol=1e-12)


def test_prim_matches_networkx_on_10_nodes(rng):
    for _ in range(20):
        w = rng.uniform(1, 10, (10, 10))
        g = UGraph.complete(w)
        h = nx.Graph()
        h.add_weighted_edges_from(g.edges)
        ref = nx.minimum_spanning_tree(h).size(weight="weight")
        assert math.isclose(prim_mst(g).total_weight(), ref, rel_tol=1e-12)


def test_prim_is_a_tree_and_rejects_disconnected():
    g = UGraph(4, ((0, 1, 1.0), (2, 3, 1.0)))
    with pytest.raises(DisconnectedGraphError):
        prim_mst(g)
    t = prim_mst(UGraph.complete(np.arange(16.0).reshape(4, 4)))
    assert t.is_tree()


def test_matching_square_and_errors():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    m = min_weight_perfect_matching(UGraph.complete(d))
    assert sum(d[a, b] for a, b in m) == pytest.approx(2.0)
    with pytest.raises(OddNodeCountError):
        min_weight_perfect_matching(UGraph.complete(np.ones((3, 3))))


def test_matching_equals_brute_force_on_8_nodes(rng):
    for _ in range(50):
        pts = rng.uniform(0, 100, (8, 2))
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        m = min_weight_perfect_matching(UGraph.complete(d))
        _, best = brute_force_matching(d)
        assert sum(d[a, b] for a, b in m) == pytest.approx(best, rel=1e-12)
        assert sorted(x for e in m for x in e) == list(range(8))


def test_eulerian_circuit_uses_every_edge_once():
    edges = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0), (1, 2), (2, 1)]
    walk = eulerian_circuit(edges, start=0)
    assert walk[0] == walk[-1] == 0
    used = sorted(tuple(sorted(p)) for p in zip(walk, walk[1:]))
    assert used == sorted(tuple(sorted(e)) for e in edges)


def test_eulerian_errors():
    with pytest.raises(OddDegreeError):
        eulerian_circuit([(0, 1), (1, 2)])
    with pytest.raises(DisconnectedGraphError):
        eulerian_circuit([(0, 1), (1, 0), (2, 3), (3, 2)])


def test_graph_cube_distances(rng):
    for _ in range(10):
        n = 12
        edges = [(k, int(rng.integers(0, k)), 1.0) for k in range(1, n)]
        t = UGraph(n, tuple(edges))
        cube = graph_cube(t)
        dist = hop_distances(t)
        expected = {(i, j) for i, j in itertools.combinations(range(n), 2) if dist[i, j] <= 3}
        assert cube.edge_set() == expected
