import itertools

import numpy as np
import pytest

from toposynth.builders import evaluate
from toposynth.delay import ConnectivityGraph, Overlay, build_connectivity
from toposynth.errors import LimitExceededError
from toposynth.fixtures import (
    triangle3,
    random_edge_capacitated,
    random_mixed,
    random_node_capacitated,
    ring_gap,
    ring_gap_delays,
    ring_gap_optimum,
)
from toposynth.graph import Digraph, UGraph, elementary_circuits, is_strongly_connected, prim_mst
from toposynth.oracles import (
    brute_force_matching,
    brute_force_mct,
    brute_force_tsp,
    elementary_circuit_bounds,
    min_bottleneck_spanning_tree,
    spanning_trees,
)


def exhaustive_directed(cg: ConnectivityGraph) -> float:
    """Reference: evaluate every strongly connected arc subset."""
    n = cg.n
    arcs = [(i, j) for i in range(n) for j in range(n) if i != j]
    best = np.inf
    for mask in range(1, 1 << len(arcs)):
        sub = [a for k, a in enumerate(arcs) if mask >> k & 1]
        if len(sub) < n:
            continue
        if not is_strongly_connected(Digraph(n, tuple((a, b, 1.0) for a, b in sub))):
            continue
        best = min(best, evaluate(Overlay.realize(cg, sub)).tau)
    return best


def test_spanning_tree_counts():
    for n in range(1, 7):
        trees = spanning_trees(UGraph.complete(np.ones((n, n))))
        assert len(trees) == max(1, n ** (n - 2))
        assert all(t.is_tree() for t in trees)
    cycle = UGraph(4, tuple((k, (k + 1) % 4, 1.0) for k in range(4)))
    assert len(spanning_trees(cycle)) == 4


def test_spanning_tree_limit():
    with pytest.raises(LimitExceededError):
        spanning_trees(UGraph.complete(np.ones((8, 8))))


def test_triangle_directed():
    cg = build_connectivity(triangle3(), 1.0)
    res = brute_force_mct(cg, "directed")
    assert res.tau == pytest.approx(8 / 3, abs=1e-9)
    assert brute_force_mct(cg, "undirected").tau == pytest.approx(3.0, abs=1e-9)


def test_two_nodes_both_modes_agree(rng):
    for _ in range(10):
        cg = random_mixed(2, rng)
        a = brute_force_mct(cg, "directed").tau
        b = brute_force_mct(cg, "undirected").tau
        assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("gen", [random_edge_capacitated, random_node_capacitated, random_mixed])
def test_directed_matches_exhaustive(rng, gen):
    for _ in range(8):
        n = int(rng.integers(2, 5))
        cg = gen(n, rng)
        assert brute_force_mct(cg, "directed").tau == pytest.approx(exhaustive_directed(cg), rel=1e-9)


def test_undirected_never_better_than_directed(rng):
    for _ in range(10):
        cg = random_mixed(4, rng)
        assert brute_force_mct(cg, "directed").tau <= brute_force_mct(cg, "undirected").tau + 1e-9


def test_gadget_three():
    cg = build_connectivity(ring_gap(3), 1.0)
    res = brute_force_mct(cg, "directed", limit=10)
    assert res.tau == pytest.approx(ring_gap_optimum(3), abs=1e-9)
    assert res.tau == pytest.approx(0.5, abs=1e-9)


def test_directed_limit():
    cg = ConnectivityGraph.from_delays(ring_gap_delays(3))
    with pytest.raises(LimitExceededError):
        brute_force_mct(cg, "directed")
    with pytest.raises(ValueError):
        brute_force_mct(cg, "sideways")


def test_oracle_limit_env(monkeypatch):
    cg = ConnectivityGraph.from_delays(np.ones((4, 4)))
    monkeypatch.setenv("TOPOSYNTH_ORACLE_LIMIT", "3")
    with pytest.raises(LimitExceededError):
        brute_force_mct(cg, "directed")
    monkeypatch.setenv("TOPOSYNTH_ORACLE_LIMIT", "nope")
    with pytest.raises(ValueError):
        brute_force_mct(cg, "directed")


def test_circuit_bounds_match_enumeration(rng):
    for _ in range(20):
        n = int(rng.integers(2, 7))
        w = np.where(rng.random((n, n)) < 0.6, rng.uniform(0, 10, (n, n)), -np.inf)
        np.fill_diagonal(w, -np.inf)
        b = elementary_circuit_bounds(w)
        arcs = tuple((i, j, float(w[i, j])) for i in range(n) for j in range(n) if np.isfinite(w[i, j]))
        ref = np.full((n, n), np.inf)
        for c in elementary_circuits(Digraph(n, arcs)):
            for x, y in zip(c.nodes, c.nodes[1:]):
                ref[x, y] = min(ref[x, y], c.mean)
                ref[x, x] = min(ref[x, x], c.mean)
        fin = np.isfinite(ref)
        assert np.array_equal(np.isfinite(b), fin)
        assert np.allclose(b[fin], ref[fin], rtol=1e-12)


def test_tsp_and_matching_oracles():
    w = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], dtype=float)
    tour, cost = brute_force_tsp(w)
    assert cost == 4.0 and tour[0] == 0
    pairs, cost = brute_force_matching(w)
    assert cost == 2.0
    with pytest.raises(LimitExceededError):
        brute_force_tsp(np.ones((10, 10)))


def test_bottleneck_tree_bounds_undirected_optimum(rng):
    for _ in range(30):
        n = int(rng.integers(2, 7))
        cg = random_node_capacitated(n, rng)
        g = UGraph.complete(cg.node_capacitated_matrix())
        b = min_bottleneck_spanning_tree(g)
        assert b == max(w for _, _, w in prim_mst(g).edges)
        assert b <= brute_force_mct(cg, "undirected").tau * (1 + 1e-12)


def test_undirected_subgraph_search_not_worse_than_trees(rng):
    for _ in range(5):
        cg = random_mixed(4, rng)
        res = brute_force_mct(cg, "undirected")
        assert res.extras["scanned"] >= 16
        trees = spanning_trees(UGraph.complete(np.ones((4, 4))))
        best_tree = min(evaluate(Overlay.realize(cg, [(u, v) for u, v, _ in t.edges], undirected=True)).tau for t in trees)
        assert res.tau <= best_tree + 1e-12
