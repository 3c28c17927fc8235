import itertools
import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposynth.builders import (
    BUILDERS,
    EDGE_CAPACITATED,
    NON_EUCLIDEAN,
    build_delta_mbst,
    build_mst_overlay,
    build_ring_christofides,
    build_star,
    christofides_tour,
    cube_hamiltonian_path,
    delta_prim,
    evaluate,
    tour_weight,
)
from toposynth.delay import ConnectivityGraph, build_connectivity
from toposynth.errors import NotATreeError, ToposynthError
from toposynth.fixtures import (
    triangle3,
    triangle3_delays,
    random_edge_capacitated,
    random_mixed,
    random_node_capacitated,
    random_points,
)
from toposynth.graph import UGraph, hop_distances, is_strongly_connected, prim_mst
from toposynth.maxplus import cycle_time
from toposynth.oracles import brute_force_mct, brute_force_tsp


def test_square_tour():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    w = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    tour = christofides_tour(w)
    assert sorted(tour) == [0, 1, 2, 3]
    assert tour_weight(w, tour) == pytest.approx(4.0)


def test_tiny_tours():
    assert christofides_tour(np.zeros((1, 1))) == [0]
    assert christofides_tour(np.array([[0, 2.0], [2.0, 0]])) == [0, 1]
    assert tour_weight(np.zeros((1, 1)), [0]) == 0.0


def test_christofides_within_bound_on_8_points(rng):
    for _ in range(200):
        pts = random_points(8, rng)
        w = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        tour = christofides_tour(w)
        assert sorted(tour) == list(range(8))
        _, best = brute_force_tsp(w)
        assert tour_weight(w, tour) <= 1.5 * best * (1 + 1e-12)


@pytest.mark.parametrize("delta", [2, 3, 4, 6])
def test_delta_prim_degree_bound(rng, delta):
    for _ in range(20):
        n = int(rng.integers(2, 12))
        w = rng.uniform(1, 100, (n, n))
        t = delta_prim(UGraph.complete((w + w.T) / 2), delta)
        assert t.is_tree()
        assert max(t.degrees()) <= delta


def test_delta_two_is_a_path(rng):
    w = rng.uniform(1, 100, (9, 9))
    t = delta_prim(UGraph.complete((w + w.T) / 2), 2)
    assert sorted(t.degrees()) == [1, 1] + [2] * 7


def test_delta_prim_unconstrained_equals_prim(rng):
    for _ in range(50):
        n = int(rng.integers(2, 12))
        w = rng.uniform(1, 100, (n, n))
        g = UGraph.complete((w + w.T) / 2)
        assert delta_prim(g, max(2, n - 1)).edge_set() == prim_mst(g).edge_set()


def test_delta_prim_errors():
    g = UGraph.complete(np.ones((3, 3)))
    with pytest.raises(ValueError):
        delta_prim(g, 1)
    with pytest.raises(ToposynthError):
        delta_prim(UGraph(3, ((0, 1, 1.0), (1, 2, 1.0))), 2)


def _check_cube_path(t: UGraph):
    order = cube_hamiltonian_path(t)
    assert sorted(order) == list(range(t.node_count))
    dist = hop_distances(t)
    assert all(dist[a, b] <= 3 for a, b in zip(order, order[1:]))
    return order


def test_cube_path_small_shapes():
    assert cube_hamiltonian_path(UGraph(1, ())) == [0]
    path = UGraph(5, tuple((k, k + 1, 1.0) for k in range(4)))
    _check_cube_path(path)
    star = UGraph(6, tuple((0, k, 1.0) for k in range(1, 6)))
    _check_cube_path(star)
    with pytest.raises(NotATreeError):
        cube_hamiltonian_path(UGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0))))


@given(st.integers(2, 25), st.integers(0, 100_000))
def test_cube_path_random_trees(n, seed):
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = tuple((int(order[k]), int(order[rng.integers(0, k)]), 1.0) for k in range(1, n))
    _check_cube_path(UGraph(n, edges))


def _check_result(res, cg, undirected: bool):
    ov = res.overlay
    assert is_strongly_connected(ov.to_digraph())
    assert res.tau == cycle_time(ov.to_digraph()).tau
    if undirected:
        assert ov.undirected
        assert all((b, a) in set(ov.arcs) for a, b in ov.arcs)
    outs, ins = ov.out_degrees(), ov.in_degrees()
    d = cg.delay_matrix(outs, ins)
    for (a, b), x in zip(ov.arcs, ov.delays):
        assert x == d[a, b]


@given(st.integers(1, 9), st.integers(0, 100_000), st.sampled_from(["edge", "node", "mixed"]))
def test_all_builders_valid(n, seed, kind):
    rng = np.random.default_rng(seed)
    gen = {"edge": random_edge_capacitated, "node": random_node_capacitated, "mixed": random_mixed}[kind]
    cg = gen(n, rng)
    for name, build in BUILDERS.items():
        res = build(cg)
        _check_result(res, cg, undirected=name != "ring")


def test_star_shape_and_two_nodes(rng):
    cg = random_mixed(6, rng)
    res = build_star(cg)
    degs = sorted(len([a for a in res.overlay.arcs if a[0] == i]) for i in range(6))
    assert degs == [1, 1, 1, 1, 1, 5]
    hub = res.extras["hub"]
    assert res.overlay.out_degrees()[hub] == 5
    cg2 = random_mixed(2, rng)
    s = build_star(cg2)
    d = cg2.delay_matrix([1, 1], [1, 1])
    assert s.tau == pytest.approx(max((d[0, 1] + d[1, 0]) / 2, *cg2.self_loops()))


def test_star_picks_best_hub(rng):
    from toposynth.delay import Overlay

    cg = random_mixed(6, rng)
    best = min(
        evaluate(Overlay.realize(cg, [(h, i) for i in range(6) if i != h], undirected=True)).tau for h in range(6)
    )
    assert build_star(cg).tau == best


def test_triangle_builders():
    cg = build_connectivity(triangle3(), 1.0)
    assert build_mst_overlay(cg).tau == pytest.approx(3.0, abs=1e-9)
    assert build_star(cg).tau == pytest.approx(3.0, abs=1e-9)
    assert build_delta_mbst(cg).tau == pytest.approx(3.0, abs=1e-9)
    ring = build_ring_christofides(cg)
    assert ring.tau == pytest.approx(8 / 3, abs=1e-9)
    assert ring.overlay.out_degrees() == [1, 1, 1]
    assert ring.overlay.in_degrees() == [1, 1, 1]


def test_ring_degrees_and_orientation(rng):
    for _ in range(10):
        cg = random_mixed(7, rng)
        res = build_ring_christofides(cg)
        assert res.overlay.out_degrees() == [1] * 7
        assert res.overlay.in_degrees() == [1] * 7
        assert res.extras["orientation"] in ("forward", "reverse")
    cg = random_edge_capacitated(6, rng)
    res = build_ring_christofides(cg, weight="edge")
    assert EDGE_CAPACITATED in res.guarantee_flags
    with pytest.raises(ValueError):
        build_ring_christofides(cg, weight="bogus")


def test_ring_warns_on_non_euclidean(caplog):
    d = np.array([[0, 1, 10, 1], [1, 0, 1, 1], [10, 1, 0, 1], [1, 1, 1, 0]], dtype=float)
    cg = ConnectivityGraph.from_delays(d, name="skewed")
    with caplog.at_level(logging.WARNING):
        res = build_ring_christofides(cg)
    assert NON_EUCLIDEAN in res.guarantee_flags
    assert "triangle" in caplog.text


def test_ring_and_dmbst_need_complete_graph():
    n = 3
    allowed = np.ones((n, n), dtype=bool)
    allowed[0, 2] = allowed[2, 0] = False
    cg = ConnectivityGraph(
        ("a", "b", "c"), np.ones((n, n)), np.ones((n, n)), np.ones(n), np.ones(n), np.zeros(n), 1.0, allowed=allowed
    )
    with pytest.raises(ToposynthError):
        build_ring_christofides(cg)
    with pytest.raises(ToposynthError):
        build_delta_mbst(cg)
    assert build_mst_overlay(cg).overlay.undirected_edges() == [(0, 1), (1, 2)]


def test_mst_optimal_in_edge_capacitated_regime(rng):
    for _ in range(30):
        cg = random_edge_capacitated(int(rng.integers(2, 7)), rng)
        assert build_mst_overlay(cg).tau == brute_force_mct(cg, "undirected").tau


def test_dmbst_three_nodes_is_optimal(rng):
    for _ in range(30):
        cg = random_node_capacitated(3, rng)
        assert build_delta_mbst(cg).tau == pytest.approx(brute_force_mct(cg, "undirected").tau, rel=1e-12)


def test_dmbst_candidates(rng):
    cg = random_node_capacitated(8, rng)
    res = build_delta_mbst(cg)
    ham = res.extras["hamiltonian_path"]
    assert sorted(ham) == list(range(8))
    assert res.builder == "delta_mbst"
    assert res.extras["candidate"] == "cube-path" or res.extras["candidate"].startswith("delta=")


def test_single_silo_builders():
    cg = ConnectivityGraph.from_delays(np.zeros((1, 1)))
    for build in BUILDERS.values():
        res = build(cg)
        assert res.overlay.arcs == ()
        assert res.tau == 0.0
