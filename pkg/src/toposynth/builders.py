"""Candidate overlay constructions: STAR, MST, Christofides RING and delta-MBST."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .delay import ConnectivityGraph, Overlay, triangle_violations
from .errors import NotATreeError, ToposynthError
from .graph import (
    UGraph,
    eulerian_circuit,
    min_weight_perfect_matching,
    prim_mst,
)
from .maxplus import CycleTimeReport, cycle_time

log = logging.getLogger(__name__)

NON_EUCLIDEAN = "non-euclidean"
GUARANTEE_VOID = "guarantee-void"
EDGE_CAPACITATED = "edge-capacitated"


@dataclass(frozen=True)
class BuilderResult:
    overlay: Overlay
    report: CycleTimeReport
    builder: str
    guarantee_flags: frozenset[str] = frozenset()
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def tau(self) -> float:
        return self.report.tau


def evaluate(overlay: Overlay) -> CycleTimeReport:
    return cycle_time(overlay.to_digraph())


def _result(cg: ConnectivityGraph, overlay: Overlay, builder: str, flags=(), **extras) -> BuilderResult:
    flags = set(flags)
    if cg.is_edge_capacitated():
        flags.add(EDGE_CAPACITATED)
    return BuilderResult(overlay, evaluate(overlay), builder, frozenset(flags), extras)


def _trivial(cg: ConnectivityGraph, builder: str) -> BuilderResult:
    return _result(cg, Overlay.realize(cg, [], undirected=True), builder)


def _pick_best(cands: list[tuple[str, Overlay]]) -> tuple[int, CycleTimeReport]:
    best_k, best_rep = -1, None
    for k, (_, ov) in enumerate(cands):
        rep = evaluate(ov)
        if best_rep is None or rep.tau < best_rep.tau:
            best_k, best_rep = k, rep
    return best_k, best_rep


def symmetric_unit_weights(cg: ConnectivityGraph) -> np.ndarray:
    """Average of the two directed unit-degree delays for every pair."""
    d = cg.unit_degree_delays()
    w = (d + d.T) / 2
    np.fill_diagonal(w, 0.0)
    return w


def _undirected_candidates(cg: ConnectivityGraph, w: np.ndarray) -> UGraph:
    both = cg.allowed & cg.allowed.T
    n = cg.n
    return UGraph(n, tuple((i, j, float(w[i, j])) for i in range(n) for j in range(i + 1, n) if both[i, j]))


# --------------------------------------------------------------------------- STAR


def build_star(cg: ConnectivityGraph) -> BuilderResult:
    """Undirected star; every silo is tried as hub and the fastest one kept."""
    if cg.n == 1:
        return _trivial(cg, "star")
    cands = []
    for hub in range(cg.n):
        leaves = [i for i in range(cg.n) if i != hub]
        if not all(cg.allowed[hub, i] and cg.allowed[i, hub] for i in leaves):
            continue
        cands.append((f"hub={hub}", Overlay.realize(cg, [(hub, i) for i in leaves], undirected=True)))
    if not cands:
        raise ToposynthError("no silo can reach every other silo in both directions")
    k, rep = _pick_best(cands)
    hub = int(cands[k][0].split("=")[1])
    return BuilderResult(cands[k][1], rep, "star", _result_flags(cg), {"hub": hub})


def _result_flags(cg: ConnectivityGraph, extra=()) -> frozenset[str]:
    flags = set(extra)
    if cg.is_edge_capacitated():
        flags.add(EDGE_CAPACITATED)
    return frozenset(flags)


# --------------------------------------------------------------------------- MST


def build_mst_overlay(cg: ConnectivityGraph) -> BuilderResult:
    """Prim MST on pairwise averaged unit-degree delays.

    In an edge-capacitated network these weights do not depend on degrees and
    the tree is an optimal undirected overlay. The reported cycle time always
    uses the tree's realized degrees.
    """
    if cg.n == 1:
        return _trivial(cg, "mst")
    tree = prim_mst(_undirected_candidates(cg, symmetric_unit_weights(cg)))
    overlay = Overlay.realize(cg, [(u, v) for u, v, _ in tree.edges], undirected=True)
    return _result(cg, overlay, "mst", tree_weight=tree.total_weight())


# --------------------------------------------------------------------------- RING


def christofides_tour(w: np.ndarray) -> list[int]:
    """Hamiltonian tour (open node order, starting at 0) by Christofides' heuristic.

    ``w`` must be a symmetric complete weight matrix.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if n <= 2:
        return list(range(n))
    tree = prim_mst(UGraph.complete(w))
    deg = tree.degrees()
    odd = [v for v in range(n) if deg[v] % 2]
    sub = UGraph.complete(w[np.ix_(odd, odd)])
    matching = [(odd[a], odd[b]) for a, b in min_weight_perfect_matching(sub)]
    multi = [(u, v) for u, v, _ in tree.edges] + matching
    walk = eulerian_circuit(multi, start=0)
    seen: set[int] = set()
    tour = []
    for v in walk:
        if v not in seen:
            seen.add(v)
            tour.append(v)
    return tour


def tour_weight(w: np.ndarray, tour: list[int]) -> float:
    if len(tour) < 2:
        return 0.0
    return float(sum(w[a, b] for a, b in zip(tour, tour[1:] + tour[:1])))


def build_ring_christofides(cg: ConnectivityGraph, weight: str = "unit") -> BuilderResult:
    """Directed ring following a Christofides tour.

    ``weight="unit"`` tours on averaged unit-degree delays, which equal the
    realized ring delays since every ring node has in/out degree 1;
    ``weight="edge"`` tours on the edge-capacitated delays. Both orientations
    of the tour are evaluated and the faster one is returned.
    """
    if not cg.is_complete():
        raise ToposynthError("the ring builder needs a complete connectivity graph")
    if cg.n == 1:
        return _trivial(cg, "ring")
    if weight == "unit":
        w = symmetric_unit_weights(cg)
    elif weight == "edge":
        d = cg.edge_capacitated_matrix()
        w = (d + d.T) / 2
    else:
        raise ValueError(f"unknown ring weight {weight!r}")
    flags = set()
    if triangle_violations(w):
        log.warning("connectivity graph %r violates the triangle inequality; ring bound void", cg.name)
        flags.add(NON_EUCLIDEAN)
    tour = christofides_tour(w)
    fwd = list(zip(tour, tour[1:] + tour[:1]))
    rev = [(b, a) for a, b in fwd]
    cands = [("forward", Overlay.realize(cg, fwd)), ("reverse", Overlay.realize(cg, rev))]
    k, rep = _pick_best(cands)
    return BuilderResult(
        cands[k][1],
        rep,
        "ring",
        _result_flags(cg, flags),
        {"tour": tour, "tour_weight": tour_weight(w, tour), "orientation": cands[k][0]},
    )


# --------------------------------------------------------------------------- delta-MBST


def delta_prim(g: UGraph, delta: int, root: int = 0) -> UGraph:
    """Prim's growth refusing to attach to tree nodes that already have ``delta`` edges."""
    if delta < 2:
        raise ValueError("delta must be >= 2")
    n = g.node_count
    if len(g.edges) != n * (n - 1) // 2:
        raise ToposynthError("delta_prim expects a complete graph")
    w = g.weight_matrix()
    in_tree = np.zeros(n, dtype=bool)
    in_tree[root] = True
    deg = np.zeros(n, dtype=int)
    edges = []
    for _ in range(n - 1):
        rows = np.nonzero(in_tree & (deg < delta))[0]
        cols = np.nonzero(~in_tree)[0]
        sub = w[np.ix_(rows, cols)]
        flat = int(np.argmin(sub))  # row-major: ties go to the smallest (u, v)
        u, v = int(rows[flat // len(cols)]), int(cols[flat % len(cols)])
        edges.append((u, v, float(w[u, v])))
        in_tree[v] = True
        deg[u] += 1
        deg[v] += 1
    return UGraph(n, tuple(edges))


def cube_hamiltonian_path(t: UGraph) -> list[int]:
    """Node order visiting every node of tree ``t`` with consecutive hop distance <= 3.

    Recursive construction: for a tree edge ``(u, v)`` split the tree at that
    edge, take a path from ``u`` to a neighbour ``u'`` inside ``u``'s side and a
    path from a neighbour ``v'`` to ``v`` inside ``v``'s side, and join them
    (``u' - u - v - v'`` spans at most 3 hops). The two ends are tree-adjacent,
    so the path also closes into a Hamiltonian cycle of the cube.
    """
    if not t.is_tree():
        raise NotATreeError("cube_hamiltonian_path needs a tree")
    n = t.node_count
    if n == 1:
        return [0]
    adj = t.neighbors()

    def side(root: int, banned: int, allowed: set[int]) -> set[int]:
        seen = {root}
        stack = [root]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y != banned and y in allowed and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def path(u: int, v: int, nodes: set[int]) -> list[int]:
        # Hamiltonian path of the cube of the subtree on ``nodes`` from u to v.
        nu = side(u, v, nodes)
        nv = nodes - nu
        if len(nu) == 1:
            left = [u]
        else:
            u2 = min(y for y in adj[u] if y in nu)
            left = path(u, u2, nu)
        if len(nv) == 1:
            right = [v]
        else:
            v2 = min(y for y in adj[v] if y in nv)
            right = path(v, v2, nv)[::-1]
        return left + right

    start = 0
    return path(start, adj[start][0], set(range(n)))


def build_delta_mbst(cg: ConnectivityGraph) -> BuilderResult:
    """Bounded-degree tree heuristic for node-capacitated networks.

    Candidates: a Hamiltonian path in the cube of the MST, and the
    ``delta``-Prim tree for every ``delta`` in ``3..N``; all on the symmetric
    node-capacitated weights. The candidate with the smallest realized cycle
    time wins; ties keep the earlier candidate.
    """
    if not cg.is_complete():
        raise ToposynthError("the delta-MBST builder needs a complete connectivity graph")
    n = cg.n
    if n == 1:
        return _trivial(cg, "delta_mbst")
    g = UGraph.complete(cg.node_capacitated_matrix())
    mst = prim_mst(g)
    ham = cube_hamiltonian_path(mst)
    cands: list[tuple[str, Overlay]] = [
        ("cube-path", Overlay.realize(cg, list(zip(ham, ham[1:])), undirected=True))
    ]
    for delta in range(3, n + 1):
        tree = delta_prim(g, delta)
        cands.append((f"delta={delta}", Overlay.realize(cg, [(u, v) for u, v, _ in tree.edges], undirected=True)))
    k, rep = _pick_best(cands)
    return BuilderResult(
        cands[k][1],
        rep,
        "delta_mbst",
        _result_flags(cg),
        {"candidate": cands[k][0], "hamiltonian_path": ham},
    )


BUILDERS: dict[str, Callable[[ConnectivityGraph], BuilderResult]] = {
    "star": build_star,
    "mst": build_mst_overlay,
    "ring": build_ring_christofides,
    "dmbst": build_delta_mbst,
}
