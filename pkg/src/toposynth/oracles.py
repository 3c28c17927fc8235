"""Exhaustive reference solvers for small instances.

These are exponential and guarded by size caps (see :mod:`toposynth.config`).
They exist to check the polynomial builders, not to be used in production.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .builders import BuilderResult, evaluate, _result_flags
from .config import DIRECTED_MCT_LIMIT, SUBGRAPH_MCT_LIMIT, UNDIRECTED_MCT_LIMIT, oracle_limit
from .delay import ConnectivityGraph, Overlay
from .errors import LimitExceededError, ToposynthError
from .graph import UGraph
from .maxplus import _critical_circuit, _karp_max_mean


def _check(n: int, limit: int | None, default: int, what: str) -> None:
    cap = oracle_limit(default) if limit is None else limit
    if n > cap:
        raise LimitExceededError(f"{what} is capped at {cap} nodes, got {n}")


# --------------------------------------------------------------------------- trees


@lru_cache(maxsize=None)
def _all_labelled_trees(n: int) -> np.ndarray:
    """Every labelled tree on ``n`` nodes as an ``(n**(n-2), n-1, 2)`` edge array."""
    if n == 1:
        return np.zeros((1, 0, 2), dtype=np.int64)
    if n == 2:
        return np.array([[[0, 1]]], dtype=np.int64)
    out = np.empty((n ** (n - 2), n - 1, 2), dtype=np.int64)
    for k, seq in enumerate(itertools.product(range(n), repeat=n - 2)):
        deg = [1] * n
        for x in seq:
            deg[x] += 1
        edges = []
        for x in seq:
            leaf = deg.index(1)
            edges.append((min(leaf, x), max(leaf, x)))
            deg[leaf] -= 1
            deg[x] -= 1
        a, b = [i for i in range(n) if deg[i] == 1]
        edges.append((a, b))
        out[k] = sorted(edges)
    out.setflags(write=False)
    return out


def spanning_trees(g: UGraph, limit: int | None = None) -> list[UGraph]:
    """All spanning trees of ``g`` (small graphs only)."""
    n = g.node_count
    _check(n, limit, UNDIRECTED_MCT_LIMIT, "spanning tree enumeration")
    w = g.weight_matrix()
    es = g.edge_set()
    result = []
    for tree in _all_labelled_trees(n):
        pairs = [(int(a), int(b)) for a, b in tree]
        if all(p in es for p in pairs):
            result.append(UGraph(n, tuple((a, b, float(w[a, b])) for a, b in pairs)))
    return sorted(result, key=lambda t: [(u, v) for u, v, _ in t.edges])


def _tree_taus(cg: ConnectivityGraph, trees: np.ndarray) -> np.ndarray:
    """Realized cycle time of every tree in a stacked edge array, vectorized."""
    n = cg.n
    t_count = trees.shape[0]
    if n == 1:
        return np.full(t_count, float(cg.self_loops()[0]))
    deg = np.zeros((t_count, n))
    for col in (0, 1):
        np.add.at(deg, (np.arange(t_count)[:, None], trees[:, :, col]), 1.0)
    u, v = trees[:, :, 0], trees[:, :, 1]
    du = np.take_along_axis(deg, u, axis=1)
    dv = np.take_along_axis(deg, v, axis=1)
    st = cg.self_loops()

    def arc(a, b, da, db):
        rate = np.minimum(np.minimum(cg.up_capacity[a] / da, cg.down_capacity[b] / db), cg.avail_bw[a, b])
        return st[a] + cg.latency[a, b] + cg.model_bits / rate

    two = (arc(u, v, du, dv) + arc(v, u, dv, du)) / 2
    return np.maximum(two.max(axis=1), st.max())


# --------------------------------------------------------------------------- MCT


def elementary_circuit_bounds(w: np.ndarray) -> np.ndarray:
    """``B[a, b]``: smallest mean of an elementary circuit using arc ``a -> b``.

    ``w`` holds arc weights with ``-inf`` or ``inf`` for absent arcs (diagonal
    ignored). The diagonal of the result is the smallest circuit mean through
    each node. Subset dynamic program, ``O(2^n n^3)``; ``inf`` where no circuit exists.
    """
    n = w.shape[0]
    c = np.where(np.isfinite(w), w, np.inf)
    np.fill_diagonal(c, np.inf)
    full = 1 << n
    # p[s, mask, v]: cheapest elementary path s ~> v over exactly ``mask``
    p = np.full((n, full, n), np.inf)
    for s in range(n):
        p[s, 1 << s, s] = 0.0
    out = np.full((n, n), np.inf)
    bits = np.array([[(mask >> v) & 1 for v in range(n)] for mask in range(full)], dtype=bool)
    size = bits.sum(axis=1)
    for mask in range(1, full):
        cur = p[:, mask, :]
        if not np.isfinite(cur).any():
            continue
        # close the circuit: path s ~> v plus arc v -> s
        close = (cur + c.T) / size[mask]
        out = np.minimum(out, close)  # out[s, v] = best circuit whose last arc is v -> s
        ext = np.min(cur[:, :, None] + c[None, :, :], axis=1)
        for x in np.nonzero(~bits[mask])[0]:
            nm = mask | (1 << x)
            np.minimum(p[:, nm, x], ext[:, x], out=p[:, nm, x])
    bound = out.T.copy()
    diag = bound.min(axis=1)
    np.fill_diagonal(bound, diag)
    return bound


def brute_force_mct(cg: ConnectivityGraph, mode: str = "directed", limit: int | None = None) -> BuilderResult:
    """Minimum cycle time overlay by exhaustive search.

    ``mode="undirected"`` searches symmetric overlays: every spanning tree,
    plus every connected spanning subgraph when access links can bottleneck
    and the instance is small. ``mode="directed"`` searches every strongly
    connected arc subset by branch and bound.
    """
    if mode == "undirected":
        return _undirected_mct(cg, limit)
    if mode == "directed":
        _check(cg.n, limit, DIRECTED_MCT_LIMIT, "directed MCT search")
        return _directed_mct(cg)
    raise ValueError(f"unknown mode {mode!r}")


def _undirected_mct(cg: ConnectivityGraph, limit: int | None) -> BuilderResult:
    n = cg.n
    _check(n, limit, UNDIRECTED_MCT_LIMIT, "undirected MCT search")
    if n == 1:
        ov = Overlay.realize(cg, [], undirected=True)
        return BuilderResult(ov, evaluate(ov), "brute_force", _result_flags(cg))
    both = cg.allowed & cg.allowed.T
    trees = _all_labelled_trees(n)
    ok = both[trees[:, :, 0], trees[:, :, 1]].all(axis=1)
    trees = trees[ok]
    if not len(trees):
        raise ToposynthError("no symmetric spanning tree exists")
    taus = _tree_taus(cg, trees)
    # lexicographic tie-break among equal taus
    tol = 1e-12 * max(1.0, float(np.abs(taus).max()))
    best_tau = taus.min()
    idx = [k for k in np.nonzero(taus <= best_tau + tol)[0]]
    k = min(idx, key=lambda k: trees[k].tolist())
    best = Overlay.realize(cg, trees[k].tolist(), undirected=True)
    best_rep = evaluate(best)
    scanned = len(trees)
    cap = oracle_limit(SUBGRAPH_MCT_LIMIT) if limit is None else min(limit, oracle_limit(SUBGRAPH_MCT_LIMIT))
    if not cg.is_edge_capacitated() and n <= cap:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if both[i, j]]
        for r in range(n, len(pairs) + 1):
            for sub in itertools.combinations(pairs, r):
                g = UGraph(n, tuple((a, b, 1.0) for a, b in sub))
                if not g.is_connected():
                    continue
                ov = Overlay.realize(cg, sub, undirected=True)
                rep = evaluate(ov)
                scanned += 1
                if rep.tau < best_rep.tau - tol:
                    best, best_rep = ov, rep
    return BuilderResult(best, best_rep, "brute_force", _result_flags(cg), {"mode": "undirected", "scanned": scanned})


def _directed_mct(cg: ConnectivityGraph) -> BuilderResult:
    """Branch and bound over arc subsets.

    A state is (S, F): the arcs still available and the arcs forced in. Any
    overlay of the subtree satisfies ``F <= overlay <= S``. Arc delays only
    grow with degrees, so evaluating S with the degrees of F (floored at 1)
    underestimates every circuit mean in the subtree.
    """
    n = cg.n
    if n == 1:
        ov = Overlay.realize(cg, [])
        return BuilderResult(ov, evaluate(ov), "brute_force", _result_flags(cg), {"mode": "directed"})
    st = cg.self_loops()
    loop_floor = float(st.max())
    degree_free = cg.is_edge_capacitated()
    all_arcs = frozenset((i, j) for i in range(n) for j in range(n) if cg.allowed[i, j])

    def degrees(arcs):
        out = np.zeros(n)
        inn = np.zeros(n)
        for a, b in arcs:
            out[a] += 1
            inn[b] += 1
        return out, inn

    def weights(arcs, out, inn):
        d = cg.delay_matrix(out, inn)
        w = np.full((n, n), -np.inf)
        idx = tuple(np.array(sorted(arcs)).T)
        w[idx] = d[idx]
        w[np.arange(n), np.arange(n)] = st
        return w

    def strongly_connected(arcs) -> bool:
        fwd = [[] for _ in range(n)]
        bwd = [[] for _ in range(n)]
        for a, b in arcs:
            fwd[a].append(b)
            bwd[b].append(a)
        for adj in (fwd, bwd):
            seen = {0}
            stack = [0]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if len(seen) != n:
                return False
        return True

    def max_circuit(w):
        tau, _, _ = _karp_max_mean(w)
        weights_d = {(a, b): float(w[a, b]) for a in range(n) for b in range(n) if w[a, b] > -np.inf}
        circ = _critical_circuit(w, tau, weights_d)
        if circ is None:
            # circuit extraction failed numerically; fall back on the DP value alone
            return tau, []
        nodes = circ.nodes
        return tau, [(nodes[k], nodes[k + 1]) for k in range(len(nodes) - 1) if nodes[k] != nodes[k + 1]]

    def walk_bound(w: np.ndarray, forced) -> float:
        # Every node, and every forced arc, lies on an elementary circuit of
        # any feasible overlay.
        b = elementary_circuit_bounds(w)
        vals = [loop_floor, float(np.diag(b).max())] + [float(b[a]) for a in forced]
        return max(vals)

    def greedy(s: frozenset) -> tuple[float, frozenset]:
        # drop critical arcs one at a time while that helps
        out, inn = degrees(s)
        tau, circ = max_circuit(weights(s, out, inn))
        while True:
            step = None
            for a in circ:
                t = s - {a}
                if not strongly_connected(t):
                    continue
                o, i = degrees(t)
                tt, cc = max_circuit(weights(t, o, i))
                if step is None or tt < step[0]:
                    step = (tt, t, cc)
            if step is None or step[0] > tau:
                return tau, s
            if step[0] == tau and len(step[1]) == len(s):
                return tau, s
            tau, s, circ = step

    root_lb = walk_bound(weights(all_arcs, np.ones(n), np.ones(n)), ())
    best_tau, best_arcs = greedy(all_arcs)
    scale = max(1.0, abs(best_tau))
    tol = 1e-12 * scale
    visited: dict[frozenset, list[frozenset]] = {}
    nodes_visited = 0

    def search(s: frozenset, f: frozenset, memo: bool = True) -> None:
        nonlocal best_tau, best_arcs, nodes_visited
        if best_tau <= root_lb + tol:
            return
        # a state whose S was already explored with fewer forced arcs is covered
        prior = visited.setdefault(s, [])
        if memo and any(g <= f for g in prior):
            return
        prior.append(f)
        nodes_visited += 1
        if not strongly_connected(s):
            return
        out, inn = degrees(s)
        tau_real, circ_real = max_circuit(weights(s, out, inn))
        if tau_real < best_tau - tol or (abs(tau_real - best_tau) <= tol and sorted(s) < sorted(best_arcs)):
            best_tau, best_arcs = tau_real, s
        if degree_free:
            w_lb = weights(s, out, inn)
            tau_lb, circ_lb = tau_real, circ_real
        else:
            fo, fi = degrees(f)
            w_lb = weights(s, fo, fi)
            tau_lb, circ_lb = max_circuit(w_lb)
        if walk_bound(w_lb, f) >= best_tau - tol:
            return
        if tau_lb >= best_tau - tol:
            # the cheapest-case critical circuit already fails: some arc of it must go
            free = [a for a in circ_lb if a not in f]
            for k, a in enumerate(free):
                search(s - {a}, f | frozenset(free[:k]))
            return
        free = [a for a in circ_real if a not in f]
        if not free:
            touched = {x for arc in circ_real for x in arc}
            free = sorted(a for a in s - f if a[0] in touched or a[1] in touched)
        if not free:
            return
        a = free[0]
        search(s - {a}, f)
        search(s, f | {a}, memo=False)

    search(all_arcs, frozenset())
    ov = Overlay.realize(cg, sorted(best_arcs))
    return BuilderResult(
        ov,
        evaluate(ov),
        "brute_force",
        _result_flags(cg),
        {"mode": "directed", "solver": "branch-and-bound", "lower_bound": root_lb, "states": nodes_visited},
    )


# --------------------------------------------------------------------------- small combinatorial oracles


def brute_force_tsp(w: np.ndarray, limit: int | None = None) -> tuple[list[int], float]:
    """Cheapest Hamiltonian tour by enumerating permutations (node 0 fixed first)."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    _check(n, limit, 9, "brute-force TSP")
    if n == 1:
        return [0], 0.0
    if n == 2:
        return [0, 1], float(w[0, 1] + w[1, 0])
    best, best_tour = np.inf, None
    for perm in itertools.permutations(range(1, n)):
        tour = (0,) + perm
        cost = float(w[list(tour), list(tour[1:] + (0,))].sum())
        if cost < best:
            best, best_tour = cost, list(tour)
    return best_tour, best


def brute_force_matching(w: np.ndarray) -> tuple[list[tuple[int, int]], float]:
    """Minimum-weight perfect matching on an even node count by recursion."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if n % 2:
        raise ToposynthError("perfect matching needs an even node count")

    @lru_cache(maxsize=None)
    def solve(mask: int) -> tuple[float, tuple[tuple[int, int], ...]]:
        if mask == 0:
            return 0.0, ()
        i = (mask & -mask).bit_length() - 1
        best = (np.inf, ())
        rest = mask & ~(1 << i)
        for j in range(i + 1, n):
            if rest >> j & 1:
                cost, pairs = solve(rest & ~(1 << j))
                cost += w[i, j]
                if cost < best[0]:
                    best = (cost, ((i, j),) + pairs)
        return best

    cost, pairs = solve((1 << n) - 1)
    return list(pairs), float(cost)


def min_bottleneck_spanning_tree(g: UGraph) -> float:
    """Smallest possible largest edge weight over spanning trees (equals the MST's)."""
    ws = sorted({w for _, _, w in g.edges})
    for cut in ws:
        sub = UGraph(g.node_count, tuple(e for e in g.edges if e[2] <= cut))
        if sub.is_connected():
            return cut
    raise ToposynthError("graph is disconnected")
