"""Weighted graph types and the combinatorial primitives used by the builders.

Node ids are always ``0..n-1``. Weights are float milliseconds. Values are
immutable once constructed.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .config import CIRCUIT_LIMIT, oracle_limit
from .errors import (
    DisconnectedGraphError,
    LimitExceededError,
    OddDegreeError,
    OddNodeCountError,
    ToposynthError,
)

Arc = tuple[int, int, float]


def _check_weight(w: float, where: str) -> float:
    w = float(w)
    if not math.isfinite(w) or w < 0:
        raise ToposynthError(f"{where}: weight must be finite and >= 0, got {w}")
    return w


@dataclass(frozen=True)
class Digraph:
    node_count: int
    arcs: tuple[Arc, ...]

    def __post_init__(self):
        n = self.node_count
        if n < 1:
            raise ToposynthError("a digraph needs at least one node")
        seen = set()
        clean = []
        for src, dst, w in self.arcs:
            src, dst = int(src), int(dst)
            if not (0 <= src < n and 0 <= dst < n):
                raise ToposynthError(f"arc ({src},{dst}) references a node outside 0..{n - 1}")
            if (src, dst) in seen:
                raise ToposynthError(f"duplicate arc ({src},{dst})")
            seen.add((src, dst))
            clean.append((src, dst, _check_weight(w, f"arc ({src},{dst})")))
        object.__setattr__(self, "arcs", tuple(clean))

    @classmethod
    def from_matrix(cls, weights: np.ndarray) -> "Digraph":
        """Build from a square matrix; ``nan`` or ``-inf`` entries mean "no arc"."""
        w = np.asarray(weights, dtype=float)
        n = w.shape[0]
        arcs = [
            (i, j, float(w[i, j]))
            for i in range(n)
            for j in range(n)
            if not (np.isnan(w[i, j]) or w[i, j] == -np.inf)
        ]
        return cls(n, tuple(arcs))

    def weight_matrix(self) -> np.ndarray:
        """Dense matrix with ``-inf`` where there is no arc (max-plus zero)."""
        m = np.full((self.node_count, self.node_count), -np.inf)
        for src, dst, w in self.arcs:
            m[src, dst] = w
        return m

    def weights(self) -> dict[tuple[int, int], float]:
        return {(s, d): w for s, d, w in self.arcs}

    def successors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for src, dst, _ in self.arcs:
            adj[src].append(dst)
        for row in adj:
            row.sort()
        return adj

    def self_loop_weights(self) -> dict[int, float]:
        return {s: w for s, d, w in self.arcs if s == d}


@dataclass(frozen=True)
class UGraph:
    node_count: int
    edges: tuple[Arc, ...]

    def __post_init__(self):
        n = self.node_count
        if n < 1:
            raise ToposynthError("a graph needs at least one node")
        seen = set()
        clean = []
        for u, v, w in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ToposynthError(f"self-loop ({u},{v}) not allowed in an undirected graph")
            if not (0 <= u < n and 0 <= v < n):
                raise ToposynthError(f"edge ({u},{v}) references a node outside 0..{n - 1}")
            a, b = min(u, v), max(u, v)
            if (a, b) in seen:
                raise ToposynthError(f"duplicate edge ({a},{b})")
            seen.add((a, b))
            clean.append((a, b, _check_weight(w, f"edge ({a},{b})")))
        clean.sort()
        object.__setattr__(self, "edges", tuple(clean))

    @classmethod
    def complete(cls, weights: np.ndarray) -> "UGraph":
        """Complete graph using the upper triangle of a square weight matrix."""
        w = np.asarray(weights, dtype=float)
        n = w.shape[0]
        return cls(n, tuple((i, j, float(w[i, j])) for i in range(n) for j in range(i + 1, n)))

    def edge_set(self) -> set[tuple[int, int]]:
        return {(u, v) for u, v, _ in self.edges}

    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.node_count
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for row in adj:
            row.sort()
        return adj

    def weight_matrix(self) -> np.ndarray:
        """Symmetric matrix with ``inf`` where there is no edge."""
        m = np.full((self.node_count, self.node_count), np.inf)
        for u, v, w in self.edges:
            m[u, v] = m[v, u] = w
        return m

    def to_digraph(self, self_loops: Sequence[float] | None = None) -> Digraph:
        arcs = []
        for u, v, w in self.edges:
            arcs.append((u, v, w))
            arcs.append((v, u, w))
        if self_loops is not None:
            arcs.extend((i, i, float(x)) for i, x in enumerate(self_loops))
        return Digraph(self.node_count, tuple(arcs))

    def is_connected(self) -> bool:
        return _reachable(self.neighbors(), 0) == set(range(self.node_count))

    def is_tree(self) -> bool:
        return len(self.edges) == self.node_count - 1 and self.is_connected()


@dataclass(frozen=True)
class Circuit:
    """Closed walk ``nodes[0] -> ... -> nodes[-1] == nodes[0]`` with no repeated inner node."""

    nodes: tuple[int, ...]
    length: int
    total_weight: float

    @property
    def mean(self) -> float:
        return self.total_weight / self.length

    @classmethod
    def from_cycle(cls, cycle: Sequence[int], weights: dict[tuple[int, int], float]) -> "Circuit":
        """Build from an open node sequence (``[a, b, c]`` for ``a->b->c->a``).

        The sequence is rotated so the smallest node id comes first.
        """
        cycle = list(cycle)
        if not cycle:
            raise ToposynthError("empty circuit")
        k = cycle.index(min(cycle))
        cycle = cycle[k:] + cycle[:k]
        closed = tuple(cycle) + (cycle[0],)
        total = 0.0
        for a, b in zip(closed, closed[1:]):
            total += weights[(a, b)]
        return cls(closed, len(cycle), total)


def _reachable(adj: Sequence[Iterable[int]], start: int, allowed: set[int] | None = None) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in seen and (allowed is None or y in allowed):
                seen.add(y)
                queue.append(y)
    return seen


def _predecessors(g: Digraph) -> list[list[int]]:
    pred: list[list[int]] = [[] for _ in range(g.node_count)]
    for src, dst, _ in g.arcs:
        pred[dst].append(src)
    return pred


def is_strongly_connected(g: Digraph) -> bool:
    everyone = set(range(g.node_count))
    return (
        _reachable(g.successors(), 0) == everyone
        and _reachable(_predecessors(g), 0) == everyone
    )


def elementary_circuits(g: Digraph, limit: int | None = None) -> list[Circuit]:
    """All elementary circuits of ``g`` (self-loops included), each once.

    Johnson-style search: circuits are rooted at their smallest node and only
    explore the strong component of that node among nodes ``>= root``.
    """
    cap = oracle_limit(CIRCUIT_LIMIT) if limit is None else limit
    n = g.node_count
    if n > cap:
        raise LimitExceededError(f"circuit enumeration capped at {cap} nodes, got {n}")
    weights = g.weights()
    succ = [[d for d in row if d != i] for i, row in enumerate(g.successors())]
    pred: list[list[int]] = [[] for _ in range(n)]
    for i, row in enumerate(succ):
        for j in row:
            pred[j].append(i)

    found: list[Circuit] = []
    for v in sorted(g.self_loop_weights()):
        found.append(Circuit.from_cycle([v], weights))

    for root in range(n):
        allowed = set(range(root, n))
        comp = _reachable(succ, root, allowed) & _reachable(pred, root, allowed)
        if len(comp) < 2:
            continue
        blocked: set[int] = set()
        blocker: dict[int, set[int]] = defaultdict(set)
        path = [root]

        def unblock(u: int) -> None:
            stack = [u]
            while stack:
                x = stack.pop()
                if x in blocked:
                    blocked.discard(x)
                    stack.extend(blocker.pop(x, ()))

        def search(v: int) -> bool:
            closed = False
            blocked.add(v)
            for u in succ[v]:
                if u not in comp:
                    continue
                if u == root:
                    found.append(Circuit.from_cycle(path, weights))
                    closed = True
                elif u not in blocked:
                    path.append(u)
                    if search(u):
                        closed = True
                    path.pop()
            if closed:
                unblock(v)
            else:
                for u in succ[v]:
                    if u in comp:
                        blocker[u].add(v)
            return closed

        search(root)
    return found


def prim_mst(g: UGraph, root: int = 0) -> UGraph:
    """Minimum spanning tree grown from ``root``; ties broken on ``(w, u, v)``."""
    n = g.node_count
    adj: list[list[tuple[float, int]]] = [[] for _ in range(n)]
    for u, v, w in g.edges:
        adj[u].append((w, v))
        adj[v].append((w, u))
    in_tree = [False] * n
    in_tree[root] = True
    heap = [(w, root, v) for w, v in adj[root]]
    heapq.heapify(heap)
    chosen = []
    while heap and len(chosen) < n - 1:
        w, u, v = heapq.heappop(heap)
        if in_tree[v]:
            continue
        in_tree[v] = True
        chosen.append((u, v, w))
        for w2, x in adj[v]:
            if not in_tree[x]:
                heapq.heappush(heap, (w2, v, x))
    if len(chosen) != n - 1:
        raise DisconnectedGraphError("graph is disconnected; no spanning tree exists")
    return UGraph(n, tuple(chosen))


def min_weight_perfect_matching(g: UGraph) -> list[tuple[int, int]]:
    """Exact minimum-weight perfect matching of a complete graph (Edmonds' blossom)."""
    n = g.node_count
    if n % 2:
        raise OddNodeCountError(f"perfect matching needs an even node count, got {n}")
    if len(g.edges) != n * (n - 1) // 2:
        raise ToposynthError("min_weight_perfect_matching expects a complete graph")
    if n == 0:
        return []
    h = nx.Graph()
    h.add_nodes_from(range(n))
    top = max((w for _, _, w in g.edges), default=0.0)
    for u, v, w in g.edges:
        # min-weight perfect == max-weight max-cardinality on flipped weights
        h.add_edge(u, v, weight=top + 1.0 - w)
    mate = nx.max_weight_matching(h, maxcardinality=True)
    pairs = sorted((min(a, b), max(a, b)) for a, b in mate)
    if len(pairs) != n // 2:
        raise ToposynthError("matching is not perfect")
    return pairs


def eulerian_circuit(edges: Sequence[tuple[int, int]], start: int | None = None) -> list[int]:
    """Closed walk using every (multi)edge once, via Hierholzer's algorithm.

    ``edges`` may contain parallel edges. The returned walk starts and ends at
    ``start`` (default: the smallest vertex with an edge).
    """
    if not edges:
        return [] if start is None else [start]
    incident: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for idx, (u, v) in enumerate(edges):
        if u == v:
            raise ToposynthError("self-loops are not supported in eulerian_circuit")
        incident[u].append((v, idx))
        incident[v].append((u, idx))
    odd = sorted(x for x, inc in incident.items() if len(inc) % 2)
    if odd:
        raise OddDegreeError(f"nodes with odd degree: {odd}")
    nodes = sorted(incident)
    if start is None:
        start = nodes[0]
    if start not in incident:
        raise ToposynthError(f"start node {start} has no incident edge")
    nbrs = {x: [y for y, _ in inc] for x, inc in incident.items()}
    if _reachable(nbrs, start) != set(nodes):
        raise DisconnectedGraphError("edges do not form a connected multigraph")

    for inc in incident.values():
        inc.sort(reverse=True)  # pop() then yields the smallest neighbour first
    used = [False] * len(edges)
    stack = [start]
    walk: list[int] = []
    while stack:
        x = stack[-1]
        inc = incident[x]
        while inc and used[inc[-1][1]]:
            inc.pop()
        if inc:
            y, idx = inc.pop()
            used[idx] = True
            stack.append(y)
        else:
            walk.append(stack.pop())
    walk.reverse()
    return walk


def hop_distances(g: UGraph) -> np.ndarray:
    """All-pairs hop counts (``inf`` when unreachable)."""
    n = g.node_count
    adj = g.neighbors()
    dist = np.full((n, n), np.inf)
    for s in range(n):
        dist[s, s] = 0
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if dist[s, y] == np.inf:
                    dist[s, y] = dist[s, x] + 1
                    queue.append(y)
    return dist


def graph_cube(t: UGraph) -> UGraph:
    """Edges between nodes at hop distance 1..3 in ``t``; weight is the hop count."""
    dist = hop_distances(t)
    n = t.node_count
    edges = [
        (i, j, float(dist[i, j]))
        for i in range(n)
        for j in range(i + 1, n)
        if dist[i, j] <= 3
    ]
    return UGraph(n, tuple(edges))
