"""Network delay model: underlay -> connectivity graph -> overlay arc delays.

Units: delays in milliseconds, model size in bits, capacities stored in
bits/ms (files and constructors take Mbps; 1 Mbps == 1e3 bits/ms).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DisconnectedGraphError,
    NotStronglyConnectedError,
    ToposynthError,
    UnderlayValidationError,
)
from .graph import Digraph, is_strongly_connected

MBPS = 1e3  # bits per millisecond in one Mbps
EARTH_RADIUS_KM = 6371.0
LATENCY_SLOPE_MS_PER_KM = 0.0085
LATENCY_INTERCEPT_MS = 4.0


def link_latency(distance_km: float) -> float:
    """Latency (ms) of a link of the given length, affine in distance."""
    if distance_km < 0:
        raise ValueError(f"distance must be >= 0, got {distance_km}")
    return LATENCY_SLOPE_MS_PER_KM * distance_km + LATENCY_INTERCEPT_MS


def geodesic_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between two ``(lat, lon)`` points in degrees."""
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


# --------------------------------------------------------------------------- underlay


@dataclass(frozen=True)
class UnderlayNode:
    id: str
    kind: str  # "silo" or "router"
    lat: float
    lon: float
    up_mbps: float | None = None
    down_mbps: float | None = None
    compute_ms: float | None = None

    @property
    def is_silo(self) -> bool:
        return self.kind == "silo"


@dataclass(frozen=True)
class CoreLink:
    u: str
    v: str
    capacity_mbps: float
    latency_ms: float | None = None


@dataclass(frozen=True)
class Underlay:
    """Physical network. Each silo node doubles as its own core attachment
    point; its access link is implicit and described by ``up_mbps``/``down_mbps``.
    """

    name: str
    nodes: tuple[UnderlayNode, ...]
    links: tuple[CoreLink, ...]
    access_latency_ms: float = LATENCY_INTERCEPT_MS

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            dup = sorted({x for x in ids if ids.count(x) > 1})
            raise UnderlayValidationError(f"duplicate node ids: {dup}")
        for node in self.nodes:
            if node.kind not in ("silo", "router"):
                raise UnderlayValidationError(f"node {node.id!r}: kind must be 'silo' or 'router'")
            if not (-90 <= node.lat <= 90 and -180 <= node.lon <= 180):
                raise UnderlayValidationError(f"node {node.id!r}: coordinates out of range")
            if node.is_silo:
                for attr in ("up_mbps", "down_mbps", "compute_ms"):
                    if getattr(node, attr) is None:
                        raise UnderlayValidationError(f"silo {node.id!r} is missing {attr}")
                if not (node.up_mbps > 0 and node.down_mbps > 0):
                    raise UnderlayValidationError(f"silo {node.id!r}: access capacities must be > 0")
                if node.compute_ms < 0:
                    raise UnderlayValidationError(f"silo {node.id!r}: compute_ms must be >= 0")
        known = set(ids)
        seen = set()
        for k, link in enumerate(self.links):
            if link.u not in known or link.v not in known:
                raise UnderlayValidationError(f"links[{k}]: unknown endpoint in ({link.u!r}, {link.v!r})")
            if link.u == link.v:
                raise UnderlayValidationError(f"links[{k}]: self-link on {link.u!r}")
            key = frozenset((link.u, link.v))
            if key in seen:
                raise UnderlayValidationError(f"links[{k}]: duplicate link ({link.u!r}, {link.v!r})")
            seen.add(key)
            if not link.capacity_mbps > 0:
                raise UnderlayValidationError(f"links[{k}]: capacity must be > 0")
            if link.latency_ms is not None and link.latency_ms < 0:
                raise UnderlayValidationError(f"links[{k}]: latency must be >= 0")
        if self.access_latency_ms < 0:
            raise UnderlayValidationError("access_latency_ms must be >= 0")
        if not any(n.is_silo for n in self.nodes):
            raise UnderlayValidationError("underlay has no silo")

    @property
    def silos(self) -> list[UnderlayNode]:
        return [n for n in self.nodes if n.is_silo]


# --------------------------------------------------------------------------- connectivity


@dataclass(frozen=True, eq=False)
class ConnectivityGraph:
    """Pairwise measurable quantities between silos plus per-silo parameters.

    ``avail_bw``, ``up_capacity`` and ``down_capacity`` are in bits/ms and may
    be ``inf`` (no bottleneck). ``allowed[i, j]`` says whether ``i`` may send to
    ``j`` directly.
    """

    silo_ids: tuple[str, ...]
    latency: np.ndarray
    avail_bw: np.ndarray
    up_capacity: np.ndarray
    down_capacity: np.ndarray
    compute_time: np.ndarray
    model_bits: float
    local_steps: int = 1
    allowed: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        n = len(self.silo_ids)
        conv = {
            "latency": (n, n),
            "avail_bw": (n, n),
            "up_capacity": (n,),
            "down_capacity": (n,),
            "compute_time": (n,),
        }
        for attr, shape in conv.items():
            arr = np.array(getattr(self, attr), dtype=float)
            if arr.shape != shape:
                raise ToposynthError(f"{attr} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        allowed = np.ones((n, n), dtype=bool) if self.allowed is None else np.array(self.allowed, dtype=bool)
        np.fill_diagonal(allowed, False)
        allowed.setflags(write=False)
        object.__setattr__(self, "allowed", allowed)
        off = ~np.eye(n, dtype=bool)
        if np.any(self.latency[off] < 0) or not np.all(np.isfinite(self.latency[off])):
            raise ToposynthError("latencies must be finite and >= 0")
        if np.any(self.avail_bw[off] <= 0):
            raise ToposynthError("available bandwidths must be > 0")
        if np.any(self.up_capacity <= 0) or np.any(self.down_capacity <= 0):
            raise ToposynthError("access capacities must be > 0")
        if np.any(self.compute_time < 0):
            raise ToposynthError("compute times must be >= 0")
        if not self.model_bits > 0:
            raise ToposynthError("model_bits must be > 0")
        if self.local_steps < 0:
            raise ToposynthError("local_steps must be >= 0")
        if n > 1 and not is_strongly_connected(Digraph.from_matrix(np.where(allowed, 1.0, np.nan))):
            raise NotStronglyConnectedError("connectivity graph is not strongly connected")

    @property
    def n(self) -> int:
        return len(self.silo_ids)

    @classmethod
    def from_mbps(
        cls,
        latency_ms,
        avail_mbps,
        up_mbps,
        down_mbps,
        compute_ms,
        model_bits: float,
        local_steps: int = 1,
        silo_ids: Sequence[str] | None = None,
        name: str = "",
    ) -> "ConnectivityGraph":
        lat = np.asarray(latency_ms, dtype=float)
        n = lat.shape[0]
        ids = tuple(silo_ids) if silo_ids is not None else tuple(str(i) for i in range(n))
        return cls(
            ids,
            lat,
            np.broadcast_to(np.asarray(avail_mbps, dtype=float), (n, n)) * MBPS,
            np.broadcast_to(np.asarray(up_mbps, dtype=float), (n,)) * MBPS,
            np.broadcast_to(np.asarray(down_mbps, dtype=float), (n,)) * MBPS,
            np.broadcast_to(np.asarray(compute_ms, dtype=float), (n,)),
            float(model_bits),
            local_steps,
            name=name,
        )

    @classmethod
    def from_delays(cls, delays, name: str = "") -> "ConnectivityGraph":
        """Abstract edge-capacitated instance whose arc delay is exactly ``delays[i, j]``.

        Compute time is zero and every capacity is unbounded, so the delay does
        not depend on overlay degrees.
        """
        d = np.asarray(delays, dtype=float)
        n = d.shape[0]
        return cls(
            tuple(str(i) for i in range(n)),
            d,
            np.full((n, n), np.inf),
            np.full(n, np.inf),
            np.full(n, np.inf),
            np.zeros(n),
            1.0,
            1,
            name=name,
        )

    def self_loops(self) -> np.ndarray:
        """Self-loop delays ``s * T_c(i)``."""
        return self.local_steps * self.compute_time

    def delay_matrix(self, out_deg, in_deg) -> np.ndarray:
        """Arc delays for every ordered pair given per-node out/in degrees (>= 1)."""
        out_deg = np.maximum(np.asarray(out_deg, dtype=float), 1.0)
        in_deg = np.maximum(np.asarray(in_deg, dtype=float), 1.0)
        rate = np.minimum(
            np.minimum((self.up_capacity / out_deg)[:, None], (self.down_capacity / in_deg)[None, :]),
            self.avail_bw,
        )
        d = self.self_loops()[:, None] + self.latency + self.model_bits / rate
        np.fill_diagonal(d, self.self_loops())
        return d

    def unit_degree_delays(self) -> np.ndarray:
        return self.delay_matrix(np.ones(self.n), np.ones(self.n))

    def edge_capacitated_matrix(self) -> np.ndarray:
        d = self.self_loops()[:, None] + self.latency + self.model_bits / self.avail_bw
        np.fill_diagonal(d, 0.0)
        return d

    def node_capacitated_matrix(self) -> np.ndarray:
        st = self.self_loops()
        tx = self.model_bits / self.up_capacity
        half = st[:, None] + tx[:, None] + self.latency
        d = (half + half.T) / 2  # exactly symmetric
        np.fill_diagonal(d, 0.0)
        return d

    def is_edge_capacitated(self) -> bool:
        """True when ``min(C_UP(i), C_DN(j)) / N >= A(i', j')`` on every allowed pair."""
        lhs = np.minimum(self.up_capacity[:, None], self.down_capacity[None, :]) / self.n
        return bool(np.all((lhs >= self.avail_bw)[self.allowed]))

    def is_complete(self) -> bool:
        return bool(np.all(self.allowed | np.eye(self.n, dtype=bool)))


def overlay_arc_delay(cg: ConnectivityGraph, out_deg_i: int, in_deg_j: int, i: int, j: int) -> float:
    """Delay from the start of ``i``'s computation to ``j`` holding ``i``'s model."""
    if out_deg_i < 1 or in_deg_j < 1:
        raise ValueError("degrees must be >= 1")
    rate = min(cg.up_capacity[i] / out_deg_i, cg.down_capacity[j] / in_deg_j, cg.avail_bw[i, j])
    return float(cg.local_steps * cg.compute_time[i] + cg.latency[i, j] + cg.model_bits / rate)


def edge_capacitated_weight(cg: ConnectivityGraph, i: int, j: int) -> float:
    """Degree-independent delay used when access links are not the bottleneck."""
    return float(cg.local_steps * cg.compute_time[i] + cg.latency[i, j] + cg.model_bits / cg.avail_bw[i, j])


def node_capacitated_weight(cg: ConnectivityGraph, i: int, j: int) -> float:
    """Symmetric edge weight fed to the bounded-degree tree heuristics."""
    s = cg.local_steps
    return float(
        (
            s * (cg.compute_time[i] + cg.compute_time[j])
            + cg.latency[i, j]
            + cg.latency[j, i]
            + cg.model_bits / cg.up_capacity[i]
            + cg.model_bits / cg.up_capacity[j]
        )
        / 2
    )


def triangle_violations(w: np.ndarray, rtol: float = 1e-6) -> list[tuple[int, int, int]]:
    """Triples ``(i, j, k)`` with ``w[i, j] > w[i, k] + w[k, j]`` beyond ``rtol``."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    bad = []
    for k in range(n):
        via = w[:, k][:, None] + w[k, :][None, :]
        viol = w > via * (1 + rtol) + 1e-12
        for i, j in zip(*np.nonzero(viol)):
            if len({int(i), int(j), k}) == 3:
                bad.append((int(i), int(j), k))
    return bad


def is_euclidean(w: np.ndarray, rtol: float = 1e-6) -> bool:
    """Symmetric and satisfying the triangle inequality, both within ``rtol``."""
    w = np.asarray(w, dtype=float)
    if not np.allclose(w, w.T, rtol=rtol, atol=0):
        return False
    return not triangle_violations(w, rtol)


# --------------------------------------------------------------------------- routing


def _core_graph(u: Underlay) -> tuple[list[str], list[list[tuple[int, float, float]]]]:
    ids = [n.id for n in u.nodes]
    index = {x: k for k, x in enumerate(ids)}
    coords = {n.id: (n.lat, n.lon) for n in u.nodes}
    adj: list[list[tuple[int, float, float]]] = [[] for _ in ids]
    for link in u.links:
        lat = link.latency_ms
        if lat is None:
            lat = link_latency(geodesic_distance(coords[link.u], coords[link.v]))
        a, b = index[link.u], index[link.v]
        cap = link.capacity_mbps * MBPS
        adj[a].append((b, lat, cap))
        adj[b].append((a, lat, cap))
    for row in adj:
        row.sort()
    return ids, adj


def _shortest_paths(adj, source: int) -> dict[int, tuple[float, tuple[int, ...]]]:
    """Latency-shortest paths; ties go to the lexicographically smallest node sequence."""
    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    heap = [(0.0, (source,))]
    while heap:
        dist, path = heapq.heappop(heap)
        x = path[-1]
        if x in best:
            continue
        best[x] = (dist, path)
        for y, lat, _ in adj[x]:
            if y not in best:
                heapq.heappush(heap, (dist + lat, path + (y,)))
    return best


def build_connectivity(
    u: Underlay,
    model_bits: float,
    local_steps: int = 1,
    bw_model: str = "fair-share",
    include_access_latency: bool = True,
) -> ConnectivityGraph:
    """Route every silo pair on latency-shortest core paths and derive ``l`` and ``A``.

    ``l(i, j)`` sums the core-path link latencies plus both access-link
    latencies. ``A(i', j')`` is the smallest per-flow share along the path:
    with ``fair-share`` each directed link capacity is divided by the number
    of silo-pair routes that cross it in that direction; ``min-cap`` uses the
    raw capacity.
    """
    if bw_model not in ("fair-share", "min-cap"):
        raise ValueError(f"unknown bw model {bw_model!r}")
    ids, adj = _core_graph(u)
    index = {x: k for k, x in enumerate(ids)}
    silos = u.silos
    sidx = [index[s.id] for s in silos]
    n = len(silos)
    cap = {}
    for a, row in enumerate(adj):
        for b, _, c in row:
            cap[(a, b)] = c

    routes: dict[tuple[int, int], tuple[float, tuple[int, ...]]] = {}
    for i, a in enumerate(sidx):
        paths = _shortest_paths(adj, a)
        for j, b in enumerate(sidx):
            if i == j:
                continue
            if b not in paths:
                raise DisconnectedGraphError(
                    f"underlay {u.name!r}: no core path from {silos[i].id!r} to {silos[j].id!r}"
                )
            routes[(i, j)] = paths[b]

    share: dict[tuple[int, int], int] = {}
    for _, path in routes.values():
        for hop in zip(path, path[1:]):
            share[hop] = share.get(hop, 0) + 1

    access = u.access_latency_ms if include_access_latency else 0.0
    latency = np.zeros((n, n))
    avail = np.full((n, n), np.inf)
    for (i, j), (dist, path) in routes.items():
        latency[i, j] = dist + 2 * access
        hops = list(zip(path, path[1:]))
        if bw_model == "fair-share":
            avail[i, j] = min(cap[h] / share[h] for h in hops)
        else:
            avail[i, j] = min(cap[h] for h in hops)

    return ConnectivityGraph(
        tuple(s.id for s in silos),
        latency,
        avail,
        np.array([s.up_mbps for s in silos]) * MBPS,
        np.array([s.down_mbps for s in silos]) * MBPS,
        np.array([s.compute_ms for s in silos], dtype=float),
        float(model_bits),
        local_steps,
        name=u.name,
    )


# --------------------------------------------------------------------------- overlay


@dataclass(frozen=True)
class Overlay:
    """A strongly connected set of arcs between silos with realized delays."""

    node_count: int
    arcs: tuple[tuple[int, int], ...]
    delays: tuple[float, ...]
    self_loops: tuple[float, ...]
    undirected: bool = False
    silo_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        n = self.node_count
        arcs = tuple((int(a), int(b)) for a, b in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "delays", tuple(float(x) for x in self.delays))
        object.__setattr__(self, "self_loops", tuple(float(x) for x in self.self_loops))
        if not self.silo_ids:
            object.__setattr__(self, "silo_ids", tuple(str(i) for i in range(n)))
        if len(self.delays) != len(arcs):
            raise ToposynthError("one delay per arc is required")
        if len(self.self_loops) != n or len(self.silo_ids) != n:
            raise ToposynthError("self_loops and silo_ids need one entry per node")
        if any(a == b for a, b in arcs):
            raise ToposynthError("self-loops are stored separately, not as arcs")
        if self.undirected:
            s = set(arcs)
            missing = [(a, b) for a, b in arcs if (b, a) not in s]
            if missing:
                raise ToposynthError(f"undirected overlay lacks reverse arcs for {missing[:3]}")
        if not is_strongly_connected(self.to_digraph()):
            raise NotStronglyConnectedError("overlay is not strongly connected")

    @classmethod
    def realize(
        cls,
        cg: ConnectivityGraph,
        arcs,
        undirected: bool = False,
    ) -> "Overlay":
        """Overlay on ``arcs`` with delays computed from its own degrees."""
        arcs = sorted({(int(a), int(b)) for a, b in arcs})
        if undirected:
            arcs = sorted(set(arcs) | {(b, a) for a, b in arcs})
        for a, b in arcs:
            if not cg.allowed[a, b]:
                raise ToposynthError(f"arc ({a},{b}) is not in the connectivity graph")
        out_deg = np.zeros(cg.n)
        in_deg = np.zeros(cg.n)
        for a, b in arcs:
            out_deg[a] += 1
            in_deg[b] += 1
        d = cg.delay_matrix(out_deg, in_deg)
        return cls(
            cg.n,
            tuple(arcs),
            tuple(float(d[a, b]) for a, b in arcs),
            tuple(float(x) for x in cg.self_loops()),
            undirected,
            cg.silo_ids,
        )

    def out_degrees(self) -> list[int]:
        deg = [0] * self.node_count
        for a, _ in self.arcs:
            deg[a] += 1
        return deg

    def in_degrees(self) -> list[int]:
        deg = [0] * self.node_count
        for _, b in self.arcs:
            deg[b] += 1
        return deg

    def to_digraph(self) -> Digraph:
        arcs = [(a, b, w) for (a, b), w in zip(self.arcs, self.delays)]
        arcs.extend((i, i, w) for i, w in enumerate(self.self_loops))
        return Digraph(self.node_count, tuple(arcs))

    def delay_matrix(self) -> np.ndarray:
        """Delays with ``-inf`` for absent arcs and self-loops on the diagonal."""
        m = np.full((self.node_count, self.node_count), -np.inf)
        for (a, b), w in zip(self.arcs, self.delays):
            m[a, b] = w
        m[np.arange(self.node_count), np.arange(self.node_count)] = self.self_loops
        return m

    def undirected_edges(self) -> list[tuple[int, int]]:
        return sorted({(min(a, b), max(a, b)) for a, b in self.arcs})
