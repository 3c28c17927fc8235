"""Reference instances and random instance generators.

The shipped JSON files under ``toposynth/data`` are produced by
:func:`write_data_files` from the functions below.
"""

from __future__ import annotations

import itertools
from importlib import resources
from pathlib import Path

import numpy as np

from .delay import ConnectivityGraph, CoreLink, Underlay, UnderlayNode, link_latency

# Capacity large enough that M/A is negligible next to millisecond latencies.
HUGE_MBPS = 1e12
RESNET18_BITS = 3.74e8  # ~11.7M float32 parameters
GAIA_COMPUTE_MS = 25.0

GAIA_SITES = (
    ("virginia", 39.04, -77.49),
    ("california", 37.34, -121.89),
    ("oregon", 45.84, -119.70),
    ("dublin", 53.35, -6.26),
    ("frankfurt", 50.11, 8.68),
    ("tokyo", 35.68, 139.69),
    ("seoul", 37.57, 126.98),
    ("singapore", 1.35, 103.82),
    ("sydney", -33.87, 151.21),
    ("mumbai", 19.08, 72.88),
    ("sao-paulo", -23.55, -46.63),
)


def _latency_underlay(name: str, ids, links: dict) -> Underlay:
    """Silos with unbounded capacities, no compute and explicit link latencies."""
    nodes = tuple(UnderlayNode(str(i), "silo", 0.0, 0.0, HUGE_MBPS, HUGE_MBPS, 0.0) for i in ids)
    core = tuple(CoreLink(str(u), str(v), HUGE_MBPS, float(lat)) for (u, v), lat in links.items())
    return Underlay(name, nodes, core, access_latency_ms=0.0)


# --------------------------------------------------------------------------- small exact instances


def triangle3_delays() -> np.ndarray:
    """Three silos with d(1,2)=1, d(2,3)=3, d(1,3)=4 (0-indexed here)."""
    return np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 3.0], [4.0, 3.0, 0.0]])


def triangle3() -> Underlay:
    return _latency_underlay("triangle-3", (1, 2, 3), {(1, 2): 1.0, (2, 3): 3.0, (1, 3): 4.0})


def path_pendant_delays(n: int) -> np.ndarray:
    """Path ``1..n`` with unit edges plus node ``n+1`` hanging off ``n`` at distance ``n``.

    Delays are the tree distances, so the instance is metric.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    pos = np.arange(n + 1, dtype=float)
    pos[n] = (n - 1) + n
    d = np.abs(pos[:, None] - pos[None, :])
    return d


def path_pendant(n: int) -> Underlay:
    links = {(k, k + 1): 1.0 for k in range(1, n)}
    links[(n, n + 1)] = float(n)
    return _latency_underlay(f"path-pendant-{n}", range(1, n + 2), links)


def path_pendant_ring_tau(n: int) -> float:
    return (4 * n - 2) / (n + 1)


def ring_gap_delays(n_low: int) -> np.ndarray:
    """``2N`` silos: zero delay among the first ``N``, unit delay on every other pair."""
    m = 2 * n_low
    d = np.ones((m, m))
    d[:n_low, :n_low] = 0.0
    np.fill_diagonal(d, 0.0)
    return d


def ring_gap(n_low: int) -> Underlay:
    m = 2 * n_low
    links = {}
    for u, v in itertools.combinations(range(m), 2):
        links[(u, v)] = 0.0 if (u < n_low and v < n_low) else 1.0
    return _latency_underlay(f"ring-gap-{n_low}", range(m), links)


def ring_gap_optimum(n_low: int) -> float:
    return 2.0 / (n_low + 1)


# --------------------------------------------------------------------------- geo instances


def gaia11(access_mbps: float = 100.0, core_mbps: float = 1000.0, compute_ms: float = GAIA_COMPUTE_MS) -> Underlay:
    """Eleven cloud regions on a full mesh; latencies follow from coordinates."""
    nodes = tuple(UnderlayNode(sid, "silo", lat, lon, access_mbps, access_mbps, compute_ms) for sid, lat, lon in GAIA_SITES)
    links = tuple(CoreLink(a.id, b.id, core_mbps) for a, b in itertools.combinations(nodes, 2))
    return Underlay(f"gaia11-{access_mbps:g}mbps", nodes, links)


def slow_access(n: int = 8, access_mbps: float = 10.0) -> Underlay:
    """Homogeneous silos whose access links are the only bottleneck.

    Core latencies and compute times are zero, so every arc delay is a pure
    transmission term.
    """
    nodes = tuple(UnderlayNode(f"s{i}", "silo", 0.0, 0.0, access_mbps, access_mbps, 0.0) for i in range(n))
    links = tuple(CoreLink(a.id, b.id, HUGE_MBPS, 0.0) for a, b in itertools.combinations(nodes, 2))
    return Underlay(f"slow-access-{n}", nodes, links, access_latency_ms=0.0)


# --------------------------------------------------------------------------- random generators


def random_points(n: int, rng: np.random.Generator, extent_km: float = 5000.0) -> np.ndarray:
    return rng.uniform(0.0, extent_km, size=(n, 2))


def euclidean_latency(points: np.ndarray) -> np.ndarray:
    dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    lat = link_latency(0.0) + (link_latency(1.0) - link_latency(0.0)) * dist
    np.fill_diagonal(lat, 0.0)
    return lat


def random_edge_capacitated(n: int, rng: np.random.Generator, model_bits: float = 1e7) -> ConnectivityGraph:
    """Random planar instance where access links never bind.

    Latencies come from the affine distance model; ``A`` is symmetric and
    drawn per pair; access capacities are ``N`` times the largest ``A``.
    """
    lat = euclidean_latency(random_points(n, rng))
    a = rng.uniform(50.0, 500.0, size=(n, n))
    a = np.minimum(a, a.T)
    cap = n * a.max() * 1.01
    compute = np.full(n, rng.uniform(0.0, 50.0))
    return ConnectivityGraph.from_mbps(lat, a, cap, cap, compute, model_bits)


def random_node_capacitated(n: int, rng: np.random.Generator, model_bits: float = 1e7) -> ConnectivityGraph:
    """Random planar instance with ``C_UP(i) <= min(C_DN(j)/N, A)`` for every pair."""
    lat = euclidean_latency(random_points(n, rng))
    up = rng.uniform(10.0, 100.0, size=n)
    down = np.full(n, n * up.max() * 1.01)
    a = np.full((n, n), up.max() * 1.01)
    compute = np.full(n, rng.uniform(0.0, 50.0))
    return ConnectivityGraph.from_mbps(lat, a, up, down, compute, model_bits)


def random_mixed(n: int, rng: np.random.Generator, model_bits: float = 1e7) -> ConnectivityGraph:
    """Random heterogeneous instance in neither pure regime."""
    lat = euclidean_latency(random_points(n, rng))
    a = rng.uniform(20.0, 1000.0, size=(n, n))
    up = rng.uniform(10.0, 1000.0, size=n)
    down = rng.uniform(10.0, 1000.0, size=n)
    compute = rng.uniform(0.0, 50.0, size=n)
    return ConnectivityGraph.from_mbps(lat, a, up, down, compute, model_bits)


def random_tree_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform-ish random labelled tree (random attachment)."""
    order = rng.permutation(n)
    return [(int(order[k]), int(order[rng.integers(0, k)])) for k in range(1, n)]


# --------------------------------------------------------------------------- shipped files


def data_dir() -> Path:
    return Path(str(resources.files("toposynth") / "data"))


def fixture_path(name: str) -> Path:
    """Path of a shipped file, e.g. ``fixture_path("triangle3.json")``."""
    p = data_dir() / name
    if not p.is_file():
        raise FileNotFoundError(f"no shipped fixture {name!r}")
    return p


def shipped_underlays() -> dict[str, Underlay]:
    return {
        "triangle3": triangle3(),
        "path_pendant_5": path_pendant(5),
        "ring_gap_3": ring_gap(3),
        "gaia11_100mbps": gaia11(100.0),
        "gaia11_10gbps": gaia11(10000.0),
        "slow_access_8": slow_access(8),
    }


def write_data_files(target: str | Path | None = None) -> list[Path]:
    from .io import write_underlay

    out = Path(target) if target is not None else data_dir()
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, u in shipped_underlays().items():
        p = out / f"{name}.json"
        write_underlay(u, p)
        written.append(p)
    return written


