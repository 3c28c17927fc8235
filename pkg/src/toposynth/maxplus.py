"""Cycle time of a max-plus system: the maximum circuit mean of its delay digraph.

Three routes to the same number:

* :func:`cycle_time` - Karp-style dynamic program, polynomial.
* :func:`cycle_time_bruteforce` - enumerate elementary circuits, take the best mean.
* :func:`tree_cycle_time` - shortcut for symmetric trees, whose only circuits
  are 2-circuits and self-loops.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotATreeError, NotStronglyConnectedError, ToposynthError
from .graph import Circuit, Digraph, UGraph, elementary_circuits, is_strongly_connected


class Method(str, enum.Enum):
    KARP = "karp"
    BRUTE_FORCE = "brute_force"
    TREE_SHORTCUT = "tree_shortcut"


@dataclass(frozen=True)
class CycleTimeReport:
    tau: float
    critical_circuit: Circuit
    method: Method

    @property
    def throughput(self) -> float:
        """Rounds per millisecond."""
        return 1.0 / self.tau if self.tau > 0 else float("inf")


def _scale(w: np.ndarray) -> float:
    finite = w[np.isfinite(w)]
    return max(1.0, float(np.abs(finite).max())) if finite.size else 1.0


def _karp_max_mean(w: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Return (max cycle mean, D table, argmax-predecessor table) from source 0."""
    n = w.shape[0]
    d = np.full((n + 1, n), -np.inf)
    pred = np.full((n + 1, n), -1, dtype=int)
    d[0, 0] = 0.0
    for k in range(1, n + 1):
        cand = d[k - 1][:, None] + w
        pred[k] = np.argmax(cand, axis=0)
        d[k] = cand[pred[k], np.arange(n)]
    best = -np.inf
    for v in range(n):
        if d[n, v] == -np.inf:
            continue
        ks = np.nonzero(d[:n, v] > -np.inf)[0]
        ratios = (d[n, v] - d[ks, v]) / (n - ks)
        best = max(best, float(ratios.min()))
    return best, d, pred


def _first_circuit_from(adj: list[list[int]], root: int) -> list[int] | None:
    """Lexicographically smallest elementary circuit through ``root`` using nodes >= root."""
    n = len(adj)
    # nodes that can get back to root (restricted to ids >= root)
    back = {root}
    changed = True
    while changed:
        changed = False
        for x in range(root, n):
            if x not in back and any(y in back for y in adj[x] if y >= root):
                back.add(x)
                changed = True
    path = [root]
    on_path = {root}

    def dfs(x: int) -> bool:
        for y in adj[x]:
            if y == root:
                return True
            if y < root or y in on_path or y not in back:
                continue
            path.append(y)
            on_path.add(y)
            if dfs(y):
                return True
            path.pop()
            on_path.discard(y)
        return False

    return list(path) if dfs(root) else None


def _critical_circuit(w: np.ndarray, tau: float, weights: dict) -> Circuit | None:
    n = w.shape[0]
    tol = 1e-9 * _scale(w)
    reduced = w - tau
    pot = np.zeros(n)
    for _ in range(n):
        nxt = np.maximum(pot, (pot[:, None] + reduced).max(axis=0))
        if np.array_equal(nxt, pot):
            break
        pot = nxt
    slack = pot[:, None] + reduced - pot[None, :]
    adj = [sorted(np.nonzero(slack[i] >= -tol)[0].tolist()) for i in range(n)]
    for root in range(n):
        cyc = _first_circuit_from(adj, root)
        if cyc is not None:
            circ = Circuit.from_cycle(cyc, weights)
            if abs(circ.mean - tau) <= n * tol:
                return circ
            return None
    return None


def _walk_circuit(d: np.ndarray, pred: np.ndarray, tau: float, weights: dict) -> Circuit:
    """Fallback: best circuit found on the Karp walk ending at the optimal vertex."""
    n = d.shape[1]
    best_v, best_val = -1, -np.inf
    for v in range(n):
        if d[n, v] == -np.inf:
            continue
        ks = np.nonzero(d[:n, v] > -np.inf)[0]
        val = float(((d[n, v] - d[ks, v]) / (n - ks)).min())
        if val > best_val:
            best_v, best_val = v, val
    walk = [best_v]
    v = best_v
    for k in range(n, 0, -1):
        v = int(pred[k, v])
        walk.append(v)
    walk.reverse()
    best: Circuit | None = None
    for i in range(len(walk)):
        for j in range(i + 1, len(walk)):
            if walk[j] == walk[i]:
                seg = walk[i:j]
                if len(set(seg)) == len(seg):
                    c = Circuit.from_cycle(seg, weights)
                    if best is None or (c.mean, _neg(c.nodes)) > (best.mean, _neg(best.nodes)):
                        best = c
                break
    assert best is not None
    return best


def _neg(seq: Sequence[int]) -> tuple[int, ...]:
    return tuple(-x for x in seq)


def _require_circuits(g: Digraph) -> None:
    if not is_strongly_connected(g):
        raise NotStronglyConnectedError("cycle time is defined for strongly connected digraphs only")
    if g.node_count == 1 and not g.self_loop_weights():
        raise ToposynthError("single-node digraph without a self-loop has no circuit")


def cycle_time(g: Digraph) -> CycleTimeReport:
    """Maximum circuit mean of ``g`` via Karp's dynamic program (max form).

    The reported ``tau`` is recomputed from the extracted critical circuit, so
    ``tau == critical_circuit.total_weight / critical_circuit.length`` holds
    exactly.
    """
    _require_circuits(g)
    w = g.weight_matrix()
    weights = g.weights()
    tau, d, pred = _karp_max_mean(w)
    circ = _critical_circuit(w, tau, weights)
    if circ is None:
        circ = _walk_circuit(d, pred, tau, weights)
    return CycleTimeReport(circ.mean, circ, Method.KARP)


def cycle_time_bruteforce(g: Digraph, limit: int | None = None) -> CycleTimeReport:
    """Same quantity as :func:`cycle_time`, by enumerating every elementary circuit."""
    _require_circuits(g)
    circuits = elementary_circuits(g, limit=limit)
    tol = 1e-12 * _scale(g.weight_matrix())
    best = circuits[0]
    for c in circuits[1:]:
        if c.mean > best.mean + tol or (abs(c.mean - best.mean) <= tol and c.nodes < best.nodes):
            best = c
    return CycleTimeReport(best.mean, best, Method.BRUTE_FORCE)


def tree_cycle_time(t: UGraph, self_loops: Sequence[float] | None = None) -> CycleTimeReport:
    """Cycle time of a symmetric tree: the largest edge weight or self-loop.

    Edge weights are the per-edge average of the two directed delays.
    """
    if not t.is_tree():
        raise NotATreeError("tree_cycle_time needs a tree")
    n = t.node_count
    loops = [0.0] * n if self_loops is None else [float(x) for x in self_loops]
    if len(loops) != n:
        raise ToposynthError(f"expected {n} self-loop weights, got {len(loops)}")
    candidates: list[tuple[float, tuple[int, ...], Circuit]] = []
    for u, v, w in t.edges:
        circ = Circuit((u, v, u), 2, w + w)
        candidates.append((circ.mean, circ.nodes, circ))
    if self_loops is not None or n == 1:
        for i, x in enumerate(loops):
            circ = Circuit((i, i), 1, x)
            candidates.append((x, circ.nodes, circ))
    top = max(c[0] for c in candidates)
    tol = 1e-12 * max(1.0, abs(top))
    _, _, best = min((c for c in candidates if c[0] >= top - tol), key=lambda c: c[1])
    return CycleTimeReport(best.mean, best, Method.TREE_SHORTCUT)
