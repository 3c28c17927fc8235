"""Toy decentralized periodic averaging SGD on quadratic losses.

Silo ``i`` holds ``f_i(w) = ||w - c_i||^2``. Each round it takes ``s`` local
(optionally noisy) gradient steps and then averages with its neighbours
through a consensus matrix.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .delay import Overlay
from .errors import DirectedOverlayUnsupportedError, LengthMismatchError, ToposynthError
from .simulator import SimulationTrace


@dataclass(frozen=True)
class ConsensusMatrix:
    weights: np.ndarray
    symmetric: bool = True

    def __post_init__(self):
        a = np.array(self.weights, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ToposynthError("consensus matrix must be square")
        if np.any(a < -1e-15):
            raise ToposynthError("consensus weights must be non-negative")
        a.setflags(write=False)
        object.__setattr__(self, "weights", a)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def is_doubly_stochastic(self, tol: float = 1e-12) -> bool:
        a = self.weights
        return bool(np.all(np.abs(a.sum(axis=0) - 1) <= tol) and np.all(np.abs(a.sum(axis=1) - 1) <= tol))

    def respects(self, overlay: Overlay) -> bool:
        """True when every positive weight sits on an overlay arc or the diagonal."""
        arcs = set(overlay.arcs)
        rows, cols = np.nonzero(self.weights > 0)
        return all(i == j or (j, i) in arcs for i, j in zip(rows.tolist(), cols.tolist()))

    def mixing_rate(self) -> float:
        """Spectral radius of ``A - 11^T/N``; below 1 means consensus is reached."""
        a = self.weights - 1.0 / self.n
        return float(np.abs(np.linalg.eigvals(a)).max())


@dataclass(frozen=True)
class QuadraticTask:
    targets: np.ndarray  # shape (N, d)

    def __post_init__(self):
        c = np.atleast_2d(np.array(self.targets, dtype=float))
        if c.shape[1] < 1:
            raise ToposynthError("dimension must be >= 1")
        if not np.all(np.isfinite(c)):
            raise ToposynthError("targets must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "targets", c)

    @property
    def n(self) -> int:
        return self.targets.shape[0]

    @property
    def dim(self) -> int:
        return self.targets.shape[1]

    def optimum(self) -> np.ndarray:
        return self.targets.mean(axis=0)

    def global_loss(self, w: np.ndarray) -> float:
        return float(((w[None, :] - self.targets) ** 2).sum())

    @classmethod
    def random(cls, n: int, dim: int, rng: np.random.Generator, spread: float = 1.0) -> "QuadraticTask":
        return cls(rng.normal(0.0, spread, size=(n, dim)))


def local_degree_matrix(overlay: Overlay) -> ConsensusMatrix:
    """``A_ij = 1 / (1 + max(deg_i, deg_j))`` on edges, remainder on the diagonal."""
    if not overlay.undirected:
        raise DirectedOverlayUnsupportedError("local-degree weights need an undirected overlay")
    n = overlay.node_count
    deg = np.array(overlay.in_degrees(), dtype=float)
    a = np.zeros((n, n))
    for i, j in overlay.arcs:
        a[i, j] = 1.0 / (1.0 + max(deg[i], deg[j]))
    np.fill_diagonal(a, 1.0 - a.sum(axis=1))
    return ConsensusMatrix(a, symmetric=True)


def regular_directed_matrix(overlay: Overlay) -> ConsensusMatrix:
    """Uniform weights over self and in-neighbours for overlays with equal in/out degrees.

    Each silo keeps ``1/(d+1)`` of its own model and takes ``1/(d+1)`` from each
    in-neighbour; with every in- and out-degree equal to ``d`` this is doubly
    stochastic (``1/2`` each on a directed ring).
    """
    n = overlay.node_count
    ins, outs = overlay.in_degrees(), overlay.out_degrees()
    if n > 1 and (len(set(ins)) != 1 or ins != outs):
        raise DirectedOverlayUnsupportedError("directed overlay is not regular; no doubly stochastic weights known")
    d = ins[0] if n > 1 else 0
    a = np.eye(n) / (d + 1)
    for j, i in overlay.arcs:  # i receives from j
        a[i, j] = 1.0 / (d + 1)
    return ConsensusMatrix(a, symmetric=False)


def consensus_matrix(overlay: Overlay) -> ConsensusMatrix:
    if overlay.undirected:
        return local_degree_matrix(overlay)
    return regular_directed_matrix(overlay)


def inverse_sqrt_schedule(alpha0: float) -> Callable[[int], float]:
    """``alpha_k = alpha0 / sqrt(1 + k/100)``."""
    if alpha0 <= 0:
        raise ToposynthError("learning rate must be > 0")
    return lambda k: alpha0 / np.sqrt(1.0 + k / 100.0)


@dataclass(frozen=True)
class TrainingLog:
    loss: np.ndarray  # global loss at the mean model after rounds 1..K
    residual: np.ndarray  # max_i ||w_i - mean|| after rounds 1..K
    final_models: np.ndarray

    @property
    def rounds(self) -> int:
        return len(self.loss)


def dpasgd_run(
    task: QuadraticTask,
    a: ConsensusMatrix,
    local_steps: int,
    lr: Callable[[int], float] | float,
    rounds: int,
    noise: float = 0.0,
    seed: int = 0,
    init: np.ndarray | None = None,
    gradients: bool = True,
    overlay: Overlay | None = None,
) -> TrainingLog:
    """Run ``rounds`` of local steps followed by ``w <- A w``.

    ``gradients=False`` turns the local losses into constants, leaving pure
    averaging of ``init``.
    """
    if a.n != task.n:
        raise ToposynthError(f"consensus matrix is {a.n}x{a.n} but the task has {task.n} silos")
    if overlay is not None and not a.respects(overlay):
        raise ToposynthError("consensus matrix puts weight on pairs that are not overlay arcs")
    if rounds < 1:
        raise ToposynthError("rounds must be >= 1")
    if local_steps < 0:
        raise ToposynthError("local_steps must be >= 0")
    schedule = lr if callable(lr) else (lambda k, x=float(lr): x)
    rng = np.random.default_rng(seed)
    c = task.targets
    w = np.zeros_like(c) if init is None else np.array(init, dtype=float).reshape(c.shape)
    am = a.weights
    loss = np.empty(rounds)
    resid = np.empty(rounds)
    for k in range(rounds):
        alpha = schedule(k)
        if gradients:
            for _ in range(local_steps):
                g = 2.0 * (w - c)
                if noise > 0:
                    g = g + rng.normal(0.0, noise, size=g.shape)
                w = w - alpha * g
        w = am @ w
        mean = w.mean(axis=0)
        loss[k] = task.global_loss(mean)
        resid[k] = float(np.linalg.norm(w - mean, axis=1).max())
    return TrainingLog(loss, resid, w)


def loss_vs_time(loss, trace: SimulationTrace) -> list[tuple[float, float]]:
    """Pair the loss after round ``k`` with the time the last silo starts round ``k``."""
    loss = np.asarray(loss, dtype=float)
    if len(loss) != trace.rounds:
        raise LengthMismatchError(f"{len(loss)} losses but the trace has {trace.rounds} rounds")
    ends = trace.round_end()[1:]
    return [(float(t), float(x)) for t, x in zip(ends, loss)]


def time_to_threshold(series: list[tuple[float, float]], threshold: float) -> float:
    """First time the loss drops to ``threshold`` or below; ``inf`` if never."""
    for t, x in series:
        if x <= threshold:
            return t
    return float("inf")


def write_training_csv(log: TrainingLog, trace: SimulationTrace, path: str | Path) -> None:
    series = loss_vs_time(log.loss, trace)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "time_ms", "global_loss", "consensus_residual"])
        for k, ((t, x), r) in enumerate(zip(series, log.residual), start=1):
            w.writerow([k, repr(t), repr(x), repr(float(r))])
