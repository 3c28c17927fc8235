"""Round-start times of synchronous decentralized training on an overlay.

Silo ``i`` starts round ``k + 1`` once it has finished its own local work for
round ``k`` and received the round-``k`` model of every in-neighbour:

    t_i(k+1) = max over j in N_in(i) + {i} of  t_j(k) + d(j, i)

with ``d(i, i)`` the self-loop (local computation) delay and ``t_i(0) = 0``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .delay import Overlay
from .errors import ToposynthError


@dataclass(frozen=True)
class SimulationTrace:
    times: np.ndarray  # shape (N, K + 1), milliseconds
    silo_ids: tuple[str, ...] = ()

    @property
    def rounds(self) -> int:
        return self.times.shape[1] - 1

    @property
    def node_count(self) -> int:
        return self.times.shape[0]

    def round_end(self) -> np.ndarray:
        """``max_i t_i(k)`` for ``k = 0..K``."""
        return self.times.max(axis=0)


def simulate(overlay: Overlay, rounds: int) -> SimulationTrace:
    if rounds < 1:
        raise ToposynthError("rounds must be >= 1")
    d = overlay.delay_matrix()  # -inf where no arc
    n = overlay.node_count
    t = np.zeros((n, rounds + 1))
    for k in range(rounds):
        t[:, k + 1] = (t[:, k][:, None] + d).max(axis=0)
    t.setflags(write=False)
    return SimulationTrace(t, overlay.silo_ids)


def empirical_throughput(trace: SimulationTrace) -> float:
    """Rounds per millisecond over the whole trace."""
    if trace.rounds < 2:
        raise ToposynthError("need at least 2 rounds")
    end = float(trace.times[:, -1].max())
    return trace.rounds / end if end > 0 else float("inf")


def deviation_series(trace: SimulationTrace, tau: float) -> np.ndarray:
    """``max_i |t_i(k) - tau * k|`` for ``k = 0..K``."""
    k = np.arange(trace.rounds + 1)
    return np.abs(trace.times - tau * k[None, :]).max(axis=0)


def deviation_bound_check(trace: SimulationTrace, tau: float) -> float:
    return float(deviation_series(trace, tau).max())


def write_trace_csv(trace: SimulationTrace, path: str | Path) -> None:
    ids = trace.silo_ids or tuple(str(i) for i in range(trace.node_count))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["silo", "round", "time_ms"])
        for i, sid in enumerate(ids):
            for k in range(trace.rounds + 1):
                w.writerow([sid, k, repr(float(trace.times[i, k]))])
