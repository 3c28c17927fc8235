"""Run configuration and size caps for the exhaustive oracles."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

ORACLE_LIMIT_ENV = "TOPOSYNTH_ORACLE_LIMIT"

# Default caps (node counts) of the exhaustive routines.
CIRCUIT_LIMIT = 12
DIRECTED_MCT_LIMIT = 5
UNDIRECTED_MCT_LIMIT = 7
SUBGRAPH_MCT_LIMIT = 5


def oracle_limit(default: int) -> int:
    """Return the cap to use, honouring the ``TOPOSYNTH_ORACLE_LIMIT`` override."""
    raw = os.environ.get(ORACLE_LIMIT_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ORACLE_LIMIT_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{ORACLE_LIMIT_ENV} must be >= 1, got {value}")
    return value


BUILDER_NAMES = ("star", "mst", "ring", "dmbst")
BW_MODELS = ("fair-share", "min-cap")


@dataclass(frozen=True)
class RunConfig:
    model_bits: float
    local_steps: int
    bw_model: str = "fair-share"
    builders: tuple[str, ...] = BUILDER_NAMES
    rounds: int = 1000
    seed: int = 0
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.model_bits > 0:
            raise ValueError(f"model_bits must be > 0, got {self.model_bits}")
        if self.local_steps < 1:
            raise ValueError(f"local_steps must be >= 1, got {self.local_steps}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.bw_model not in BW_MODELS:
            raise ValueError(f"unknown bw model {self.bw_model!r}; expected one of {BW_MODELS}")
        unknown = set(self.builders) - set(BUILDER_NAMES)
        if unknown:
            raise ValueError(f"unknown builders: {sorted(unknown)}")
