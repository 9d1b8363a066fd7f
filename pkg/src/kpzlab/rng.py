"""Counter-based per-replica random streams.

Each replica gets its own Philox generator keyed by (master, replica), so a
replica's stream does not depend on how an ensemble is split across workers.
"""
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    master: int
    replica: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master) <= MASK64):
            raise ValueError("master seed must fit in 64 bits")
        if int(self.replica) < 0:
            raise ValueError("replica index must be non-negative")

    def child(self, replica):
        return SeedSpec(self.master, int(replica))

    def to_dict(self):
        return {"master": int(self.master), "replica": int(self.replica)}


def as_seed(seed):
    if isinstance(seed, SeedSpec):
        return seed
    if isinstance(seed, dict):
        return SeedSpec(int(seed["master"]), int(seed.get("replica", 0)))
    if isinstance(seed, (tuple, list)):
        return SeedSpec(int(seed[0]), int(seed[1]) if len(seed) > 1 else 0)
    return SeedSpec(int(seed), 0)


def generator(seed, stream=0):
    """Philox generator for one replica; `stream` separates sub-uses."""
    s = as_seed(seed)
    key = np.array([s.master, (s.replica << 8 | (stream & 0xFF)) & MASK64],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
