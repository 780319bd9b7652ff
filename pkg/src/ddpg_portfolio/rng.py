"""Named random sub-streams derived from one seed.

Each component asks for its own generator by name, so adding a new consumer
never shifts the draws seen by existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


class SeedTree:
    def __init__(self, seed: int):
        self.seed = int(seed)

    def sequence(self, name: str) -> np.random.SeedSequence:
        key = tuple(zlib.crc32(part.encode("utf-8")) for part in name.split("/"))
        return np.random.SeedSequence(self.seed, spawn_key=key)

    def generator(self, name: str) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence(name)))

    def child(self, name: str) -> "SeedTree":
        return SeedTree(int(self.sequence(name).generate_state(1, np.uint64)[0] >> np.uint64(1)))
