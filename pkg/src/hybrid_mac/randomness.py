"""Named, independently seeded random streams.

Every stochastic consumer (traffic generator, node backoff, channel-error
process, clock draw) gets its own stream derived from the master seed and a
stable label, so adding a consumer never perturbs another consumer's draws.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master_seed: int, label: str) -> int:
    """Derive a 64-bit sub-seed from the master seed and a stream label."""
    combined = f"{int(master_seed)}:{label}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(combined).digest()[:8], "little")


class RngStream:
    """One reproducible draw sequence for a single consumer."""

    def __init__(self, master_seed: int, stream_id: str) -> None:
        self.seed = int(master_seed)
        self.stream_id = stream_id
        self._generator = np.random.default_rng(derive_seed(self.seed, stream_id))

    def random(self) -> float:
        """Uniform draw in [0, 1)."""
        return float(self._generator.random())

    def integer(self, low: int, high: int) -> int:
        """Uniform integer draw in [low, high] (both inclusive)."""
        return int(self._generator.integers(low, high + 1))

    def exponential(self, mean: float) -> float:
        """Exponential draw with the given mean."""
        return float(self._generator.exponential(mean))

    def uniform(self, low: float, high: float) -> float:
        return float(self._generator.uniform(low, high))


class RngRegistry:
    """Hands out one cached stream per label for a run's master seed."""

    def __init__(self, master_seed: int) -> None:
        self.master_seed = int(master_seed)
        self._streams: dict[str, RngStream] = {}

    def stream(self, stream_id: str) -> RngStream:
        existing = self._streams.get(stream_id)
        if existing is None:
            existing = RngStream(self.master_seed, stream_id)
            self._streams[stream_id] = existing
        return existing
