"""Counter-based random streams keyed by ``(seed, *path, shard)``.

Every Monte Carlo routine splits its trials into fixed-size shards and draws
shard ``k`` from its own Philox stream, so results never depend on how many
threads process the shards.  Within a shard, random numbers are laid out
pair-major (one row of uniforms per trial), which makes a run of ``n`` trials
an exact prefix of any longer run with the same stream.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

SHARD_SIZE = 1 << 20

T = TypeVar("T")


class RandomStreams:
    """Factory of independent, reproducible generators."""

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if seed < 0 or seed >= 1 << 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)

    def child(self, *key: int) -> "RandomStreams":
        return RandomStreams(self.seed, self.path + tuple(key))

    def generator(self, shard: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path + (int(shard),))
        return np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RandomStreams(seed={self.seed}, path={self.path})"


def as_streams(rng) -> RandomStreams:
    if isinstance(rng, RandomStreams):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RandomStreams(int(rng))
    raise TypeError(f"expected RandomStreams or an integer seed, got {type(rng).__name__}")


def shard_sizes(n: int, shard_size: int = SHARD_SIZE) -> list[int]:
    full, rest = divmod(n, shard_size)
    return [shard_size] * full + ([rest] if rest else [])


def run_sharded(
    work: Callable[[np.random.Generator, int], T],
    n: int,
    streams: RandomStreams,
    threads: int = 1,
    shard_size: int = SHARD_SIZE,
) -> list[T]:
    """Evaluate ``work(generator, size)`` on every shard; results come back in shard order."""
    sizes = shard_sizes(n, shard_size)
    jobs = [(streams.generator(k), size) for k, size in enumerate(sizes)]
    if threads <= 1 or len(jobs) <= 1:
        return [work(g, size) for g, size in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: work(*job), jobs))
