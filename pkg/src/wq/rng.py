"""Keyed random streams.

Every Monte Carlo routine draws from Philox streams addressed by
``(seed, *key)``.  Replicates are grouped into fixed-size blocks and each
block owns its stream, so results do not depend on how blocks are
scheduled across workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar, Union

import numpy as np

BLOCK = 4096

T = TypeVar("T")


@dataclass(frozen=True)
class Stream:
    seed: int
    key: tuple = ()

    def child(self, *key) -> "Stream":
        return Stream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


RngLike = Union[Stream, int, np.random.Generator]


def as_stream(rng: RngLike) -> Stream:
    if isinstance(rng, Stream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return Stream(int(rng))
    if isinstance(rng, np.random.Generator):
        # fold an ad-hoc generator into a keyed stream so blocks stay reproducible
        return Stream(int(rng.integers(0, 2**63)))
    raise TypeError(f"cannot build a random stream from {type(rng).__name__}")


def default_threads() -> int:
    env = os.environ.get("WQ_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def blocks(M: int, size: int = BLOCK) -> list[tuple[int, int]]:
    """Split ``range(M)`` into ``(block_index, length)`` pairs."""
    out = []
    start = 0
    b = 0
    while start < M:
        n = min(size, M - start)
        out.append((b, n))
        start += n
        b += 1
    return out


def parallel_map(fn: Callable[..., T], items: Sequence, threads: int | None = None) -> list[T]:
    """Ordered map; results are identical for any worker count."""
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def normal_blocks(stream: Stream, M: int, dim: int, threads: int | None = None) -> np.ndarray:
    """``M x dim`` standard normals assembled block by block."""

    def draw(item):
        b, n = item
        return stream.child(b).generator().standard_normal((n, dim))

    parts = parallel_map(draw, blocks(M), threads)
    if not parts:
        return np.empty((0, dim))
    return np.concatenate(parts, axis=0)
