"""Chunked, seed-deterministic Monte Carlo plumbing.

Samples are drawn in fixed-size chunks. Chunk ``i`` of stream ``k`` always
gets its generator from ``SeedSequence(seed, spawn_key=(k, i))`` and chunk
results are reduced in index order, so an estimate depends only on
``(seed, budget)`` and never on how many workers evaluated the chunks.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence, TypeVar

import numpy as np

from .errors import ParameterError

DEFAULT_CHUNK = 1 << 14
THREADS_ENV = "FRACPERIM_THREADS"

T = TypeVar("T")


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise ParameterError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    return 1


def check_seed(seed: int) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ParameterError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def chunk_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def chunk_sizes(total: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if total <= 0:
        raise ParameterError(f"sample budget must be positive, got {total}")
    full, rest = divmod(int(total), chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[int], T], n_chunks: int, workers: int | None = None) -> list[T]:
    """Evaluate ``fn(i)`` for every chunk index, returning results in index order."""
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or n_chunks <= 1:
        return [fn(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_chunks)))


@dataclass(frozen=True)
class Moments:
    """Count, mean and centred second moment of a sample; mergeable (Chan et al.)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            return cls()
        mean = float(np.mean(v))
        return cls(v.size, mean, float(np.sum((v - mean) ** 2)))

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Moments(n, mean, m2)

    @staticmethod
    def combine(parts: Sequence["Moments"]) -> "Moments":
        return reduce(Moments.merge, parts, Moments())

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def sem(self) -> float:
        """Standard error of the mean."""
        return float(np.sqrt(self.variance / self.count)) if self.count > 1 else 0.0


def uniform_directions(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """``m`` i.i.d. uniform unit vectors in R^n (for n=1: random signs)."""
    if n == 1:
        return rng.choice(np.array([-1.0, 1.0]), size=(m, 1))
    g = rng.standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def uniform_in_ball(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """``m`` uniform points in the unit ball of R^n."""
    d = uniform_directions(rng, m, n)
    return d * rng.random((m, 1)) ** (1.0 / n)
