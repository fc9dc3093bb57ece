"""Core domain types and exact combinatorics for chunk-swarm models.

Chunks are pure identities 0..k-1; a file split into k chunks is fully
described by which node holds which identity. ChunkSet is an immutable
fixed-capacity membership set backed by an integer bitmask, so membership
tests, set difference and cardinality stay cheap for k up to 10^4.

The probability helpers use exact integer arithmetic internally and
convert to float exactly once. Ratios of factorially large binomial
coefficients are common in the swarm bounds, and naive floating-point
factorials overflow around n = 170, so nothing here ever forms a float
factorial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np


class ConfigurationError(ValueError):
    """Inconsistent parameters or operands (capacity mismatch, bad ranges)."""


class Scenario(Enum):
    """The three dissemination protocols the engine can run."""

    SPREADING = "spreading"
    DISTRIBUTED_OPTIMISTIC = "optimistic"
    RANDOM_MATCHING = "matching"


# Precomputing the (k+1) x (k+1) delta table is worthwhile up to this k;
# above it, callers fall back to on-demand scalar evaluation.
DELTA_TABLE_MAX_K = 2000


class ChunkSet:
    """Immutable subset of the chunk identifiers {0, .., capacity-1}.

    Backed by an int bitmask: O(1) insert/test, and set difference is a
    single bitwise operation. All mutating-style operations return a new
    instance, so values can be shared freely across threads and workers.
    """

    __slots__ = ("_bits", "_capacity")

    def __init__(self, capacity: int, members: Iterable[int] = ()) -> None:
        if capacity < 1:
            raise ConfigurationError(f"chunk capacity must be >= 1, got {capacity}")
        bits = 0
        for m in members:
            if not 0 <= m < capacity:
                raise ConfigurationError(
                    f"chunk id {m} out of range for capacity {capacity}"
                )
            bits |= 1 << m
        self._bits = bits
        self._capacity = capacity

    @classmethod
    def _from_bits(cls, bits: int, capacity: int) -> "ChunkSet":
        obj = cls.__new__(cls)
        obj._bits = bits
        obj._capacity = capacity
        return obj

    @classmethod
    def full(cls, capacity: int) -> "ChunkSet":
        if capacity < 1:
            raise ConfigurationError(f"chunk capacity must be >= 1, got {capacity}")
        return cls._from_bits((1 << capacity) - 1, capacity)

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def is_full(self) -> bool:
        return self._bits == (1 << self._capacity) - 1

    def __len__(self) -> int:
        return self._bits.bit_count()

    def __contains__(self, chunk: int) -> bool:
        return 0 <= chunk < self._capacity and (self._bits >> chunk) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        bits = self._bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChunkSet):
            return NotImplemented
        return self._bits == other._bits and self._capacity == other._capacity

    def __hash__(self) -> int:
        return hash((self._bits, self._capacity))

    def __repr__(self) -> str:
        return f"ChunkSet(capacity={self._capacity}, members={sorted(self)})"

    def with_chunk(self, chunk: int) -> "ChunkSet":
        if not 0 <= chunk < self._capacity:
            raise ConfigurationError(
                f"chunk id {chunk} out of range for capacity {self._capacity}"
            )
        return ChunkSet._from_bits(self._bits | (1 << chunk), self._capacity)

    def difference(self, other: "ChunkSet") -> "ChunkSet":
        if self._capacity != other._capacity:
            raise ConfigurationError(
                f"capacity mismatch: {self._capacity} vs {other._capacity}"
            )
        return ChunkSet._from_bits(self._bits & ~other._bits, self._capacity)


def useful_chunks(uploader: ChunkSet, customer: ChunkSet) -> ChunkSet:
    """Chunks the uploader holds that the customer does not.

    Both sets must share the same capacity; a mismatch is a configuration
    error, not an empty result.
    """
    return uploader.difference(customer)


def binom(a: int, b: int) -> int:
    """Exact binomial coefficient C(a, b) with C(a, b) = 0 for b > a.

    C(0, 0) = 1. Arbitrary-precision integers make overflow impossible for
    any supported chunk count.
    """
    if a < 0 or b < 0:
        raise ConfigurationError(f"binom arguments must be non-negative, got {a}, {b}")
    return math.comb(a, b)


def delta(i: int, j: int, k: int) -> float:
    """Probability that an uploader with j uniform random chunks can serve
    a customer with i uniform random chunks, out of k total.

    Equals 1 - C(i, j)/C(k, j). The numerator C(k, j) - C(i, j) is formed
    in exact integer arithmetic and divided once, so there is a single
    float rounding. The C(0, 0) = 1 convention forces delta(0, 0, k) = 0:
    an empty uploader serves nothing.
    """
    if not (0 <= i <= k and 0 <= j <= k):
        raise ConfigurationError(f"delta arguments out of range: i={i}, j={j}, k={k}")
    denom = binom(k, j)
    return (denom - binom(i, j)) / denom


@lru_cache(maxsize=8)
def delta_matrix(k: int) -> np.ndarray:
    """Table d[i, j] = delta(i, j, k) for 0 <= i, j <= k.

    Built row by row with the multiplicative recurrence for C(i, j) and
    C(k, j), all in exact integers, one float conversion per cell. Cached
    for k <= DELTA_TABLE_MAX_K; larger tables are built but not retained.
    """
    if k < 1:
        raise ConfigurationError(f"delta_matrix requires k >= 1, got {k}")
    d = np.ones((k + 1, k + 1))
    d[:, 0] = 0.0
    for i in range(k + 1):
        cij = 1
        ckj = 1
        for j in range(1, i + 1):
            cij = cij * (i - j + 1) // j
            ckj = ckj * (k - j + 1) // j
            d[i, j] = (ckj - cij) / ckj
    d.setflags(write=False)
    if k > DELTA_TABLE_MAX_K:
        delta_matrix.cache_clear()
    return d


@dataclass(frozen=True)
class PeerState:
    """One node: its identity, holdings, root flag and age in rounds.

    A root holds all capacity chunks from creation; age counts survived
    rounds and resets to zero when a departed node is replaced.
    """

    id: int
    chunks: ChunkSet
    is_root: bool = False
    age: int = 0

    def __post_init__(self) -> None:
        if self.is_root and not self.chunks.is_full:
            raise ConfigurationError(f"root {self.id} must hold all chunks")
        if self.age < 0:
            raise ConfigurationError(f"age must be non-negative, got {self.age}")


@dataclass(frozen=True)
class ScenarioConfig:
    """All experiment parameters for one simulation setup.

    alpha is the per-round departure probability of an incomplete peer,
    alpha_r the departure probability of a node holding all k chunks
    (roots and experts). alpha_r defaults to alpha and must not be below
    it. The seed fully determines every random draw of a trial.
    """

    n: int
    k: int
    scenario: Scenario
    alpha: float = 0.0
    alpha_r: float | None = None
    roots: int = 0
    max_rounds: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigurationError(f"peer count must be >= 1, got {self.n}")
        if self.k < 1:
            raise ConfigurationError(f"chunk count must be >= 1, got {self.k}")
        if self.roots < 0:
            raise ConfigurationError(f"root count must be >= 0, got {self.roots}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.alpha_r is None:
            object.__setattr__(self, "alpha_r", self.alpha)
        if not self.alpha <= self.alpha_r <= 1.0:
            raise ConfigurationError(
                f"alpha_r must be in [alpha, 1], got {self.alpha_r} with alpha={self.alpha}"
            )
        if self.max_rounds < 1:
            raise ConfigurationError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.scenario is Scenario.RANDOM_MATCHING and self.n < 2:
            raise ConfigurationError("random matching needs at least 2 peers")


class DistributionVector:
    """Probability vector over per-peer chunk counts 0..k.

    Entries must be non-negative and sum to one within SUM_TOL. The
    backing array is read-only; transformations return new vectors.
    """

    SUM_TOL = 1e-12

    __slots__ = ("_p",)

    def __init__(self, p: Iterable[float]) -> None:
        arr = np.array(list(p) if not isinstance(p, np.ndarray) else p, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ConfigurationError("distribution needs k+1 >= 2 entries")
        if np.any(arr < 0.0):
            raise ConfigurationError("distribution entries must be non-negative")
        total = float(arr.sum())
        if abs(total - 1.0) > self.SUM_TOL:
            raise ConfigurationError(
                f"distribution must sum to 1 within {self.SUM_TOL}, got {total!r}"
            )
        arr.setflags(write=False)
        self._p = arr

    @classmethod
    def point_mass(cls, k: int, i: int) -> "DistributionVector":
        arr = np.zeros(k + 1)
        arr[i] = 1.0
        return cls(arr)

    @classmethod
    def uniform(cls, k: int) -> "DistributionVector":
        return cls(np.full(k + 1, 1.0 / (k + 1)))

    @property
    def p(self) -> np.ndarray:
        return self._p

    @property
    def k(self) -> int:
        return self._p.size - 1

    def mean_count(self) -> float:
        return float(np.dot(np.arange(self._p.size), self._p))

    def __len__(self) -> int:
        return self._p.size

    def __getitem__(self, i: int) -> float:
        return float(self._p[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DistributionVector):
            return NotImplemented
        return np.array_equal(self._p, other._p)

    def __repr__(self) -> str:
        return f"DistributionVector({self._p.tolist()!r})"
