"""Chromosomes, populations and the seeded random streams they are built from."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionError, InvalidParameterError, NotEvaluatedError

# Pair budget for the sampled diversity estimate.
DIVERSITY_MAX_PAIRS = 1000


class Origin(enum.IntEnum):
    RANDOM = 0
    OFFSPRING = 1
    MUTANT = 2
    WARMSTART = 3
    IPR = 4

    @property
    def label(self) -> str:
        return self.name.lower()


class RngStream:
    """Reproducible uniform random source identified by ``(seed, stream_id)``.

    Streams with the same seed but different ids are statistically
    independent; each one is a PCG64 generator spawned from a
    ``SeedSequence`` so the sequence of draws does not depend on the platform.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise InvalidParameterError("seed and stream id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def random(self, size=None):
        """Uniform draws in [0, 1)."""
        return self.generator.random(size)

    def uniform(self, low: float, high: float, size=None):
        if low == high:
            return low if size is None else np.full(size, float(low))
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def choice(self, a, size=None, replace=True, p=None):
        return self.generator.choice(a, size=size, replace=replace, p=p)

    def permutation(self, x):
        return self.generator.permutation(x)


@dataclass(frozen=True, eq=False)
class Chromosome:
    keys: np.ndarray
    fitness: float | None = None
    origin: Origin = Origin.RANDOM

    def __post_init__(self):
        keys = np.array(self.keys, dtype=np.float64)
        if keys.ndim != 1 or keys.size == 0:
            raise DimensionError("a chromosome needs a non-empty 1-D key vector")
        if np.any(keys < 0.0) or np.any(keys >= 1.0):
            raise InvalidParameterError("random keys must lie in [0, 1)")
        keys.flags.writeable = False
        object.__setattr__(self, "keys", keys)

    def __len__(self):
        return self.keys.size

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    def with_fitness(self, fitness: float) -> Chromosome:
        return Chromosome(self.keys, float(fitness), self.origin)


def new_random_chromosome(n: int, rng: RngStream) -> Chromosome:
    if n < 1:
        raise DimensionError(f"chromosome length must be positive, got {n}")
    return Chromosome(rng.random(n), None, Origin.RANDOM)


class Population:
    """Fixed-size set of chromosomes stored as a key matrix.

    ``keys`` has one row per member. ``fitness`` holds NaN for members that
    have not been decoded yet. ``lineage`` is a diagnostic tuple per member:
    ``(source,)`` for an elite copy, ``()`` for a fresh random chromosome and
    the parent indices for an offspring, all relative to the previous
    generation's sorted population.
    """

    def __init__(self, keys, fitness=None, origin=None, elite_count: int = 0,
                 generation: int = 0, lineage=None):
        keys = np.array(keys, dtype=np.float64)
        if keys.ndim != 2 or keys.shape[0] == 0 or keys.shape[1] == 0:
            raise DimensionError("population keys must be a non-empty 2-D matrix")
        m = keys.shape[0]
        if fitness is None:
            fitness = np.full(m, np.nan)
        fitness = np.array(fitness, dtype=np.float64)
        if origin is None:
            origin = np.full(m, Origin.RANDOM, dtype=np.int8)
        origin = np.array(origin, dtype=np.int8)
        if fitness.shape != (m,) or origin.shape != (m,):
            raise DimensionError("fitness/origin length must match member count")
        if elite_count < 0 or (elite_count > 0 and 2 * elite_count >= m):
            raise InvalidParameterError(
                f"elite count {elite_count} must be below half of {m} members")
        if lineage is None:
            lineage = tuple(() for _ in range(m))
        for arr in (keys, fitness, origin):
            arr.flags.writeable = False
        self.keys = keys
        self.fitness = fitness
        self.origin = origin
        self.elite_count = int(elite_count)
        self.generation = int(generation)
        self.lineage = tuple(lineage)

    @classmethod
    def from_members(cls, members: Sequence[Chromosome], elite_count=0, generation=0):
        keys = np.vstack([c.keys for c in members])
        fit = [np.nan if c.fitness is None else c.fitness for c in members]
        origin = [int(c.origin) for c in members]
        return cls(keys, fit, origin, elite_count, generation)

    @classmethod
    def random(cls, size: int, n: int, rng: RngStream, elite_count=0, generation=0):
        if n < 1:
            raise DimensionError(f"chromosome length must be positive, got {n}")
        return cls(rng.random((size, n)), None, None, elite_count, generation)

    def __len__(self):
        return self.keys.shape[0]

    def __getitem__(self, i) -> Chromosome:
        f = self.fitness[i]
        return Chromosome(self.keys[i], None if np.isnan(f) else float(f),
                          Origin(int(self.origin[i])))

    def __iter__(self) -> Iterator[Chromosome]:
        return (self[i] for i in range(len(self)))

    @property
    def members(self) -> list[Chromosome]:
        return list(self)

    @property
    def n(self) -> int:
        return self.keys.shape[1]

    @property
    def evaluated(self) -> bool:
        return not np.isnan(self.fitness).any()

    @property
    def best_fitness(self) -> float:
        self._require_evaluated()
        return float(self.fitness.min())

    def _require_evaluated(self):
        if not self.evaluated:
            bad = int(np.flatnonzero(np.isnan(self.fitness))[0])
            raise NotEvaluatedError(f"member {bad} has no fitness")

    def replace(self, **changes) -> Population:
        fields = dict(keys=self.keys, fitness=self.fitness, origin=self.origin,
                      elite_count=self.elite_count, generation=self.generation,
                      lineage=self.lineage)
        fields.update(changes)
        return Population(**fields)

    def sorted(self) -> Population:
        """Members ordered by ascending fitness; ties keep their current order."""
        self._require_evaluated()
        order = np.argsort(self.fitness, kind="stable")
        return self.take(order)

    def take(self, idx, elite_count=None) -> Population:
        idx = np.asarray(idx)
        return Population(self.keys[idx], self.fitness[idx], self.origin[idx],
                          self.elite_count if elite_count is None else elite_count,
                          self.generation, tuple(self.lineage[i] for i in idx))


def partition(pop: Population, elite_count: int):
    """Split ``pop`` into its ``elite_count`` best members and the rest.

    Returns two tuples of chromosomes. Ordering inside each view is by
    ascending fitness, equal fitness keeping insertion order.
    """
    pop._require_evaluated()
    if elite_count < 1 or 2 * elite_count >= len(pop):
        raise InvalidParameterError(
            f"elite count {elite_count} out of range for {len(pop)} members")
    ordered = pop.sorted()
    members = ordered.members
    return tuple(members[:elite_count]), tuple(members[elite_count:])


def thresholded(keys) -> np.ndarray:
    return np.asarray(keys) >= 0.5


def diversity(pop: Population, rng: RngStream | None = None,
              max_pairs: int = DIVERSITY_MAX_PAIRS) -> float:
    """Mean normalized Hamming distance between members' thresholded keys.

    Every pair is used when there are at most ``max_pairs`` of them,
    otherwise ``max_pairs`` distinct-member pairs are drawn from ``rng``.
    """
    m = len(pop)
    if m < 2:
        raise InvalidParameterError("diversity needs at least two members")
    bits = thresholded(pop.keys)
    total_pairs = m * (m - 1) // 2
    if total_pairs <= max_pairs:
        i, j = np.triu_indices(m, k=1)
    else:
        if rng is None:
            raise InvalidParameterError("sampling pairs requires an rng stream")
        i = rng.integers(0, m, max_pairs)
        j = rng.integers(0, m - 1, max_pairs)
        j = j + (j >= i)
    return float(np.mean(bits[i] != bits[j]))
