"""Decoder contract, the permutation/indicator archetypes and two reference problems."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Chromosome, Origin
from .errors import DimensionError, EncodeError, LayoutError

DIRECT = "direct"
PERMUTATION = "permutation"
INDICATOR = "indicator"


def _as_keys(c) -> np.ndarray:
    if isinstance(c, Chromosome):
        return c.keys
    return np.asarray(c, dtype=np.float64)


class Decoder(ABC):
    """Deterministic map from a key vector to ``(solution, fitness)``.

    Fitness is a cost to minimize. ``decoder_type`` is ``"direct"`` or
    ``"permutation"`` and selects the distance used by path-relinking.
    Subclasses may override :meth:`fitness_batch` with a vectorized version;
    it must agree with :meth:`decode` row by row.
    """

    n: int
    decoder_type: str = DIRECT

    @abstractmethod
    def decode(self, keys) -> tuple[object, float]:
        ...

    def fitness_batch(self, keys: np.ndarray) -> np.ndarray:
        return np.array([self.decode(row)[1] for row in keys], dtype=np.float64)

    def _check(self, keys) -> np.ndarray:
        keys = _as_keys(keys)
        if keys.shape[-1] != self.n:
            raise DimensionError(f"expected {self.n} keys, got {keys.shape[-1]}")
        return keys


class FunctionDecoder(Decoder):
    """Wrap a plain ``keys -> (solution, fitness)`` callable."""

    def __init__(self, n: int, fn, decoder_type: str = DIRECT):
        self.n = n
        self.fn = fn
        self.decoder_type = decoder_type

    def decode(self, keys):
        solution, fit = self.fn(self._check(keys))
        return solution, float(fit)


def keys_to_permutation(keys) -> np.ndarray:
    """Indices ordered by ascending key, equal keys by ascending index."""
    keys = _as_keys(keys)
    if keys.size == 0:
        raise DimensionError("empty key vector")
    return np.argsort(keys, kind="stable")


def keys_to_classes(keys, num_classes: int) -> np.ndarray:
    if num_classes < 1:
        raise ValueError("num_classes must be at least 1")
    keys = _as_keys(keys)
    cls = np.floor(keys * num_classes).astype(np.int64)
    # guards float rounding of k * num_classes for keys just below 1
    return np.minimum(cls, num_classes - 1)


# -- TSP ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TspInstance:
    cities: np.ndarray
    rounded: bool = False

    def __post_init__(self):
        pts = np.array(self.cities, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DimensionError("cities must be a list of (x, y) pairs")
        if pts.shape[0] < 3:
            raise DimensionError("a TSP instance needs at least 3 cities")
        if not np.all(np.isfinite(pts)):
            raise ValueError("city coordinates must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "cities", pts)
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=-1))
        if self.rounded:
            dist = np.floor(dist + 0.5)
        dist.flags.writeable = False
        object.__setattr__(self, "distances", dist)

    def __len__(self):
        return self.cities.shape[0]

    def __eq__(self, other):
        return (isinstance(other, TspInstance) and self.rounded == other.rounded
                and np.array_equal(self.cities, other.cities))

    def tour_length(self, tour) -> float:
        tour = np.asarray(tour)
        return float(self.distances[tour, np.roll(tour, -1)].sum())


class TspDecoder(Decoder):
    decoder_type = PERMUTATION

    def __init__(self, instance: TspInstance):
        self.instance = instance
        self.n = len(instance)

    def decode(self, keys):
        tour = keys_to_permutation(self._check(keys))
        return [int(t) for t in tour], self.instance.tour_length(tour)

    def fitness_batch(self, keys):
        keys = self._check(keys)
        tours = np.argsort(keys, axis=1, kind="stable")
        nxt = np.roll(tours, -1, axis=1)
        return self.instance.distances[tours, nxt].sum(axis=1)

    def encode(self, tour) -> Chromosome:
        return encode_tour(tour, self.n)


def encode_tour(tour: Sequence[int], n: int | None = None) -> Chromosome:
    """Keys whose sorted order reproduces ``tour``: position p gets (p + 0.5) / n."""
    tour = [int(t) for t in tour]
    n = len(tour) if n is None else n
    if len(tour) != n or sorted(tour) != list(range(n)):
        raise EncodeError(f"{tour} is not a permutation of 0..{n - 1}")
    keys = np.empty(n)
    keys[tour] = (np.arange(n) + 0.5) / n
    return Chromosome(keys, None, Origin.WARMSTART)


# -- 0/1 knapsack ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KnapsackInstance:
    weights: np.ndarray
    values: np.ndarray
    capacity: float

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        v = np.array(self.values, dtype=np.float64)
        if w.ndim != 1 or w.shape != v.shape or w.size == 0:
            raise DimensionError("weights and values must be equal-length, non-empty")
        if np.any(w <= 0) or np.any(v <= 0) or not self.capacity > 0:
            raise ValueError("weights, values and capacity must be positive")
        for a in (w, v):
            a.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "capacity", float(self.capacity))
        unusable = w > self.capacity
        unusable.flags.writeable = False
        object.__setattr__(self, "unusable", unusable)

    def __len__(self):
        return self.weights.size

    def __eq__(self, other):
        return (isinstance(other, KnapsackInstance) and self.capacity == other.capacity
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.values, other.values))

    def is_feasible(self, items) -> bool:
        items = list(items)
        if any(i < 0 or i >= len(self) or self.unusable[i] for i in items):
            return False
        return len(set(items)) == len(items) and self.weights[items].sum() <= self.capacity

    def value(self, items) -> float:
        return float(self.values[list(items)].sum())


class KnapsackDecoder(Decoder):
    """Keys >= 0.5 select an item; overweight sets drop lowest-key picks first.

    Items heavier than the capacity are never selected. Fitness is the
    negated total value.
    """

    decoder_type = DIRECT

    def __init__(self, instance: KnapsackInstance):
        self.instance = instance
        self.n = len(instance)

    def _select(self, keys: np.ndarray) -> np.ndarray:
        inst = self.instance
        chosen = (keys >= 0.5) & ~inst.unusable
        order = np.argsort(keys, axis=-1, kind="stable")
        w_sorted = np.take_along_axis(chosen * inst.weights, order, axis=-1)
        total = w_sorted.sum(axis=-1, keepdims=True)
        removed = total - np.cumsum(w_sorted, axis=-1)
        # drop sorted positions up to and including the first one that makes it fit
        over = total > inst.capacity
        fits = removed <= inst.capacity
        cut = np.where(over[..., 0], np.argmax(fits, axis=-1) + 1, 0)
        pos = np.arange(keys.shape[-1])
        drop_sorted = pos < cut[..., None]
        drop = np.zeros_like(chosen)
        np.put_along_axis(drop, order, drop_sorted, axis=-1)
        return chosen & ~drop

    def decode(self, keys):
        keys = self._check(keys)
        mask = self._select(keys[None, :])[0]
        items = [int(i) for i in np.flatnonzero(mask)]
        return items, -self.instance.value(items)

    def fitness_batch(self, keys):
        keys = self._check(keys)
        mask = self._select(keys)
        return -(mask * self.instance.values).sum(axis=1)

    def encode(self, items) -> Chromosome:
        return encode_selection(items, self.instance)


def encode_selection(items, instance: KnapsackInstance) -> Chromosome:
    """Selected items get key 0.75, the others 0.25."""
    items = [int(i) for i in items]
    if not instance.is_feasible(items):
        raise EncodeError(f"item set {items} is infeasible for this instance")
    keys = np.full(len(instance), 0.25)
    keys[items] = 0.75
    return Chromosome(keys, None, Origin.WARMSTART)


# -- partitioned chromosomes -------------------------------------------------

@dataclass(frozen=True)
class Segment:
    offset: int
    length: int
    archetype: str
    value: list


def _normalize_layout(layout):
    out = []
    for entry in layout:
        length, archetype = entry[0], entry[1]
        if archetype == PERMUTATION:
            out.append((int(length), PERMUTATION, None))
        elif archetype == INDICATOR:
            classes = entry[2] if len(entry) > 2 else 2
            out.append((int(length), INDICATOR, int(classes)))
        else:
            raise LayoutError(f"unknown archetype {archetype!r}")
        if out[-1][0] < 1:
            raise LayoutError("segment lengths must be positive")
    return out


def mixed_decode(layout, keys) -> list[Segment]:
    """Decode consecutive chromosome segments with their own archetype.

    ``layout`` entries are ``(length, "permutation")`` or
    ``(length, "indicator", num_classes)``. Permutations are local to their
    segment (indices start at 0).
    """
    keys = _as_keys(keys)
    parts = _normalize_layout(layout)
    if sum(p[0] for p in parts) != keys.size:
        raise LayoutError(
            f"layout covers {sum(p[0] for p in parts)} genes, chromosome has {keys.size}")
    segments = []
    offset = 0
    for length, archetype, classes in parts:
        chunk = keys[offset:offset + length]
        if archetype == PERMUTATION:
            value = [int(v) for v in keys_to_permutation(chunk)]
        else:
            value = [int(v) for v in keys_to_classes(chunk, classes)]
        segments.append(Segment(offset, length, archetype, value))
        offset += length
    return segments


@dataclass
class MixedDecoder(Decoder):
    """Partitioned-chromosome decoder scored by a user cost over the segments."""

    layout: list
    cost: object = None
    decoder_type: str = DIRECT
    n: int = field(init=False)

    def __post_init__(self):
        self.n = sum(p[0] for p in _normalize_layout(self.layout))

    def decode(self, keys):
        segments = mixed_decode(self.layout, self._check(keys))
        fit = 0.0 if self.cost is None else float(self.cost(segments))
        return segments, fit
