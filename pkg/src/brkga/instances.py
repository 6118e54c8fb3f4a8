"""Reading, writing and generating reference-problem instance files.

TSP files start with a header line ``n`` followed by ``n`` lines ``x y``.
Knapsack files start with ``n capacity`` followed by ``n`` lines
``weight value``. Fields are whitespace separated; ``#`` starts a comment.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .decoders import KnapsackDecoder, KnapsackInstance, TspDecoder, TspInstance
from .errors import ParseError


class InstanceWarning(UserWarning):
    pass


def _data_lines(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _numbers(tokens, count, path, lineno, what):
    if len(tokens) != count:
        raise ParseError(f"expected {count} fields ({what}), got {len(tokens)}", path, lineno)
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"non-numeric field in {' '.join(tokens)!r}", path, lineno) from None


def parse_instance_text(text: str, path=None, rounded: bool = False):
    rows = list(_data_lines(text))
    if not rows:
        raise ParseError("empty instance file", path, None)
    lineno, header = rows[0]
    if len(header) not in (1, 2):
        raise ParseError("header must be 'n' (TSP) or 'n capacity' (knapsack)", path, lineno)
    try:
        n = int(header[0])
    except ValueError:
        raise ParseError(f"item count {header[0]!r} is not an integer", path, lineno) from None
    body = rows[1:]
    if len(body) != n:
        where = body[n][0] if len(body) > n else (body[-1][0] if body else lineno)
        raise ParseError(f"header announces {n} entries, found {len(body)}", path, where)

    if len(header) == 1:
        if n < 3:
            raise ParseError(f"a TSP instance needs at least 3 cities, got {n}", path, lineno)
        cities = [_numbers(tok, 2, path, ln, "x y") for ln, tok in body]
        for (ln, _), (x, y) in zip(body, cities):
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ParseError("coordinates must be finite", path, ln)
        return TspInstance(np.array(cities), rounded=rounded)

    capacity = _numbers(header[1:], 1, path, lineno, "capacity")[0]
    if n < 1 or not capacity > 0:
        raise ParseError("knapsack needs n >= 1 and a positive capacity", path, lineno)
    items = []
    for ln, tok in body:
        w, v = _numbers(tok, 2, path, ln, "weight value")
        if not (w > 0 and v > 0):
            raise ParseError("weights and values must be positive", path, ln)
        if w > capacity:
            warnings.warn(f"{path or '<text>'}:{ln}: item weight {w} exceeds capacity "
                          f"{capacity}; item is unusable", InstanceWarning, stacklevel=2)
        items.append((w, v))
    w, v = np.array(items).T
    return KnapsackInstance(w, v, capacity)


def parse_instance(path, rounded: bool = False):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read instance: {exc}", str(path), None) from exc
    return parse_instance_text(text, str(path), rounded)


def format_instance(inst) -> str:
    if isinstance(inst, TspInstance):
        lines = [str(len(inst))] + [f"{x!r} {y!r}" for x, y in inst.cities.tolist()]
    else:
        lines = [f"{len(inst)} {inst.capacity!r}"]
        lines += [f"{w!r} {v!r}" for w, v in zip(inst.weights.tolist(), inst.values.tolist())]
    return "\n".join(lines) + "\n"


def write_instance(inst, path) -> None:
    Path(path).write_text(format_instance(inst))


def random_tsp(n: int, seed: int, scale: float = 100.0) -> TspInstance:
    """Cities uniform in a ``scale`` x ``scale`` square."""
    rng = np.random.default_rng(seed)
    return TspInstance(rng.random((n, 2)) * scale)


def random_knapsack(n: int, seed: int) -> KnapsackInstance:
    """Integer weights in [1, 30] and values in [1, 50]; capacity is half the total weight."""
    rng = np.random.default_rng(seed)
    w = rng.integers(1, 31, n).astype(float)
    v = rng.integers(1, 51, n).astype(float)
    return KnapsackInstance(w, v, float(np.floor(w.sum() / 2)))


def decoder_for(inst):
    if isinstance(inst, TspInstance):
        return TspDecoder(inst)
    return KnapsackDecoder(inst)
