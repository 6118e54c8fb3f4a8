"""Island migration, shaking, multi-parent crossover, key-space distances and
implicit path-relinking."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Chromosome, Origin, Population, RngStream, thresholded
from .decoders import PERMUTATION, Decoder, keys_to_permutation
from .errors import ConfigError, DecodeError, DimensionError
from .params import IprConfig, IslandConfig, MultiParentConfig, ShakeConfig

NO_PAIR_ABOVE_MD = "noPairAboveMd"
NO_IMPROVEMENT = "noImprovement"


def ceil_count(fraction: float, total: int) -> int:
    """``ceil(fraction * total)`` tolerant of float noise such as 0.3 * 10."""
    return int(math.ceil(round(fraction * total, 9)))


def _keys(c) -> np.ndarray:
    return c.keys if isinstance(c, Chromosome) else np.asarray(c, dtype=np.float64)


def decode_all(decoder: Decoder, keys: np.ndarray) -> np.ndarray:
    try:
        fit = np.asarray(decoder.fitness_batch(keys), dtype=np.float64)
    except DecodeError:
        raise
    except Exception as exc:
        # find the offending row so the error names it
        for idx, row in enumerate(keys):
            try:
                decoder.decode(row)
            except Exception as inner:
                raise DecodeError(f"decoder failed on chromosome {idx}: {inner}",
                                  idx, row.copy()) from inner
        raise DecodeError(f"decoder failed: {exc}") from exc
    if fit.shape != (keys.shape[0],) or np.isnan(fit).any():
        bad = int(np.flatnonzero(np.isnan(fit))[0]) if fit.shape == (keys.shape[0],) else None
        raise DecodeError("decoder returned missing or NaN fitness", bad)
    return fit


# -- island model ----------------------------------------------------------------

def migrate(populations: Sequence[Population], cfg: IslandConfig) -> list[Population]:
    """Ring exchange: population k sends its best ``cfg.i`` members to k + 1.

    Migrants overwrite the target's worst members, skipping any migrant whose
    key vector the target already holds. All sources are read before any
    target is modified.
    """
    pops = [p.sorted() for p in populations]
    if len(pops) < 2 or cfg.p < 2:
        return pops
    for p in pops:
        if cfg.i > p.elite_count:
            raise ConfigError(f"{cfg.i} migrants exceed elite count {p.elite_count}")
    out = []
    for t, target in enumerate(pops):
        source = pops[t - 1]
        keys = np.array(target.keys)
        fit = np.array(target.fitness)
        origin = np.array(target.origin)
        slot = len(target) - 1
        for j in range(cfg.i):
            if np.any(np.all(keys == source.keys[j], axis=1)):
                continue
            keys[slot] = source.keys[j]
            fit[slot] = source.fitness[j]
            origin[slot] = source.origin[j]
            slot -= 1
        out.append(target.replace(keys=keys, fitness=fit, origin=origin).sorted())
    return out


# -- shaking -------------------------------------------------------------------

def shake(pop: Population, cfg: ShakeConfig, decoder_type: str, rng: RngStream,
          decoder: Decoder | None = None, intensity: float | None = None) -> Population:
    """Perturb the elite and re-randomize everything else.

    One intensity is drawn per call from ``[cfg.lower, cfg.upper]``; each
    elite gets ``ceil(intensity * n)`` perturbed positions. Direct decoders
    re-draw those keys, permutation decoders swap each with another position.
    With ``decoder`` the result is re-decoded and returned sorted.
    """
    beta = float(rng.uniform(cfg.lower, cfg.upper)) if intensity is None else intensity
    m, n = pop.keys.shape
    e = pop.elite_count
    k = min(n, ceil_count(beta, n))
    keys = np.array(pop.keys)
    for r in range(e):
        pos = rng.choice(n, size=k, replace=False) if k else ()
        if decoder_type == PERMUTATION:
            if n < 2:
                continue
            for p in pos:
                q = int(rng.integers(0, n - 1))
                q += q >= p
                keys[r, p], keys[r, q] = keys[r, q], keys[r, p]
        elif k:
            keys[r, pos] = rng.random(k)
    keys[e:] = rng.random((m - e, n))
    origin = np.array(pop.origin)
    origin[e:] = Origin.RANDOM
    fit = np.full(m, np.nan)
    shaken = pop.replace(keys=keys, fitness=fit, origin=origin,
                         lineage=tuple(() for _ in range(m)))
    if decoder is None:
        return shaken
    return shaken.replace(fitness=decode_all(decoder, keys)).sorted()


# -- multi-parent crossover ------------------------------------------------------

_BIAS = {
    "logInverse": lambda r, t: 1.0 / np.log(r + 1.0),
    "linear": lambda r, t: 1.0 / r,
    "quadratic": lambda r, t: r ** -2.0,
    "cubic": lambda r, t: r ** -3.0,
    "exponential": lambda r, t: np.exp(-r),
    "constant": lambda r, t: np.full_like(r, 1.0 / t),
}


def bias_weights(kind: str, total: int) -> np.ndarray:
    """Raw bias values for ranks 1..total."""
    if kind not in _BIAS:
        raise ConfigError(f"unknown bias function {kind!r}")
    ranks = np.arange(1, total + 1, dtype=np.float64)
    w = _BIAS[kind](ranks, total)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ConfigError(f"bias {kind!r} produced non-positive weights")
    return w


def bias_probabilities(kind: str, total: int) -> np.ndarray:
    w = bias_weights(kind, total)
    return w / w.sum()


def _pick_parent_genes(parent_keys: np.ndarray, probs: np.ndarray, rng: RngStream) -> np.ndarray:
    """parent_keys: (..., pi, n). One parent index per gene drawn from ``probs``."""
    *lead, pi, n = parent_keys.shape
    u = rng.random((*lead, n))
    idx = np.searchsorted(np.cumsum(probs), u, side="right")
    idx = np.minimum(idx, pi - 1)
    return np.take_along_axis(parent_keys, idx[..., None, :], axis=-2)[..., 0, :]


def multi_parent_crossover(parents: Sequence, cfg: MultiParentConfig, rng: RngStream) -> Chromosome:
    """Offspring whose every gene comes from a parent picked with probability
    proportional to the bias value of its rank. ``parents`` must already be
    ranked best first."""
    if len(parents) != cfg.total:
        raise ConfigError(f"expected {cfg.total} parents, got {len(parents)}")
    stack = np.vstack([_keys(p) for p in parents])
    probs = bias_probabilities(cfg.bias, cfg.total)
    return Chromosome(_pick_parent_genes(stack, probs, rng), None, Origin.OFFSPRING)


# -- distances -------------------------------------------------------------------

def _pair(a, b):
    ka, kb = _keys(a), _keys(b)
    if ka.shape != kb.shape:
        raise DimensionError(f"length mismatch: {ka.size} vs {kb.size}")
    return ka, kb


def hamming_distance(a, b) -> float:
    """Fraction of positions whose keys fall on different sides of 0.5."""
    ka, kb = _pair(a, b)
    return float(np.mean(thresholded(ka) != thresholded(kb)))


def _rank(keys) -> np.ndarray:
    perm = keys_to_permutation(keys)
    rank = np.empty_like(perm)
    rank[perm] = np.arange(perm.size)
    return rank


def kendall_tau_distance(a, b) -> float:
    """Share of element pairs ordered differently by the two induced permutations."""
    ka, kb = _pair(a, b)
    n = ka.size
    if n < 2:
        raise DimensionError("Kendall tau distance needs at least two genes")
    seq = _rank(kb)[keys_to_permutation(ka)]
    inversions = int(np.triu(seq[:, None] > seq[None, :], k=1).sum())
    return inversions / (n * (n - 1) / 2)


def distance_for(decoder_type: str):
    return kendall_tau_distance if decoder_type == PERMUTATION else hamming_distance


# -- implicit path-relinking -----------------------------------------------------

@dataclass(frozen=True)
class IprStep:
    block: int
    fitness: float
    distance: float


@dataclass(frozen=True)
class IprResult:
    """Outcome of one path-relinking call.

    ``chromosome`` is set only when the walk found a solution strictly better
    than both endpoints; otherwise ``reason`` says why not.
    """

    chromosome: Chromosome | None
    reason: str | None
    base: Chromosome | None = None
    guide: Chromosome | None = None
    initial_distance: float | None = None
    steps: tuple[IprStep, ...] = ()

    @property
    def applied(self) -> bool:
        return self.chromosome is not None


def candidate_pairs(elite_a: Sequence[Chromosome], elite_b: Sequence[Chromosome],
                    cfg: IprConfig, rng: RngStream) -> list[tuple[Chromosome, Chromosome]]:
    """Pairs to test, in the order they are tried, truncated to the cp share.

    ``bestSolution`` orders pairs by combined fitness (best first) and
    ``randomElite`` shuffles them.
    """
    idx = [(i, j) for i in range(len(elite_a)) for j in range(len(elite_b))]
    if cfg.sel == "randomElite":
        idx = [idx[k] for k in rng.permutation(len(idx))]
    else:
        idx.sort(key=lambda ij: elite_a[ij[0]].fitness + elite_b[ij[1]].fitness)
    limit = ceil_count(cfg.cp, len(idx))
    return [(elite_a[i], elite_b[j]) for i, j in idx[:limit]]


def relink_pairs(pairs, cfg: IprConfig, decoder: Decoder, rng: RngStream) -> IprResult:
    """Run the block walk on the first pair at least ``cfg.md`` apart."""
    dist = distance_for(decoder.decoder_type)
    chosen = None
    for a, b in pairs:
        d = dist(a, b)
        if d >= cfg.md:
            chosen = (a, b, d)
            break
    if chosen is None:
        return IprResult(None, NO_PAIR_ABOVE_MD)
    a, b, d0 = chosen
    if cfg.sel == "randomElite":
        swap = bool(rng.integers(0, 2))
    else:
        swap = b.fitness < a.fitness
    base, guide = (b, a) if swap else (a, b)
    return _walk(base, guide, d0, cfg, decoder, dist)


def _walk(base, guide, d0, cfg, decoder, dist) -> IprResult:
    n = base.keys.size
    bs = min(cfg.bs, n)
    starts = list(range(0, n, bs))
    n_steps = ceil_count(cfg.ps, len(starts))
    work = np.array(base.keys)
    work_d = d0
    remaining = list(range(len(starts)))
    target = min(base.fitness, guide.fitness)
    best_keys, best_fit = None, math.inf
    steps = []
    for _ in range(n_steps):
        cands, blocks = [], []
        for b in remaining:
            s = starts[b]
            c = work.copy()
            c[s:s + bs] = guide.keys[s:s + bs]
            cd = dist(c, guide)
            # a committed move may not take the walk further from the guide
            if cd <= work_d:
                cands.append((c, cd))
                blocks.append(b)
        if not cands:
            break
        fits = decode_all(decoder, np.vstack([c for c, _ in cands]))
        k = int(np.argmin(fits))
        work, work_d = cands[k]
        remaining.remove(blocks[k])
        steps.append(IprStep(blocks[k], float(fits[k]), float(work_d)))
        if fits[k] < best_fit:
            best_keys, best_fit = work.copy(), float(fits[k])
    if best_keys is not None and best_fit < target:
        child = Chromosome(best_keys, best_fit, Origin.IPR)
        return IprResult(child, None, base, guide, d0, tuple(steps))
    return IprResult(None, NO_IMPROVEMENT, base, guide, d0, tuple(steps))


def implicit_path_relinking(pop_a: Population, pop_b: Population, cfg: IprConfig,
                            decoder: Decoder, rng: RngStream) -> IprResult:
    """Relink elites of two evaluated populations."""
    elite_a = pop_a.sorted().members[:pop_a.elite_count]
    elite_b = pop_b.sorted().members[:pop_b.elite_count]
    return relink_pairs(candidate_pairs(elite_a, elite_b, cfg, rng), cfg, decoder, rng)
