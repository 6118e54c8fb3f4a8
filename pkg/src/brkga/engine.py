"""Generational loop for RKGA, BRKGA and BRKGA-MP with restarts."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import advanced
from .advanced import decode_all
from .core import Chromosome, Origin, Population, RngStream, diversity
from .decoders import Decoder
from .errors import ConfigError, DimensionError, InvalidParameterError
from .params import (BRKGA, BRKGA_MP, BrkgaParams, RandomControlBounds, check,
                     population_counts, sample_online_params, validate_bounds)

ORCHESTRATOR_STREAM = 0
DIVERSITY_STREAM = 1
FIRST_POPULATION_STREAM = 2

RESTART = "restart"
SHAKE = "shake"
MIGRATION = "migration"
IPR_APPLIED = "iprApplied"


def ipr_skipped(reason: str) -> str:
    return f"iprSkipped({reason})"


def crossover(a, b, rho: float, rng: RngStream) -> Chromosome:
    """Parametrized uniform crossover: each gene comes from ``a`` with probability ``rho``."""
    ka = a.keys if isinstance(a, Chromosome) else np.asarray(a, dtype=np.float64)
    kb = b.keys if isinstance(b, Chromosome) else np.asarray(b, dtype=np.float64)
    if ka.shape != kb.shape:
        raise DimensionError(f"parent lengths differ: {ka.size} vs {kb.size}")
    if not 0 < rho <= 1:
        raise InvalidParameterError(f"rho must be in (0, 1], got {rho}")
    mask = rng.random(ka.size) < rho
    return Chromosome(np.where(mask, ka, kb), None, Origin.OFFSPRING)


@dataclass(frozen=True)
class StopCriteria:
    max_generations: int | None = None
    max_seconds: float | None = None
    target_value: float | None = None

    def __post_init__(self):
        if self.max_generations is None and self.max_seconds is None and self.target_value is None:
            raise InvalidParameterError("set at least one stopping criterion")
        if self.max_generations is not None and self.max_generations < 0:
            raise InvalidParameterError("max_generations must be non-negative")


@dataclass(frozen=True)
class BestRecord:
    chi: Chromosome
    f_star: float
    found_at_generation: int


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    population_best: float
    median_fitness: float
    diversity: float
    elapsed_seconds: float
    events: tuple[str, ...]
    pop_size: int
    elite_pct: float
    mutant_pct: float
    rho: float


@dataclass(frozen=True)
class FinalRecord:
    solution: object
    f_star: float
    total_generations: int
    wall_seconds: float
    seed: int


@dataclass
class RunTrace:
    records: list[GenerationRecord] = field(default_factory=list)
    final: FinalRecord | None = None


def _evaluator(decoder: Decoder, executor: ThreadPoolExecutor | None):
    if executor is None or type(decoder).fitness_batch is not Decoder.fitness_batch:
        return lambda keys: decode_all(decoder, keys)

    def run(keys):
        try:
            fit = list(executor.map(lambda row: decoder.decode(row)[1], keys))
        except Exception:
            return decode_all(decoder, keys)  # re-run serially to locate the failure
        return np.asarray(fit, dtype=np.float64)
    return run


def _offspring_keys(pop: Population, params: BrkgaParams, count: int, rng: RngStream):
    P, e = len(pop), pop.elite_count
    keys = pop.keys
    if params.variant == BRKGA_MP:
        mp = params.multi_parent
        parents = np.empty((count, mp.total), dtype=np.int64)
        for r in range(count):
            elite = rng.choice(e, size=mp.elite, replace=False)
            other = e + rng.choice(P - e, size=mp.total - mp.elite, replace=False)
            parents[r] = np.sort(np.concatenate([elite, other]))
        probs = advanced.bias_probabilities(mp.bias, mp.total)
        children = advanced._pick_parent_genes(keys[parents], probs, rng)
        return children, parents
    if params.variant == BRKGA:
        a = rng.integers(0, e, count)
        b = rng.integers(e, P, count)
    else:
        a = rng.integers(0, P, count)
        b = rng.integers(0, P - 1, count)
        b = b + (b >= a)
    mask = rng.random((count, pop.n)) < params.rho
    children = np.where(mask, keys[a], keys[b])
    return children, np.stack([a, b], axis=1)


def evolve_generation(pop: Population, params: BrkgaParams, decoder: Decoder,
                      rng: RngStream, evaluate: Callable | None = None) -> Population:
    """Build and decode the next generation from an evaluated population.

    The result holds the elite copied unchanged, fresh mutants and crossover
    offspring in the counts given by ``params``, sorted by fitness.
    """
    if len(pop) != params.pop_size:
        raise DimensionError(f"population has {len(pop)} members, params say {params.pop_size}")
    if pop.n != decoder.n:
        raise DimensionError(f"chromosomes have {pop.n} keys, decoder expects {decoder.n}")
    elite, mutants = population_counts(params.pop_size, params.elite_pct, params.mutant_pct)
    pop = pop.sorted()
    if pop.elite_count != elite:
        pop = pop.replace(elite_count=elite)
    P, n = len(pop), pop.n
    k = P - elite - mutants
    mutant_keys = rng.random((mutants, n))
    child_keys, parents = _offspring_keys(pop, params, k, rng)
    new_keys = np.vstack([mutant_keys, child_keys])
    evaluate = evaluate or (lambda x: decode_all(decoder, x))
    new_fit = evaluate(new_keys)
    lineage = ([(i,) for i in range(elite)] + [()] * mutants
               + [tuple(int(x) for x in row) for row in parents])
    origin = np.concatenate([pop.origin[:elite],
                             np.full(mutants, Origin.MUTANT, dtype=np.int8),
                             np.full(k, Origin.OFFSPRING, dtype=np.int8)])
    nxt = Population(np.vstack([pop.keys[:elite], new_keys]),
                     np.concatenate([pop.fitness[:elite], new_fit]),
                     origin, elite, pop.generation + 1, lineage)
    return nxt.sorted()


class Engine:
    """Stateful driver for one run; :func:`run` is the usual entry point.

    Random streams: 0 drives orchestration (online control, path-relinking),
    1 the diversity estimate, and 2 + k island k.
    """

    def __init__(self, params: BrkgaParams, decoder: Decoder, seed: int,
                 warm_starts: Sequence = (), control: RandomControlBounds | None = None,
                 observers: Iterable[Callable[[GenerationRecord], None]] = (),
                 workers: int = 1):
        check(params)
        if params.n != decoder.n:
            raise DimensionError(f"params.n={params.n} but decoder.n={decoder.n}")
        if control is not None:
            bad = validate_bounds(control, params)
            if bad:
                raise ConfigError("invalid control bounds: " + "; ".join(map(str, bad)), bad)
        self.params = params
        self.current = params
        self.decoder = decoder
        self.seed = int(seed)
        self.control = control
        self.observers = list(observers)
        self.warm_starts = [w if isinstance(w, Chromosome) else Chromosome(w, None, Origin.WARMSTART)
                            for w in warm_starts]
        if len(self.warm_starts) > params.pop_size:
            raise InvalidParameterError("more warm starts than population members")
        for w in self.warm_starts:
            if len(w) != decoder.n:
                raise DimensionError("warm start length does not match the decoder")
        self.orchestrator = RngStream(seed, ORCHESTRATOR_STREAM)
        self.diversity_rng = RngStream(seed, DIVERSITY_STREAM)
        self.streams = [RngStream(seed, FIRST_POPULATION_STREAM + k)
                        for k in range(params.islands.p)]
        self._executor = ThreadPoolExecutor(workers) if workers > 1 else None
        self._evaluate = _evaluator(decoder, self._executor)
        self.populations: list[Population] = []
        # inputs and raw outputs of the last evolve step, before migration/IPR/shake
        self.parents: list[Population] = []
        self.evolved: list[Population] = []
        self.best: BestRecord | None = None
        self.generation = 0
        self.since_improvement = 0
        self.restart_pending = False
        self.trace = RunTrace()
        self._t0 = None

    # -- helpers --

    def _random_population(self, k: int, size: int, generation: int) -> Population:
        P = self.current
        elite, _ = population_counts(size, P.elite_pct, P.mutant_pct)
        keys = self.streams[k].random((size, P.n))
        return Population(keys, self._evaluate(keys), None, elite, generation)

    def _resize(self, pop: Population, k: int, size: int, elite: int) -> Population:
        if size < len(pop):
            return pop.take(np.arange(size), elite_count=elite)
        if size > len(pop):
            extra = self.streams[k].random((size - len(pop), pop.n))
            pop = Population(np.vstack([pop.keys, extra]),
                             np.concatenate([pop.fitness, self._evaluate(extra)]),
                             np.concatenate([pop.origin, np.full(len(extra), Origin.MUTANT,
                                                                 dtype=np.int8)]),
                             elite, pop.generation, pop.lineage + ((),) * len(extra))
            return pop.sorted()
        return pop.replace(elite_count=elite)

    def _update_best(self) -> bool:
        k = min(range(len(self.populations)), key=lambda j: self.populations[j].fitness[0])
        pop = self.populations[k]
        if self.best is None or pop.fitness[0] < self.best.f_star:
            self.best = BestRecord(pop[0], float(pop.fitness[0]), self.generation)
            return True
        return False

    def _record(self, events) -> GenerationRecord:
        fits = np.concatenate([p.fitness for p in self.populations])
        div = float(np.mean([diversity(p, self.diversity_rng) for p in self.populations]))
        c = self.current
        rec = GenerationRecord(self.generation, self.best.f_star, float(fits.min()),
                               float(np.median(fits)), div, time.perf_counter() - self._t0,
                               tuple(events), c.pop_size, c.elite_pct, c.mutant_pct, c.rho)
        self.trace.records.append(rec)
        for obs in self.observers:
            obs(rec)
        return rec

    # -- lifecycle --

    def initialize(self) -> GenerationRecord:
        self._t0 = time.perf_counter()
        P = self.current
        pops = []
        for k in range(P.islands.p):
            keys = self.streams[k].random((P.pop_size, P.n))
            origin = np.full(P.pop_size, Origin.RANDOM, dtype=np.int8)
            if k == 0:
                for j, w in enumerate(self.warm_starts):
                    keys[j] = w.keys
                    origin[j] = Origin.WARMSTART
            pops.append(Population(keys, self._evaluate(keys), origin,
                                   P.elite_count, 0).sorted())
        self.populations = pops
        self._update_best()
        return self._record(())

    def step(self) -> GenerationRecord:
        self.generation += 1
        events = []
        if self.restart_pending:
            self.restart_pending = False
            self.populations = [self._random_population(k, self.current.pop_size,
                                                        self.generation).sorted()
                                for k in range(len(self.populations))]
            self.parents, self.evolved = [], []
            events.append(RESTART)
            self._update_best()
            self.since_improvement = 0
        else:
            if self.control is not None:
                overlay = sample_online_params(self.control, self.orchestrator)
                self.current = overlay.apply(self.params)
            c = self.current
            elite, _ = population_counts(c.pop_size, c.elite_pct, c.mutant_pct)
            self.parents = [self._resize(p, k, c.pop_size, elite)
                            for k, p in enumerate(self.populations)]
            self.evolved = [evolve_generation(p, c, self.decoder, self.streams[k],
                                              self._evaluate)
                            for k, p in enumerate(self.parents)]
            self.populations = list(self.evolved)
            isl = c.islands
            if isl.p > 1 and self.generation % isl.g == 0:
                self.populations = advanced.migrate(self.populations, isl)
                events.append(MIGRATION)
            improved = self._update_best()
            self.since_improvement = 0 if improved else self.since_improvement + 1
            s = self.since_improvement
            if c.ipr is not None and s > 0 and s % c.ipr.iters == 0:
                result = self._path_relink()
                events.append(IPR_APPLIED if result.applied else ipr_skipped(result.reason))
                if result.applied and self._update_best():
                    self.since_improvement = 0
            s = self.since_improvement
            if c.shake is not None and s > 0 and s % c.shake.iters == 0:
                self.populations = [
                    advanced.shake(p, c.shake, self.decoder.decoder_type, self.streams[k],
                                   self.decoder)
                    for k, p in enumerate(self.populations)]
                events.append(SHAKE)
                if self._update_best():
                    self.since_improvement = 0
        if self.since_improvement >= self.current.restart_iters:
            self.restart_pending = True
        return self._record(events)

    def _path_relink(self) -> advanced.IprResult:
        cfg = self.current.ipr
        rng = self.orchestrator
        pops = self.populations
        if len(pops) > 1:
            order = sorted(range(len(pops)), key=lambda j: pops[j].fitness[0])
            host = order[0]
            result = advanced.implicit_path_relinking(pops[host], pops[order[1]], cfg,
                                                      self.decoder, rng)
        else:
            host = 0
            elites = pops[0].members[:pops[0].elite_count]
            dist = advanced.distance_for(self.decoder.decoder_type)
            best, others = elites[0], elites[1:]
            others = sorted(others, key=lambda o: -dist(best, o))
            pairs = [(best, o) for o in others]
            pairs = pairs[:advanced.ceil_count(cfg.cp, len(pairs))]
            result = advanced.relink_pairs(pairs, cfg, self.decoder, rng)
        if result.applied:
            pop = pops[host]
            child = result.chromosome
            if not np.any(np.all(pop.keys == child.keys, axis=1)):
                keys, fit, origin = np.array(pop.keys), np.array(pop.fitness), np.array(pop.origin)
                keys[-1], fit[-1], origin[-1] = child.keys, child.fitness, Origin.IPR
                lineage = pop.lineage[:-1] + ((),)
                pops[host] = pop.replace(keys=keys, fitness=fit, origin=origin,
                                         lineage=lineage).sorted()
        return result

    def should_stop(self, stop: StopCriteria) -> bool:
        if stop.max_generations is not None and self.generation >= stop.max_generations:
            return True
        if stop.max_seconds is not None and time.perf_counter() - self._t0 >= stop.max_seconds:
            return True
        if stop.target_value is not None and self.best.f_star <= stop.target_value:
            return True
        return False

    def finish(self) -> RunTrace:
        solution, _ = self.decoder.decode(self.best.chi.keys)
        self.trace.final = FinalRecord(solution, self.best.f_star, self.generation,
                                       time.perf_counter() - self._t0, self.seed)
        if self._executor is not None:
            self._executor.shutdown()
        return self.trace


def run(params: BrkgaParams, decoder: Decoder, stop: StopCriteria, seed: int,
        hooks: Iterable[Callable[[GenerationRecord], None]] = (),
        warm_starts: Sequence = (), control: RandomControlBounds | None = None,
        workers: int = 1) -> tuple[BestRecord, RunTrace]:
    """Evolve until ``stop`` holds and return the best chromosome and the trace."""
    engine = Engine(params, decoder, seed, warm_starts, control, hooks, workers)
    engine.initialize()
    while not engine.should_stop(stop):
        engine.step()
    return engine.best, engine.finish()
