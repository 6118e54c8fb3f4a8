"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""

import json
import time
from dataclasses import replace

import numpy as np

from brkga import (Chromosome, Engine, IprConfig, IslandConfig, KnapsackDecoder,
                   MixedDecoder, MultiParentConfig, Origin, RandomControlBounds, RngStream,
                   ShakeConfig, StopCriteria, TspDecoder, crossover, default_params,
                   hamming_distance, implicit_path_relinking, kendall_tau_distance,
                   keys_to_permutation, multi_parent_crossover, run)
from brkga.advanced import NO_PAIR_ABOVE_MD
from brkga.cli import main
from brkga.engine import RESTART, SHAKE
from brkga.instances import random_knapsack, random_tsp
from brkga.params import population_counts

from helpers import evaluated_population, verdict
from oracles import best_knapsack, best_tour, hamming, kendall

# bounds for random online control used by criterion 10
CONTROL_BOUNDS = RandomControlBounds((50, 100), (0.1, 0.3), (0.1, 0.3), (0.55, 0.95))


# -- shared checkers -------------------------------------------------------------

def composition_violations(engine, rec):
    """Check the last step's populations against the elite/mutant/offspring split."""
    if RESTART in rec.events:
        return sum(any(Origin(o) is not Origin.RANDOM for o in p.origin)
                   or len(p) != engine.current.pop_size for p in engine.populations)
    bad = 0
    c = engine.current
    elite, mutants = population_counts(c.pop_size, c.elite_pct, c.mutant_pct)
    for parent, child in zip(engine.parents, engine.evolved):
        kinds = {0: [], 1: [], 2: []}
        for row, lin in enumerate(child.lineage):
            kinds[min(len(lin), 2)].append(row)
        bad += len(child) != c.pop_size
        bad += len(kinds[1]) != elite or len(kinds[0]) != mutants
        bad += len(kinds[2]) != c.pop_size - elite - mutants
        for row in kinds[1]:
            src = child.lineage[row][0]
            bad += src >= elite
            bad += not np.array_equal(child.keys[row], parent.keys[src])
            bad += child.fitness[row] != parent.fitness[src]
        for row in kinds[0]:
            bad += Origin(child.origin[row]) is not Origin.MUTANT
            bad += bool(np.any(np.all(parent.keys == child.keys[row], axis=1)))
        for row in kinds[2]:
            bad += Origin(child.origin[row]) is not Origin.OFFSPRING
    return bad


def monotonicity_violations(records):
    """Population best within each restart/shake epoch and f* over the whole run."""
    bad = 0
    for prev, cur in zip(records, records[1:]):
        new_epoch = RESTART in cur.events or SHAKE in cur.events
        if not new_epoch and cur.population_best > prev.population_best:
            bad += 1
        if cur.best_fitness > prev.best_fitness:
            bad += 1
    return bad


def _mixed_decoder():
    def cost(segs):
        order, picks = segs[0].value, segs[1].value
        return float(sum(abs(a - b) for a, b in zip(order, order[1:])) + sum(picks))
    return MixedDecoder([(6, "permutation"), (4, "indicator", 3)], cost)


def _configs():
    tsp = TspDecoder(random_tsp(20, seed=1))
    knap = KnapsackDecoder(random_knapsack(20, seed=2))
    base_t, base_k = default_params(20), default_params(20)
    return [
        ("brkga-tsp", base_t, tsp),
        ("rkga-tsp", replace(base_t, variant="RKGA", rho=0.5), tsp),
        ("mp-knapsack", replace(base_k, variant="BRKGA-MP",
                                multi_parent=MultiParentConfig(3, 2, "logInverse")), knap),
        ("islands", replace(base_t, islands=IslandConfig(3, 10, 2)), tsp),
        ("shake-restart", replace(base_t, shake=ShakeConfig(8, 0.1, 0.4), restart_iters=30), tsp),
        ("ipr-islands", replace(base_t, islands=IslandConfig(2, 15, 1),
                                ipr=IprConfig(md=0.1, iters=10, ps=0.5)), tsp),
        ("restart-knapsack", replace(base_k, restart_iters=20), knap),
        ("tiny-pop", replace(base_t, pop_size=10, elite_pct=0.3, mutant_pct=0.2), tsp),
        ("mixed", default_params(10), _mixed_decoder()),
        ("mp-ipr-shake", replace(base_t, variant="BRKGA-MP",
                                 multi_parent=MultiParentConfig(4, 2, "exponential"),
                                 shake=ShakeConfig(12, 0.2, 0.5),
                                 ipr=IprConfig(md=0.1, iters=7, bs=2)), tsp),
    ]


def _checked_run(params, decoder, seed, generations, control=None):
    engine = Engine(params, decoder, seed, control=control)
    engine.initialize()
    bad = 0
    for _ in range(generations):
        bad += composition_violations(engine, engine.step())
    return engine, bad


# -- criteria --------------------------------------------------------------------

def test_criterion_01_composition():
    t0 = time.perf_counter()
    bad = 0
    for seed, (_, params, dec) in enumerate(_configs()):
        _, v = _checked_run(params, dec, seed, 200)
        bad += v
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 10
    assert verdict(1, "composition invariant", ok,
                   f"10 configs x 200 generations, {bad} violations, {elapsed:.1f}s < 10s")


def test_criterion_02_monotonicity():
    bad = 0
    restarts = 0
    for seed, (_, params, dec) in enumerate(_configs()):
        engine, _ = _checked_run(params, dec, seed, 200)
        bad += monotonicity_violations(engine.trace.records)
        restarts += sum(RESTART in r.events for r in engine.trace.records)
    assert verdict(2, "elitism and f* monotonicity", bad == 0,
                   f"{bad} violations, {restarts} restarts crossed")


def test_criterion_03_brkga_beats_rkga():
    t0 = time.perf_counter()
    dec = TspDecoder(random_tsp(50, seed=2024))
    base = replace(default_params(50), pop_size=100, elite_pct=0.2, mutant_pct=0.15)
    stop = StopCriteria(max_generations=500)
    brkga, rkga = [], []
    for seed in range(20):
        brkga.append(run(replace(base, rho=0.7), dec, stop, seed)[0].f_star)
        rkga.append(run(replace(base, variant="RKGA", rho=0.5), dec, stop, seed)[0].f_star)
    elapsed = time.perf_counter() - t0
    wins = sum(b < r for b, r in zip(brkga, rkga))
    ok = np.median(brkga) <= np.median(rkga) and wins >= 13 and elapsed < 60
    assert verdict(3, "BRKGA dominates RKGA", ok,
                   f"median {np.median(brkga):.2f} vs {np.median(rkga):.2f}, "
                   f"wins {wins}/20 >= 13, {elapsed:.1f}s < 60s")


def test_criterion_04_small_instance_optimality():
    t0 = time.perf_counter()
    tsp = random_tsp(7, seed=7)
    knap = random_knapsack(12, seed=12)
    problems = [("tsp7", TspDecoder(tsp), best_tour(tsp.cities.tolist())),
                ("knapsack12", KnapsackDecoder(knap),
                 best_knapsack(knap.weights.tolist(), knap.values.tolist(), knap.capacity))]
    hits = {}
    for name, dec, opt in problems:
        stop = StopCriteria(max_generations=2000, target_value=opt + 1e-9 * abs(opt))
        hits[name] = sum(abs(run(default_params(dec.n), dec, stop, seed)[0].f_star - opt)
                         <= 1e-9 * abs(opt) for seed in range(100))
    elapsed = time.perf_counter() - t0
    ok = all(h >= 90 for h in hits.values()) and elapsed < 120
    assert verdict(4, "small-instance optimality", ok,
                   ", ".join(f"{k} {v}/100" for k, v in hits.items()) + f", {elapsed:.1f}s < 120s")


def test_criterion_05_crossover_statistics():
    n = 10 ** 5
    child = crossover(np.zeros(n), np.full(n, 0.5), 0.7, RngStream(5))
    rho_freq = float(np.mean(child.keys == 0.0))
    parents = [Chromosome(np.full(n, v)) for v in (0.1, 0.2, 0.3)]
    mp = multi_parent_crossover(parents, MultiParentConfig(3, 2, "exponential"), RngStream(6))
    freq = np.array([np.mean(mp.keys == v) for v in (0.1, 0.2, 0.3)])
    w = np.exp(-np.arange(1.0, 4.0))
    err = float(np.max(np.abs(freq - w / w.sum())))
    ok = abs(rho_freq - 0.7) <= 0.005 and err <= 0.01
    assert verdict(5, "crossover inheritance frequencies", ok,
                   f"rho {rho_freq:.4f}, multi-parent max error {err:.4f}")


def test_criterion_06_distance_oracles():
    rng = np.random.default_rng(6)
    mismatches = 0
    for _ in range(1000):
        m = int(rng.integers(2, 13))
        a, b = rng.random((2, m))
        mismatches += hamming_distance(a, b) != hamming(a, b)
        mismatches += kendall_tau_distance(a, b) != kendall(a, b)
    axiom_failures = 0
    for _ in range(1000):
        m = int(rng.integers(2, 13))
        a, b, c = rng.random((3, m))
        if rng.random() < 0.2:
            b = a.copy()  # exercise the zero-distance case too
        for dist, same in ((hamming_distance, lambda x, y: np.array_equal(x >= 0.5, y >= 0.5)),
                           (kendall_tau_distance, lambda x, y: np.array_equal(
                               keys_to_permutation(x), keys_to_permutation(y)))):
            ab, ba, ac, bc = dist(a, b), dist(b, a), dist(a, c), dist(b, c)
            axiom_failures += ab != ba
            axiom_failures += (ab == 0) != same(a, b)
            axiom_failures += ac > ab + bc + 1e-12
            axiom_failures += not 0 <= ab <= 1
    ok = mismatches == 0 and axiom_failures == 0
    assert verdict(6, "distance oracles and metric axioms", ok,
                   f"{mismatches} oracle mismatches, {axiom_failures} axiom failures")


def test_criterion_07_ipr_invariants():
    problems = [TspDecoder(random_tsp(10, seed=70)), KnapsackDecoder(random_knapsack(14, seed=71))]
    walk_bad = md_bad = result_bad = applied = 0
    for seed in range(100):
        dec = problems[seed % 2]
        a = evaluated_population(dec, 16, 2 * seed, 4)
        b = evaluated_population(dec, 16, 2 * seed + 1, 4)
        cfg = IprConfig(sel="randomElite" if seed % 3 == 0 else "bestSolution",
                        cp=1.0, md=0.1, bs=1 + seed % 3, ps=1.0 if seed % 2 else 0.6)
        res = implicit_path_relinking(a, b, cfg, dec, RngStream(seed))
        if res.reason != NO_PAIR_ABOVE_MD:
            ds = [res.initial_distance] + [s.distance for s in res.steps]
            walk_bad += sum(y > x for x, y in zip(ds, ds[1:]))
        if res.applied:
            applied += 1
            f = res.chromosome.fitness
            result_bad += not (f < res.base.fitness and f < res.guide.fitness)
            result_bad += f != dec.decode(res.chromosome.keys)[1]
        # md above the largest achievable distance must always be refused
        far = replace(cfg, md=1.0 + 1e-9)
        md_bad += implicit_path_relinking(a, b, far, dec, RngStream(seed)).reason != NO_PAIR_ABOVE_MD
    ok = walk_bad == 0 and md_bad == 0 and result_bad == 0
    assert verdict(7, "path-relinking invariants", ok,
                   f"{walk_bad} distance increases, {md_bad} md misses, "
                   f"{result_bad} bad results, {applied}/100 applied")


def test_criterion_08_warm_start_round_trip():
    rng = np.random.default_rng(8)
    tsp = TspDecoder(random_tsp(15, seed=80))
    knap_inst = random_knapsack(15, seed=81)
    knap = KnapsackDecoder(knap_inst)
    trip_bad = 0
    for _ in range(100):
        tour = rng.permutation(15).tolist()
        trip_bad += tsp.decode(tsp.encode(tour).keys)[0] != tour
        chosen = []
        for i in rng.permutation(15):
            if rng.random() < 0.6 and knap_inst.weights[chosen + [i]].sum() <= knap_inst.capacity:
                chosen.append(int(i))
        trip_bad += knap.decode(knap.encode(chosen).keys)[0] != sorted(chosen)
    inject_bad = 0
    for dec, solution in ((tsp, list(range(15))), (knap, [0])):
        warm = dec.encode(solution)
        fit = dec.decode(warm.keys)[1]
        engine = Engine(default_params(15), dec, seed=3, warm_starts=[warm])
        engine.initialize()
        pop = engine.populations[0]
        rows = np.flatnonzero(np.all(pop.keys == warm.keys, axis=1))
        inject_bad += rows.size == 0 or Origin(pop.origin[rows[0]]) is not Origin.WARMSTART
        for _ in range(100):
            engine.step()
        inject_bad += sum(r.best_fitness > fit for r in engine.trace.records)
    ok = trip_bad == 0 and inject_bad == 0
    assert verdict(8, "warm-start round trip and injection", ok,
                   f"{trip_bad} round-trip failures, {inject_bad} injection failures")


def _strip_time(path):
    lines = path.read_text().splitlines()
    col = lines[0].split(",").index("elapsed_seconds")
    return [",".join(f for j, f in enumerate(line.split(",")) if j != col) for line in lines]


def test_criterion_09_determinism(tmp_path):
    cfg = tmp_path / "params.txt"
    cfg.write_text("p = 2\ng = 20\ni = 2\nshake_iters = 15\nipr_iters = 10\nipr_md = 0.1\n"
                   "restart_iters = 60\n")
    args = ["solve", "--random-tsp", "25", "--instance-seed", "9", "--config", str(cfg),
            "--seed", "123", "--max-generations", "200"]
    codes = [main(args + ["--out-dir", str(tmp_path / d)]) for d in ("a", "b")]
    same_trace = _strip_time(tmp_path / "a" / "trace.csv") == _strip_time(tmp_path / "b" / "trace.csv")
    summaries = [json.loads((tmp_path / d / "summary.jsonl").read_text()) for d in ("a", "b")]
    for s in summaries:
        s.pop("wall_seconds")
    ok = codes == [0, 0] and same_trace and summaries[0] == summaries[1]
    assert verdict(9, "byte-identical solve traces", ok,
                   f"exit codes {codes}, traces identical={same_trace}")


def test_criterion_10_online_control(tmp_path):
    b = CONTROL_BOUNDS
    args = ["control", "--random-tsp", "30", "--instance-seed", "10", "--seed", "10",
            "--max-generations", "1000", "--out-dir", str(tmp_path),
            "--pop-size-bounds", *map(str, b.pop_size), "--elite-bounds", *map(str, b.elite_pct),
            "--mutant-bounds", *map(str, b.mutant_pct), "--rho-bounds", *map(str, b.rho)]
    code = main(args)
    rows = (tmp_path / "trace.csv").read_text().splitlines()[1:]
    header = (tmp_path / "trace.csv").read_text().splitlines()[0].split(",")
    out_of_bounds = 0
    for row in rows:
        rec = dict(zip(header, row.split(",")))
        for name, (lo, hi) in (("pop_size", b.pop_size), ("elite_pct", b.elite_pct),
                               ("mutant_pct", b.mutant_pct), ("rho", b.rho)):
            out_of_bounds += not lo <= float(rec[name]) <= hi
    # the same run replayed in-process so the population split can be inspected
    dec = TspDecoder(random_tsp(30, seed=10))
    engine, comp_bad = _checked_run(default_params(30), dec, 10, 1000, control=b)
    mono_bad = monotonicity_violations(engine.trace.records)
    f_file = [float(dict(zip(header, r.split(",")))["best_fitness"]) for r in rows]
    replay_same = f_file == [r.best_fitness for r in engine.trace.records]
    ok = code == 0 and len(rows) == 1001 and out_of_bounds == 0 and comp_bad == 0 \
        and mono_bad == 0 and replay_same
    assert verdict(10, "online parameter control", ok,
                   f"{len(rows)} rows, {out_of_bounds} out of bounds, {comp_bad} composition and "
                   f"{mono_bad} monotonicity violations, replay matches={replay_same}")
