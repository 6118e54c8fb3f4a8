"""Single runs with trace files and multi-variant, multi-seed comparisons."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .engine import GenerationRecord, RunTrace, StopCriteria, run
from .params import BRKGA_MP, VARIANTS, BrkgaParams, MultiParentConfig, RandomControlBounds

TRACE_COLUMNS = ("generation", "best_fitness", "population_best", "median_fitness",
                 "diversity", "pop_size", "elite_pct", "mutant_pct", "rho",
                 "elapsed_seconds", "events")
TIMING_COLUMNS = ("elapsed_seconds",)
WORKERS_ENV = "BRKGA_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def trace_row(rec: GenerationRecord) -> list[str]:
    return [str(rec.generation), repr(rec.best_fitness), repr(rec.population_best),
            repr(rec.median_fitness), repr(rec.diversity), str(rec.pop_size),
            repr(rec.elite_pct), repr(rec.mutant_pct), repr(rec.rho),
            f"{rec.elapsed_seconds:.6f}", ";".join(rec.events)]


class TraceWriter:
    """Observer that streams generation records to a CSV file."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(TRACE_COLUMNS)

    def __call__(self, rec: GenerationRecord):
        self._csv.writerow(trace_row(rec))

    def close(self):
        self._fh.close()


def read_trace(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if hasattr(obj, "__dict__"):
        return {k: _jsonable(v) for k, v in vars(obj).items()}
    return obj


def summary_record(trace: RunTrace, variant: str | None = None) -> dict:
    fin = trace.final
    rec = {"variant": variant, "seed": fin.seed, "f_star": fin.f_star,
           "total_generations": fin.total_generations, "wall_seconds": fin.wall_seconds,
           "solution": _jsonable(fin.solution)}
    if variant is None:
        del rec["variant"]
    return rec


def solve_to_dir(params: BrkgaParams, decoder, stop: StopCriteria, seed: int, out_dir,
                 control: RandomControlBounds | None = None, warm_starts=(), stem="",
                 variant=None, workers: int = 1):
    """Run once, writing ``<stem>trace.csv`` and ``<stem>summary.jsonl`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = TraceWriter(out_dir / f"{stem}trace.csv")
    try:
        best, trace = run(params, decoder, stop, seed, hooks=[writer],
                          warm_starts=warm_starts, control=control, workers=workers)
    finally:
        writer.close()
    summary = summary_record(trace, variant)
    with open(out_dir / f"{stem}summary.jsonl", "w") as fh:
        fh.write(json.dumps(summary) + "\n")
    return best, trace, summary


# -- comparisons -------------------------------------------------------------------

def parse_variant(text: str, base: BrkgaParams) -> BrkgaParams:
    """``NAME`` or ``NAME:rho`` with NAME one of RKGA, BRKGA, BRKGA-MP."""
    name, _, rho = text.partition(":")
    if name not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}")
    params = replace(base, variant=name)
    if rho:
        params = replace(params, rho=float(rho))
    if name == BRKGA_MP and params.multi_parent is None:
        params = replace(params, multi_parent=MultiParentConfig())
    return params


@dataclass
class ExperimentPlan:
    instance: object
    variants: list[str]
    seeds: list[int]
    stop: StopCriteria
    out_dir: Path
    base: BrkgaParams
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.variants) < 2:
            raise ValueError("a comparison needs at least two variants")
        if not self.seeds:
            raise ValueError("a comparison needs at least one seed")
        self.out_dir = Path(self.out_dir)
        if not self.labels:
            self.labels = list(self.variants)
        if len(set(self.labels)) != len(self.labels):
            self.labels = [f"{i}:{v}" for i, v in enumerate(self.variants)]


def _stem(label: str, seed: int) -> str:
    safe = "".join(ch if ch.isalnum() or ch in "-." else "_" for ch in label)
    return f"{safe}__seed{seed}."


def _one_run(args):
    from .instances import decoder_for
    instance, params, stop, seed, out_dir, label = args
    _, _, summary = solve_to_dir(params, decoder_for(instance), stop, seed, out_dir,
                                 stem=_stem(label, seed), variant=label)
    return summary


def run_plan(plan: ExperimentPlan, workers: int | None = None) -> list[dict]:
    """Execute every (variant, seed) run; returns the per-run summaries in plan order."""
    runs_dir = plan.out_dir / "runs"
    jobs = []
    for variant, label in zip(plan.variants, plan.labels):
        params = parse_variant(variant, plan.base)
        for seed in plan.seeds:
            jobs.append((plan.instance, params, plan.stop, seed, runs_dir, label))
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
            summaries = list(pool.map(_one_run, jobs))
    else:
        summaries = [_one_run(j) for j in jobs]
    with open(plan.out_dir / "summaries.jsonl", "w") as fh:
        for s in summaries:
            fh.write(json.dumps(s) + "\n")
    return summaries


def sign_test(diffs) -> float:
    """Two-sided sign test p-value; zero differences are dropped."""
    diffs = np.asarray(diffs, dtype=float)
    pos = int((diffs > 0).sum())
    neg = int((diffs < 0).sum())
    if pos + neg == 0:
        return 1.0
    return float(stats.binomtest(pos, pos + neg, 0.5).pvalue)


COMPARE_COLUMNS = ("variant", "runs", "median_f_star", "q1", "q3", "iqr",
                   "wins_vs_first", "losses_vs_first", "sign_test_p")


def summarize(summaries: list[dict], labels: list[str] | None = None) -> list[dict]:
    """Per-variant statistics; every variant is paired by seed against the first one."""
    by_variant: dict[str, dict[int, float]] = {}
    for s in summaries:
        by_variant.setdefault(s["variant"], {})[s["seed"]] = s["f_star"]
    labels = labels or list(by_variant)
    ref = by_variant[labels[0]]
    rows = []
    for label in labels:
        runs = by_variant[label]
        vals = np.array([runs[k] for k in sorted(runs)])
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        common = sorted(set(runs) & set(ref))
        diffs = np.array([runs[k] - ref[k] for k in common])
        rows.append({"variant": label, "runs": len(vals), "median_f_star": float(med),
                     "q1": float(q1), "q3": float(q3), "iqr": float(q3 - q1),
                     "wins_vs_first": int((diffs < 0).sum()),
                     "losses_vs_first": int((diffs > 0).sum()),
                     "sign_test_p": sign_test(diffs)})
    return rows


def format_table(rows: list[dict]) -> str:
    lines = [",".join(COMPARE_COLUMNS)]
    for r in rows:
        lines.append(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c])
                              for c in COMPARE_COLUMNS))
    return "\n".join(lines) + "\n"


def compare(plan: ExperimentPlan, workers: int | None = None) -> list[dict]:
    summaries = run_plan(plan, workers)
    rows = summarize(summaries, plan.labels)
    (plan.out_dir / "compare.csv").write_text(format_table(rows))
    return rows
