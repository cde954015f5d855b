"""Naive per-run loops, written independently of the library, for oracle checks."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from computelca.domain import VALID_TRAINING_PHASES, ModuleKind, ResearchPhaseKind, RunPhaseKind
from computelca.logs import RunLog, RunRecord

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)
EDGES = [0, 1, 24, 168, 730, 8760, 26280, 43800, 87600]


def hours(r):
    return (r.end - r.start).total_seconds() * r.gpus / 3600.0


def sector(r):
    if r.research_phase.value == "failed":
        return "failed"
    return f"{r.module.value}/{r.training_phase.value}"


def by_run_phase(runs, include_llm=False):
    out = {k.value: 0.0 for k in RunPhaseKind}
    for r in runs:
        if r.module.value == "llm_backbone" and not include_llm:
            continue
        for k, f in r.phase_fractions.items():
            out[k.value] += hours(r) * f
    return out


def by_research_phase(runs):
    out = {k.value: 0.0 for k in ResearchPhaseKind}
    for r in runs:
        out[r.research_phase.value] += hours(r)
    return out


def by_module_phase(runs):
    out = {}
    for r in runs:
        out[sector(r)] = out.get(sector(r), 0.0) + hours(r)
    return out


def finals(runs):
    out = {}
    for r in runs:
        if r.research_phase.value == "final":
            k = f"{r.module.value}/{r.training_phase.value}"
            out[k] = out.get(k, 0.0) + hours(r)
    return out


def bucket_index(h, edges=EDGES):
    i = 0
    while i + 1 < len(edges) - 1 and h >= edges[i + 1]:
        i += 1
    return i


def histogram(runs, include_llm=False, edges=EDGES):
    counts = [0] * (len(edges) - 1)
    sums = [0.0] * (len(edges) - 1)
    for r in runs:
        if r.module.value == "llm_backbone" and not include_llm:
            continue
        i = bucket_index(hours(r), edges)
        counts[i] += 1
        sums[i] += hours(r)
    return counts, sums


def random_log(seed: int, n: int, *, max_days: float = 10.0, max_gpus: int = 64) -> RunLog:
    rng = random.Random(seed)
    modules = list(ModuleKind)
    runs = []
    for i in range(n):
        m = rng.choice(modules)
        phase = rng.choice(sorted(VALID_TRAINING_PHASES[m], key=lambda p: p.value))
        start = T0 + timedelta(seconds=rng.randrange(0, 60 * 86400))
        dur = rng.randrange(0, int(max_days * 86400)) if rng.random() < 0.9 else rng.randrange(0, 3600)
        w = [rng.random() for _ in RunPhaseKind]
        fr = {k: x / sum(w) for k, x in zip(RunPhaseKind, w)}
        runs.append(RunRecord(f"r{i}", m, phase, rng.choice(list(ResearchPhaseKind)), start,
                              start + timedelta(seconds=dur), rng.randint(1, max_gpus), fr))
    return RunLog(tuple(runs))


def seeded_cases(count: int = 500, seed: int = 20240917, max_runs: int = 1000):
    """Fixed (seed, size) pairs so suites that must be reproducible see the same logs."""
    rng = random.Random(seed)
    return [(rng.randrange(2**32), rng.randint(0, max_runs)) for _ in range(count)]


def timeline_errors(log, ts):
    """(|integral - total|, interval x peak, interval x sum of GPUs over runs) in GPU-hours."""
    runs = [r for r in log.runs if r.module.value != "llm_backbone"]
    t = sum(hours(r) for r in runs)
    step = ts.sample_interval.total_seconds() / 3600
    return abs(ts.integral_gpu_hours() - t), step * ts.peak_gpus(), step * sum(r.gpus for r in runs)
