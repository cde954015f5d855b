"""Compute aggregations over a run log."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Generic, Hashable, Iterable, Iterator, Mapping, Sequence, TypeVar

import numpy as np

from .domain import (
    FAILED_SECTOR,
    MODULE_PHASE_KEYS,
    ComputeQuantity,
    ModuleKind,
    ModulePhase,
    ResearchPhaseKind,
    RunPhaseKind,
    TrainingPhaseKind,
)
from .logs import RunLog, RunRecord, run_compute

K = TypeVar("K", bound=Hashable)


def key_label(key: object) -> str:
    if isinstance(key, ModulePhase):
        return key.label
    if hasattr(key, "value"):
        return str(key.value)
    return str(key)


@dataclass(frozen=True)
class Distribution(Generic[K]):
    """Compute per category, in insertion order. ``counts`` is optional."""

    values: Mapping[K, ComputeQuantity]
    counts: Mapping[K, int] | None = None
    diagnostics: tuple[str, ...] = ()

    def __getitem__(self, key: K) -> ComputeQuantity:
        return self.values[key]

    def keys(self) -> list[K]:
        return list(self.values)

    def total(self) -> ComputeQuantity:
        return ComputeQuantity.total(self.values.values())

    def share(self, key: K) -> float:
        """Fraction of the total in ``key``, 0 when the total is 0."""
        t = self.total().gpu_hours
        return self.values[key].gpu_hours / t if t > 0 else 0.0

    def count_total(self) -> int:
        return sum(self.counts.values()) if self.counts else 0

    def is_empty(self) -> bool:
        return not self.values


def _accumulate(pairs: Iterable[tuple[K, float]], keys: Sequence[K] = ()) -> tuple[dict[K, list[float]], dict[K, int]]:
    parts: dict[K, list[float]] = {k: [] for k in keys}
    counts: dict[K, int] = {k: 0 for k in keys}
    for k, v in pairs:
        parts.setdefault(k, []).append(v)
        counts[k] = counts.get(k, 0) + 1
    return parts, counts


def _distribution(parts: Mapping[K, list[float]], counts: Mapping[K, int] | None = None,
                  diagnostics: Iterable[str] = ()) -> Distribution[K]:
    values = {k: ComputeQuantity(math.fsum(v)) for k, v in parts.items()}
    return Distribution(values, dict(counts) if counts is not None else None, tuple(diagnostics))


def _eligible(log: RunLog, include_llm: bool) -> list[RunRecord]:
    if include_llm:
        return list(log.runs)
    return [r for r in log.runs if r.module is not ModuleKind.LLM_BACKBONE]


def sector_key(r: RunRecord) -> ModulePhase:
    """Failed runs pool into one sector whatever their module."""
    if r.research_phase is ResearchPhaseKind.FAILED:
        return FAILED_SECTOR
    return ModulePhase(r.module, r.training_phase)


def by_run_phase(log: RunLog, include_llm: bool = False) -> Distribution[RunPhaseKind]:
    parts: dict[RunPhaseKind, list[float]] = {k: [] for k in RunPhaseKind}
    for r in _eligible(log, include_llm):
        c = run_compute(r).gpu_hours
        for k in RunPhaseKind:
            parts[k].append(c * r.phase_fractions[k])
    return _distribution(parts)


def by_research_phase(log: RunLog, include_llm: bool = True) -> Distribution[ResearchPhaseKind]:
    parts, counts = _accumulate(
        ((r.research_phase, run_compute(r).gpu_hours) for r in _eligible(log, include_llm)),
        keys=list(ResearchPhaseKind),
    )
    return _distribution(parts, counts)


def by_module_phase(log: RunLog) -> Distribution[ModulePhase]:
    parts, counts = _accumulate(
        ((sector_key(r), run_compute(r).gpu_hours) for r in log.runs),
        keys=list(MODULE_PHASE_KEYS) + [FAILED_SECTOR],
    )
    return _distribution(parts, counts)


def _finals(log: RunLog) -> list[RunRecord]:
    return [r for r in log.runs if r.research_phase is ResearchPhaseKind.FINAL_TRAINING]


def final_breakdown(log: RunLog) -> Distribution[ModulePhase]:
    """Final-run compute per (module, phase). Keys without finals are omitted."""
    parts, counts = _accumulate((sector_key(r), run_compute(r).gpu_hours) for r in _finals(log))
    order = {k: i for i, k in enumerate(MODULE_PHASE_KEYS)}
    keys = sorted(parts, key=lambda k: order[k])
    return _distribution({k: parts[k] for k in keys}, {k: counts[k] for k in keys})


@dataclass(frozen=True)
class RatioTable:
    """Percentages keyed by (module, phase), plus notes on excluded keys."""

    ratios: Mapping[ModulePhase, float]
    diagnostics: tuple[str, ...] = ()


def final_to_total_ratios(log: RunLog) -> RatioTable:
    finals = final_breakdown(log)
    totals = by_module_phase(log)
    ratios: dict[ModulePhase, float] = {}
    diags: list[str] = []
    for key, final in finals.values.items():
        denom = totals.values[key].gpu_hours
        if denom <= 0.0:
            diags.append(f"{key.label}: total compute is zero, ratio undefined")
            continue
        ratios[key] = 100.0 * final.gpu_hours / denom
    return RatioTable(ratios, tuple(diags))


DEFAULT_THRESHOLDS = (1.0, 24.0, 168.0, 730.0, 8760.0, 26280.0, 43800.0, 87600.0)
DEFAULT_LABELS = ("<1 hour", "<1 day", "<1 week", "<1 month", "<1 year", "<3 years", "<5 years", "5-10 years")


@dataclass(frozen=True)
class IntensityBuckets:
    """Bucket ``i`` is ``[thresholds[i-1], thresholds[i])`` with an implicit 0 lower bound.

    The last threshold is a cap. Runs at or above it land in the last
    bucket and raise a diagnostic.
    """

    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self) -> None:
        t = tuple(float(x) for x in self.thresholds)
        object.__setattr__(self, "thresholds", t)
        if not t:
            raise ValueError("at least one threshold is required")
        if t[0] <= 0 or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be positive and strictly increasing")
        labels = tuple(self.labels) if self.labels is not None else ()
        if labels == DEFAULT_LABELS and t != DEFAULT_THRESHOLDS or not labels:
            labels = tuple(f"[{_fmt(lo)}, {_fmt(hi)}) GPU-h" for lo, hi in zip((0.0,) + t[:-1], t))
        if len(labels) != len(t):
            raise ValueError("need exactly one label per threshold")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_thresholds(cls, thresholds: Iterable[float]) -> IntensityBuckets:
        return cls(tuple(thresholds), ())

    def bounds(self) -> list[tuple[float, float]]:
        return list(zip((0.0,) + self.thresholds[:-1], self.thresholds))

    def index(self, gpu_hours: float) -> int:
        for i, hi in enumerate(self.thresholds):
            if gpu_hours < hi:
                return i
        return len(self.thresholds) - 1


def _fmt(x: float) -> str:
    return f"{x:g}"


def intensity_histogram(log: RunLog, buckets: IntensityBuckets | None = None,
                        include_llm: bool = False) -> Distribution[str]:
    buckets = buckets or IntensityBuckets()
    return _histogram(_eligible(log, include_llm), buckets)


def _histogram(runs: Iterable[RunRecord], buckets: IntensityBuckets) -> Distribution[str]:
    parts: dict[str, list[float]] = {label: [] for label in buckets.labels}
    counts = {label: 0 for label in buckets.labels}
    diags: list[str] = []
    cap = buckets.thresholds[-1]
    for r in runs:
        c = run_compute(r).gpu_hours
        label = buckets.labels[buckets.index(c)]
        if c >= cap:
            diags.append(f"{r.run_id}: {c:.6g} GPU-h exceeds top threshold {cap:g}, counted in {label!r}")
        parts[label].append(c)
        counts[label] += 1
    return _distribution(parts, counts, diags)


def intensity_by_training_phase(
    log: RunLog,
    buckets: IntensityBuckets | None = None,
    module: ModuleKind = ModuleKind.MAIN_MODEL,
    phases: Sequence[TrainingPhaseKind] = (
        TrainingPhaseKind.PRE_TRAINING,
        TrainingPhaseKind.POST_TRAINING,
        TrainingPhaseKind.FINE_TUNING,
    ),
    include_failed: bool = False,
) -> dict[TrainingPhaseKind, Distribution[str]]:
    """Histogram per training phase of one module. Failed runs are left out by default."""
    buckets = buckets or IntensityBuckets()
    out: dict[TrainingPhaseKind, Distribution[str]] = {}
    for phase in phases:
        runs = [
            r for r in log.runs
            if r.module is module and r.training_phase is phase
            and (include_failed or r.research_phase is not ResearchPhaseKind.FAILED)
        ]
        out[phase] = _histogram(runs, buckets)
    return out


@dataclass(frozen=True)
class Concentration:
    threshold_gpu_hours: float
    run_share: float
    compute_share: float


def heavy_run_concentration(log: RunLog, threshold: float = 730.0, include_llm: bool = False) -> Concentration:
    """Share of runs at or above ``threshold`` and the share of compute they carry."""
    runs = _eligible(log, include_llm)
    comps = [run_compute(r).gpu_hours for r in runs]
    heavy = [c for c in comps if c >= threshold]
    total = math.fsum(comps)
    return Concentration(
        threshold,
        len(heavy) / len(comps) if comps else 0.0,
        math.fsum(heavy) / total if total > 0 else 0.0,
    )


def share_at_or_above(dist: Distribution[str], buckets: IntensityBuckets, threshold: float) -> float:
    """Compute share of buckets whose lower bound is at least ``threshold``."""
    total = dist.total().gpu_hours
    if total <= 0:
        return 0.0
    picked = [dist.values[label].gpu_hours for label, (lo, _) in zip(buckets.labels, buckets.bounds()) if lo >= threshold]
    return math.fsum(picked) / total


@dataclass(frozen=True)
class TimelineSample:
    timestamp: datetime
    gpus_in_use: int
    concurrent_runs: int
    cumulative: Mapping[ModulePhase, ComputeQuantity]


@dataclass(frozen=True)
class TimelineSeries:
    """Columnar time series on a regular grid starting at ``start``."""

    start: datetime
    sample_interval: timedelta
    gpus_in_use: tuple[int, ...]
    concurrent_runs: tuple[int, ...]
    cumulative: Mapping[ModulePhase, tuple[float, ...]]
    gpus_smoothed: tuple[float, ...]
    runs_smoothed: tuple[float, ...]
    smooth_window: int = 100

    def __len__(self) -> int:
        return len(self.gpus_in_use)

    @property
    def timestamps(self) -> list[datetime]:
        return [self.start + i * self.sample_interval for i in range(len(self))]

    def samples(self) -> Iterator[TimelineSample]:
        for i, ts in enumerate(self.timestamps):
            yield TimelineSample(
                ts,
                self.gpus_in_use[i],
                self.concurrent_runs[i],
                {k: ComputeQuantity(v[i]) for k, v in self.cumulative.items()},
            )

    def integral_gpu_hours(self) -> float:
        """Riemann sum of GPUs in use over the sample grid."""
        hours = self.sample_interval.total_seconds() / 3600.0
        return float(sum(self.gpus_in_use)) * hours

    def peak_gpus(self) -> int:
        return max(self.gpus_in_use, default=0)


def trailing_mean(x: Sequence[float], window: int) -> np.ndarray:
    """Causal moving average; the first samples average over what is available."""
    if window < 1:
        raise ValueError("smoothing window must be at least 1")
    arr = np.asarray(x, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(arr)))
    idx = np.arange(1, len(arr) + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def timeline(log: RunLog, interval: timedelta = timedelta(minutes=30), smooth_window: int = 100,
             include_llm: bool = False) -> TimelineSeries:
    """Sample cluster usage every ``interval`` from the earliest start.

    A run is active at instant t when start <= t < end. Cumulative compute
    is the exact overlap of each run with [grid start, t], so the last
    sample equals the per-sector totals.
    """
    runs = _eligible(log, include_llm)
    if not runs:
        raise ValueError("timeline needs at least one run")
    step = int(interval.total_seconds())
    if step <= 0 or interval.total_seconds() != step:
        raise ValueError("sample interval must be a positive whole number of seconds")
    t0 = min(r.start for r in runs)
    starts = np.array([int((r.start - t0).total_seconds()) for r in runs], dtype=np.int64)
    ends = np.array([int((r.end - t0).total_seconds()) for r in runs], dtype=np.int64)
    ends = np.maximum(ends, starts)
    gpus = np.array([r.gpus for r in runs], dtype=np.int64)
    last = int(ends.max())
    n = -(-last // step) + 1  # first sample at or after the latest end is included
    # first sample index with t_k >= x is ceil(x / step)
    a = -(-starts // step)
    b = -(-ends // step)
    diff_g = np.zeros(n + 1, dtype=np.int64)
    diff_r = np.zeros(n + 1, dtype=np.int64)
    np.add.at(diff_g, a, gpus)
    np.add.at(diff_g, b, -gpus)
    live = b > a
    np.add.at(diff_r, a[live], 1)
    np.add.at(diff_r, b[live], -1)
    g_series = np.cumsum(diff_g)[:n]
    r_series = np.cumsum(diff_r)[:n]

    t = np.arange(n, dtype=np.int64) * step
    keys = np.array([sector_key(r).label for r in runs])
    cumulative: dict[ModulePhase, tuple[float, ...]] = {}
    for key in list(MODULE_PHASE_KEYS) + [FAILED_SECTOR]:
        mask = keys == key.label
        if not include_llm and key.module is ModuleKind.LLM_BACKBONE:
            continue
        cumulative[key] = tuple((_overlap_gpu_seconds(starts[mask], ends[mask], gpus[mask], t) / 3600.0).tolist())

    return TimelineSeries(
        start=t0,
        sample_interval=timedelta(seconds=step),
        gpus_in_use=tuple(int(v) for v in g_series),
        concurrent_runs=tuple(int(v) for v in r_series),
        cumulative=cumulative,
        gpus_smoothed=tuple(trailing_mean(g_series, smooth_window).tolist()),
        runs_smoothed=tuple(trailing_mean(r_series, smooth_window).tolist()),
        smooth_window=smooth_window,
    )


def _overlap_gpu_seconds(starts: np.ndarray, ends: np.ndarray, gpus: np.ndarray, t: np.ndarray) -> np.ndarray:
    """sum_r g_r * clip(t - s_r, 0, e_r - s_r) for every t, in exact integers."""
    if starts.size == 0:
        return np.zeros(t.shape, dtype=float)

    def ramp(points: np.ndarray) -> np.ndarray:
        order = np.argsort(points, kind="stable")
        p, g = points[order], gpus[order]
        cg = np.concatenate(([0], np.cumsum(g)))
        cgp = np.concatenate(([0], np.cumsum(g * p)))
        j = np.searchsorted(p, t, side="right")
        return cg[j] * t - cgp[j]

    return (ramp(starts) - ramp(ends)).astype(float)


@dataclass(frozen=True)
class FlowNode:
    id: str
    label: str
    layer: int


@dataclass(frozen=True)
class FlowEdge:
    source: str
    target: str
    weight: ComputeQuantity


@dataclass(frozen=True)
class FlowGraph:
    nodes: tuple[FlowNode, ...] = ()
    edges: tuple[FlowEdge, ...] = ()

    def inflow(self, node_id: str) -> float:
        return math.fsum(e.weight.gpu_hours for e in self.edges if e.target == node_id)

    def outflow(self, node_id: str) -> float:
        return math.fsum(e.weight.gpu_hours for e in self.edges if e.source == node_id)

    def edge(self, source: str, target: str) -> FlowEdge:
        for e in self.edges:
            if e.source == source and e.target == target:
                return e
        raise KeyError((source, target))

    def internal_nodes(self) -> list[str]:
        sources = {e.source for e in self.edges}
        targets = {e.target for e in self.edges}
        return [n.id for n in self.nodes if n.id in sources and n.id in targets]

    def conservation_errors(self, rel: float = 1e-9) -> list[str]:
        errs = []
        for nid in self.internal_nodes():
            i, o = self.inflow(nid), self.outflow(nid)
            if abs(i - o) > rel * max(abs(i), abs(o), 1e-300):
                errs.append(f"{nid}: in {i!r} != out {o!r}")
        return errs


FINAL_NODE = "final"
NON_FINAL_NODE = "non_final"
TOTAL_NODE = "total"


def sankey_flows(log: RunLog) -> FlowGraph:
    """total -> sectors (modules + failed) -> training phases -> final / non-final.

    Failed compute stops at its sector. Every phase forks into the final
    sink (final-run compute) and the non-final sink (the rest).
    """
    if not log.runs:
        return FlowGraph()
    final_parts: dict[ModulePhase, list[float]] = defaultdict(list)
    rest_parts: dict[ModulePhase, list[float]] = defaultdict(list)
    failed: list[float] = []
    for r in log.runs:
        c = run_compute(r).gpu_hours
        key = sector_key(r)
        if key == FAILED_SECTOR:
            failed.append(c)
        elif r.research_phase is ResearchPhaseKind.FINAL_TRAINING:
            final_parts[key].append(c)
        else:
            rest_parts[key].append(c)

    nodes: list[FlowNode] = [FlowNode(TOTAL_NODE, "Total", 0)]
    edges: list[FlowEdge] = []
    final_edges: list[FlowEdge] = []
    rest_edges: list[FlowEdge] = []
    sector_totals: list[float] = []
    for module in ModuleKind:
        phase_edges: list[FlowEdge] = []
        for key in MODULE_PHASE_KEYS:
            if key.module is not module or key not in final_parts and key not in rest_parts:
                continue
            fin = math.fsum(final_parts.get(key, []))
            rest = math.fsum(rest_parts.get(key, []))
            nodes.append(FlowNode(key.label, key.label, 2))
            phase_edges.append(FlowEdge(module.value, key.label, ComputeQuantity(math.fsum((fin, rest)))))
            if key in final_parts:
                final_edges.append(FlowEdge(key.label, FINAL_NODE, ComputeQuantity(fin)))
            if key in rest_parts:
                rest_edges.append(FlowEdge(key.label, NON_FINAL_NODE, ComputeQuantity(rest)))
        if phase_edges:
            total = math.fsum(e.weight.gpu_hours for e in phase_edges)
            nodes.append(FlowNode(module.value, module.value, 1))
            edges.append(FlowEdge(TOTAL_NODE, module.value, ComputeQuantity(total)))
            edges.extend(phase_edges)
            sector_totals.append(total)
    if failed:
        nodes.append(FlowNode(FAILED_SECTOR.label, "failed", 1))
        edges.append(FlowEdge(TOTAL_NODE, FAILED_SECTOR.label, ComputeQuantity(math.fsum(failed))))
    if final_edges:
        nodes.append(FlowNode(FINAL_NODE, "Final", 3))
    if rest_edges:
        nodes.append(FlowNode(NON_FINAL_NODE, "Non-final", 3))
    edges.extend(final_edges)
    edges.extend(rest_edges)
    nodes.sort(key=lambda n: n.layer)
    return FlowGraph(tuple(nodes), tuple(edges))
