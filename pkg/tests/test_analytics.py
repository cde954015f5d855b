from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from computelca.analytics import (
    IntensityBuckets,
    by_module_phase,
    by_research_phase,
    by_run_phase,
    final_breakdown,
    final_to_total_ratios,
    heavy_run_concentration,
    intensity_by_training_phase,
    intensity_histogram,
    sankey_flows,
    share_at_or_above,
    timeline,
    trailing_mean,
)
from computelca.domain import (
    FAILED_SECTOR,
    ModuleKind,
    ModulePhase,
    ResearchPhaseKind,
    RunPhaseKind,
    TrainingPhaseKind,
)
from computelca.logs import RunLog, RunRecord

import golden

T = datetime(2024, 1, 1, tzinfo=timezone.utc)
M, P, R = ModuleKind, TrainingPhaseKind, ResearchPhaseKind


def run(rid, hours, gpus=1, module=M.MAIN_MODEL, phase=P.PRE_TRAINING, research=R.DESIGN_AND_TUNING,
        start_h=0.0, fractions=None):
    s = T + timedelta(hours=start_h)
    return RunRecord(rid, module, phase, research, s, s + timedelta(hours=hours), gpus, fractions)


def labels(d):
    return {k.label if isinstance(k, ModulePhase) else getattr(k, "value", k): round(v.gpu_hours)
            for k, v in d.values.items()}


# unit cases ------------------------------------------------------------------

def test_single_run_all_optimization():
    d = by_run_phase(RunLog((run("a", 10, 8),)))
    assert d[RunPhaseKind.OPTIMIZATION].gpu_hours == 80
    assert d[RunPhaseKind.EVALUATION].gpu_hours == 0


def test_run_phase_split_and_llm_exclusion():
    fr = {RunPhaseKind.OPTIMIZATION: 0.5, RunPhaseKind.EVALUATION: 0.5}
    log = RunLog((run("a", 10, 1, fractions=fr), run("b", 10, 1, M.LLM_BACKBONE, P.TRAIN)))
    d = by_run_phase(log)
    assert d[RunPhaseKind.EVALUATION].gpu_hours == 5
    assert d.total().gpu_hours == 10
    assert by_run_phase(log, include_llm=True).total().gpu_hours == 20


def test_empty_log_is_all_zero():
    empty = RunLog()
    assert all(v.gpu_hours == 0 for v in by_research_phase(empty).values.values())
    assert final_breakdown(empty).is_empty()
    assert sankey_flows(empty).edges == ()
    d = intensity_by_training_phase(empty)
    assert all(x.count_total() == 0 for x in d.values())
    with pytest.raises(ValueError):
        timeline(empty)


def test_failed_runs_pool_across_modules():
    log = RunLog((run("a", 1, research=R.FAILED), run("b", 2, module=M.TOKENIZER, phase=P.TRAIN, research=R.FAILED),
                  run("c", 4)))
    d = by_module_phase(log)
    assert d[FAILED_SECTOR].gpu_hours == 3
    assert d[ModulePhase(M.MAIN_MODEL, P.PRE_TRAINING)].gpu_hours == 4
    assert d.counts[FAILED_SECTOR] == 2


def test_final_ratios_skip_and_report_nothing_when_clean():
    log = RunLog((run("a", 1, research=R.FINAL_TRAINING), run("b", 3)))
    t = final_to_total_ratios(log)
    assert t.ratios == {ModulePhase(M.MAIN_MODEL, P.PRE_TRAINING): 25.0}
    assert t.diagnostics == ()


def test_bucket_boundaries_are_half_open():
    b = IntensityBuckets()
    assert b.index(0) == 0
    assert b.index(0.999) == 0
    assert b.index(1.0) == 1
    assert b.index(730) == 4
    assert b.index(87600) == 7


def test_run_above_cap_goes_to_top_with_diagnostic():
    d = intensity_histogram(RunLog((run("big", 100_000, 1),)))
    assert d.counts["5-10 years"] == 1
    assert len(d.diagnostics) == 1 and "big" in d.diagnostics[0]


def test_custom_buckets():
    b = IntensityBuckets.from_thresholds([10, 100])
    assert b.labels == ("[0, 10) GPU-h", "[10, 100) GPU-h")
    d = intensity_histogram(RunLog((run("a", 5), run("b", 50), run("c", 10))), b)
    assert list(d.counts.values()) == [1, 2]
    with pytest.raises(ValueError):
        IntensityBuckets.from_thresholds([5, 5])
    with pytest.raises(ValueError):
        IntensityBuckets.from_thresholds([])


def test_timeline_single_run():
    ts = timeline(RunLog((run("a", 10, 8),)))
    assert ts.gpus_in_use[:20] == (8,) * 20
    assert ts.gpus_in_use[20] == 0
    assert ts.cumulative[ModulePhase(M.MAIN_MODEL, P.PRE_TRAINING)][-1] == 80.0
    assert ts.integral_gpu_hours() == 80.0
    steps = [b - a for a, b in zip(ts.timestamps, ts.timestamps[1:])]
    assert set(steps) == {timedelta(minutes=30)}


def test_timeline_smoothing_is_trailing_mean():
    assert list(trailing_mean([2, 4, 6, 8], 2)) == [2, 3, 5, 7]
    with pytest.raises(ValueError):
        trailing_mean([1], 0)


def test_sankey_small():
    log = RunLog((run("a", 1, research=R.FINAL_TRAINING), run("b", 3), run("c", 2, research=R.FAILED)))
    g = sankey_flows(log)
    assert g.edge("total", "main_model").weight.gpu_hours == 4
    assert g.edge("main_model", "main_model/pre").weight.gpu_hours == 4
    assert g.edge("main_model/pre", "final").weight.gpu_hours == 1
    assert g.edge("main_model/pre", "non_final").weight.gpu_hours == 3
    assert g.edge("total", "failed").weight.gpu_hours == 2
    assert g.conservation_errors() == []


# fixture goldens -------------------------------------------------------------

def test_fixture_run_phase(fixture_log):
    assert labels(by_run_phase(fixture_log)) == golden.RUN_PHASE
    d = by_run_phase(fixture_log)
    assert round(100 * d.share(RunPhaseKind.VALIDATION), 1) == 2.8
    assert round(100 * (d.share(RunPhaseKind.EVALUATION) + d.share(RunPhaseKind.SAMPLE_GENERATION)), 1) == 7.2
    assert round(100 * d.share(RunPhaseKind.OPTIMIZATION)) == 90


def test_fixture_research_phase(full_log):
    d = by_research_phase(full_log)
    assert labels(d) == golden.RESEARCH_PHASE
    assert d.share(R.FINAL_TRAINING) < 0.04


def test_fixture_module_phase(full_log):
    d = by_module_phase(full_log)
    assert labels(d) == golden.MODULE_PHASE
    assert round(d.total().gpu_hours) == 3_256_262
    assert round(d.total().gpu_years, 1) == 371.7
    main = sum(v.gpu_hours for k, v in d.values.items() if k.module is M.MAIN_MODEL)
    assert round(100 * main / d.total().gpu_hours) == 60


def test_fixture_finals(full_log):
    d = final_breakdown(full_log)
    assert labels(d) == golden.FINAL
    assert round(d.total().gpu_hours) == 120_186
    assert round(100 * d.share(ModulePhase(M.LLM_BACKBONE, P.TRAIN))) == 57
    ratios = {k.label: f"{v:.1f}" for k, v in final_to_total_ratios(full_log).ratios.items()}
    assert ratios == golden.FINAL_RATIOS


def test_fixture_intensity(fixture_log):
    d = intensity_histogram(fixture_log)
    counts = list(d.counts.values())
    assert counts[:6] + [counts[6] + counts[7]] == golden.BUCKET_COUNTS_MERGED
    sums = [round(v.gpu_hours) for v in d.values.values()]
    assert [sums[0] + sums[1]] + sums[2:] == golden.BUCKET_COMPUTE[1:]
    assert round(d.total().gpu_hours) == golden.NON_LLM_TOTAL
    assert round(d.total().gpu_years, 1) == 321.5
    assert d.diagnostics == ()
    c = heavy_run_concentration(fixture_log)
    assert (round(100 * c.run_share), round(100 * c.compute_share)) == (13, 89)
    assert round(100 * share_at_or_above(d, IntensityBuckets(), 730)) == 89


def test_fixture_intensity_by_phase(fixture_log):
    d = intensity_by_training_phase(fixture_log)
    pre, ft = d[P.PRE_TRAINING], d[P.FINE_TUNING]
    top = "5-10 years"
    huge = [r for r in fixture_log.runs if r.duration_seconds * r.gpus >= 43800 * 3600]
    assert huge and all(r.module is M.MAIN_MODEL and r.training_phase is P.PRE_TRAINING for r in huge)
    assert round(100 * pre.share(top)) == 43
    assert all(ft.counts[k] == 0 for k in ("<1 year", "<3 years", "<5 years", top))
    assert round(100 * (ft.share("<1 day") + ft.share("<1 week"))) == 66


def test_fixture_sankey(full_log):
    g = sankey_flows(full_log)
    assert round(g.edge("main_model", "main_model/pre").weight.gpu_hours) == 1_118_440
    assert round(g.edge("main_model/pre", "final").weight.gpu_hours) == 44_558
    assert round(g.inflow("final")) == 120_186
    assert g.conservation_errors(1e-9) == []


def test_fixture_timeline(fixture_log):
    ts = timeline(fixture_log)
    mp = by_module_phase(fixture_log)
    for k, series in ts.cumulative.items():
        assert series[-1] == pytest.approx(mp[k].gpu_hours, rel=1e-12, abs=1e-9)
        assert all(b >= a for a, b in zip(series, series[1:]))
    total = mp.total().gpu_hours
    assert abs(ts.integral_gpu_hours() - total) <= 0.5 * ts.peak_gpus()
