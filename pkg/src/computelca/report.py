"""Report assembly and serialization.

A report is a set of named tables grouped in sections. Numeric columns
always carry a unit. Rendering is deterministic: keys are sorted, floats
are written with ``repr`` and nothing depends on the wall clock.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import __version__
from .analytics import (
    Distribution,
    IntensityBuckets,
    by_module_phase,
    by_research_phase,
    by_run_phase,
    final_breakdown,
    final_to_total_ratios,
    intensity_by_training_phase,
    intensity_histogram,
    key_label,
    sankey_flows,
    timeline,
)
from .assessment import Assessment, group_of
from .domain import HOURS_PER_YEAR, INDICATOR_UNITS
from .logs import RunLog
from .operational import ComponentKind
from .scenarios import LocationImpact, SweepPoint

Cell = Any  # str | int | float | None

NOT_ASSESSED = "not assessed"
FORMATS = ("json", "csv", "plotdata")


def display(value: float, sig: int = 3) -> str:
    """Scientific notation with ``sig`` significant figures, half-up, e.g. ``3.19e5``."""
    if value == 0:
        return "0"
    if not math.isfinite(value):
        return repr(value)
    d = Decimal(value)
    exp = d.adjusted()
    q = d.scaleb(-exp).quantize(Decimal(1).scaleb(-(sig - 1)), rounding=ROUND_HALF_UP)
    if abs(q) >= 10:
        q = (q / 10).quantize(Decimal(1).scaleb(-(sig - 1)), rounding=ROUND_HALF_UP)
        exp += 1
    return f"{q}e{exp}"


def round_sig(value: float, sig: int = 3) -> float:
    """Numeric counterpart of :func:`display`."""
    return float(display(value, sig)) if value else 0.0


@dataclass(frozen=True)
class Column:
    name: str
    unit: str | None = None  # None marks a label column
    sig: int = 3
    decimals: int | None = None  # fixed-point display instead of significant figures

    def header(self) -> str:
        return self.name if self.unit is None else f"{self.name} [{self.unit}]"

    def show(self, value: Cell) -> str:
        if value is None:
            return ""
        if isinstance(value, str):
            return value
        if isinstance(value, int):
            return str(value)
        if self.decimals is not None:
            q = Decimal(value).quantize(Decimal(1).scaleb(-self.decimals), rounding=ROUND_HALF_UP)
            return str(q)
        return display(value, self.sig)


@dataclass(frozen=True)
class Table:
    name: str
    title: str
    columns: tuple[Column, ...]
    rows: tuple[tuple[Cell, ...], ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        object.__setattr__(self, "notes", tuple(self.notes))
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"table {self.name}: row width {len(r)} != {len(self.columns)} columns")
            for col, v in zip(self.columns, r):
                if col.unit is None and isinstance(v, (int, float)) and not isinstance(v, bool):
                    raise ValueError(f"table {self.name}: numeric value in unitless column {col.name!r}")

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)

    def row(self, label: str) -> tuple[Cell, ...]:
        for r in self.rows:
            if r[0] == label:
                return r
        raise KeyError(label)

    def cell(self, row_label: str, column: str) -> Cell:
        return self.row(row_label)[self.column_index(column)]


@dataclass(frozen=True)
class Report:
    metadata: Mapping[str, str] = field(default_factory=dict)
    sections: Mapping[str, Mapping[str, Table]] = field(default_factory=dict)

    def table(self, section: str, name: str) -> Table:
        return self.sections[section][name]


# analytics tables ----------------------------------------------------------

GH, GY, PCT, RUNS = "GPU-h", "GPU-years", "%", "runs"


def _dist_rows(d: Distribution, with_counts: bool) -> list[tuple]:
    total = d.total().gpu_hours
    rows = []
    for k, v in d.values.items():
        share = 100.0 * v.gpu_hours / total if total > 0 else 0.0
        row: list[Cell] = [key_label(k)]
        if with_counts:
            row.append(int(d.counts[k]) if d.counts else 0)
        row += [v.gpu_hours, v.gpu_hours / HOURS_PER_YEAR, share]
        rows.append(tuple(row))
    return rows


def _dist_table(name: str, title: str, key: str, d: Distribution, with_counts: bool = True) -> Table:
    cols = [Column(key)]
    if with_counts:
        cols.append(Column("runs", RUNS))
    cols += [Column("compute", GH), Column("compute in years", GY), Column("share", PCT, sig=2)]
    return Table(name, title, tuple(cols), tuple(_dist_rows(d, with_counts)), d.diagnostics)


def _bucket_rows(d: Distribution, buckets: IntensityBuckets, prefix: Sequence[Cell] = ()) -> list[tuple]:
    total = d.total().gpu_hours
    n = d.count_total()
    rows = []
    for label, (lo, hi) in zip(buckets.labels, buckets.bounds()):
        c = d.values[label].gpu_hours
        k = d.counts[label] if d.counts else 0
        rows.append(tuple(prefix) + (label, lo, hi, k, c,
                                     100.0 * c / total if total > 0 else 0.0,
                                     100.0 * k / n if n else 0.0))
    return rows


_BUCKET_COLS = (Column("bucket"), Column("lower", GH), Column("upper", GH), Column("runs", RUNS),
                Column("compute", GH), Column("compute share", PCT, sig=2), Column("run share", PCT, sig=2))


def analytics_tables(log: RunLog, buckets: IntensityBuckets | None = None,
                     include_llm: bool = False) -> dict[str, Table]:
    buckets = buckets or IntensityBuckets()
    scope = "including" if include_llm else "excluding"
    tables = {
        "run_phase": _dist_table("run_phase", f"Compute per run phase, {scope} LLM backbone", "run_phase",
                                 by_run_phase(log, include_llm), with_counts=False),
        "research_phase": _dist_table("research_phase", "Compute per research phase", "research_phase",
                                      by_research_phase(log)),
        "module_phase": _dist_table("module_phase", "Compute per module and training phase; failed runs pooled",
                                    "sector", by_module_phase(log)),
        "final_breakdown": _dist_table("final_breakdown", "Final-run compute per module and training phase",
                                       "sector", final_breakdown(log)),
    }
    ratios = final_to_total_ratios(log)
    finals, totals = final_breakdown(log), by_module_phase(log)
    tables["final_ratios"] = Table(
        "final_ratios", "Final-to-total compute ratio",
        (Column("sector"), Column("final", GH), Column("total", GH), Column("ratio", PCT, decimals=1)),
        tuple((k.label, finals[k].gpu_hours, totals[k].gpu_hours, r) for k, r in ratios.ratios.items()),
        ratios.diagnostics,
    )
    hist = intensity_histogram(log, buckets, include_llm)
    tables["intensity"] = Table("intensity", f"Run compute intensity, {scope} LLM backbone", _BUCKET_COLS,
                                tuple(_bucket_rows(hist, buckets)), hist.diagnostics)
    per_phase = intensity_by_training_phase(log, buckets)
    rows: list[tuple] = []
    notes: list[str] = []
    for phase, d in per_phase.items():
        rows += _bucket_rows(d, buckets, (phase.value,))
        notes += d.diagnostics
    tables["intensity_by_phase"] = Table("intensity_by_phase", "Main-model run intensity per training phase",
                                         (Column("training_phase"),) + _BUCKET_COLS, tuple(rows), tuple(notes))
    tables["timeline"] = _timeline_table(log, include_llm)
    flows = sankey_flows(log)
    tables["sankey"] = Table("sankey", "Compute flows from total to final runs",
                             (Column("source"), Column("target"), Column("weight", GH)),
                             tuple((e.source, e.target, e.weight.gpu_hours) for e in flows.edges))
    if not log.runs:  # all-zero category rows carry no information
        tables = {n: Table(t.name, t.title, t.columns, (), t.notes) for n, t in tables.items()}
    return tables


def _timeline_table(log: RunLog, include_llm: bool) -> Table:
    base = (Column("timestamp"), Column("gpus_in_use", "GPUs"), Column("concurrent_runs", RUNS),
            Column("gpus_smoothed", "GPUs"), Column("runs_smoothed", RUNS))
    runs = [r for r in log.runs if include_llm or r.module.value != "llm_backbone"]
    if not runs:
        return Table("timeline", "Cluster usage every 30 minutes", base)
    ts = timeline(log, include_llm=include_llm)
    keys = list(ts.cumulative)
    cols = base + tuple(Column(f"cumulative {k.label}", GH) for k in keys)
    rows = []
    for i, t in enumerate(ts.timestamps):
        rows.append((t.strftime("%Y-%m-%dT%H:%M:%SZ"), ts.gpus_in_use[i], ts.concurrent_runs[i],
                     ts.gpus_smoothed[i], ts.runs_smoothed[i]) + tuple(ts.cumulative[k][i] for k in keys))
    return Table("timeline", "Cluster usage every 30 minutes, trailing 100-sample smoothing", cols, tuple(rows))


# LCA tables ------------------------------------------------------------------

_GROUP_NAMES = {ComponentKind.GPU: "GPU", ComponentKind.CPU: "CPU", ComponentKind.RAM: "RAM",
                ComponentKind.OTHER: "Other"}


def _impact_table(a: Assessment, indicator: str) -> Table:
    unit = INDICATOR_UNITS[indicator]
    per = {"pe": a.pe, "gwp": a.gwp, "adp": a.adp}[indicator]
    extra = [c for c in a.embodied.components if group_of(c.family) is ComponentKind.OTHER]
    names = ["GPU", "CPU", "RAM"] + [c.name for c in extra] + ["Other", "Total"]
    cols = (Column("scope"),) + tuple(Column(n, unit) for n in names)

    emb = {c.name: c.allocated.get(indicator) for c in a.embodied.components}
    emb_group = {k: a.groups[k].embodied.get(indicator) for k in ComponentKind}
    emb_row = ["Embodied"] + [emb_group[ComponentKind.GPU], emb_group[ComponentKind.CPU], emb_group[ComponentKind.RAM]]
    emb_row += [emb[c.name] for c in extra] + [emb_group[ComponentKind.OTHER],
                                               math.fsum(emb_group.values())]

    def op_row(label: str, values: Mapping[ComponentKind, float]) -> list[Cell]:
        return [label] + [values[k] for k in (ComponentKind.GPU, ComponentKind.CPU, ComponentKind.RAM)] \
            + [None] * len(extra) + [values[ComponentKind.OTHER], math.fsum(values.values())]

    dc_row = op_row("Datacenter", per.datacenter)
    comp_row = op_row("Computation", per.computation)
    total_vals = {k: math.fsum((emb_group[k], per.datacenter[k], per.computation[k])) for k in ComponentKind}
    total_row = ["Total"] + [total_vals[k] for k in (ComponentKind.GPU, ComponentKind.CPU, ComponentKind.RAM)]
    total_row += [emb[c.name] for c in extra] + [total_vals[ComponentKind.OTHER], math.fsum(total_vals.values())]
    notes = ()
    if indicator == "adp":
        notes = ("use-phase and GPU production ADP cover mineral and metal depletion only; "
                 "other production ADP also includes fossil depletion; totals mix both bases",)
    title = {"pe": "Primary energy", "gwp": "Global warming potential", "adp": "Abiotic depletion potential"}
    return Table(f"impacts_{indicator}", f"{title[indicator]} by scope and component", cols,
                 (tuple(emb_row), tuple(dc_row), tuple(comp_row), tuple(total_row)), notes)


def _water_table(a: Assessment) -> Table:
    kinds = list(ComponentKind)
    cols = (Column("scope"),) + tuple(Column(_GROUP_NAMES[k], "L") for k in kinds) + (Column("Total", "L"),)
    w = a.water
    rows = (
        ("Embodied",) + (NOT_ASSESSED,) * (len(kinds) + 1),
        ("Datacenter cooling",) + tuple(w.cooling[k] for k in kinds) + (w.cooling_total,),
        ("Electricity production",) + tuple(w.electricity[k] for k in kinds) + (w.electricity_total,),
        ("Total",) + tuple(w.component(k) for k in kinds) + (w.total,),
    )
    return Table("impacts_wc", "Water consumption by scope and component", cols, rows,
                 ("production water consumption is outside the assessed scope",))


def lca_tables(a: Assessment) -> dict[str, Table]:
    e = a.energy
    kinds = list(ComponentKind)
    energy = Table(
        "energy", "Energy by component",
        (Column("component"), Column("computation", "kWh"), Column("datacenter", "kWh"), Column("total", "kWh")),
        tuple((_GROUP_NAMES[k], e.computation_kwh[k], e.datacenter_kwh[k], e.component_total(k)) for k in kinds)
        + (("Total", e.computation_total, e.datacenter_total, e.total_kwh),),
    )
    unit_rows = tuple((c.name, c.family.value, c.unit.adp_basis.value, c.quantity_per_node,
                       c.unit.pe_mj, c.unit.gwp_kgco2eq, c.unit.adp_kgsbeq) for c in a.embodied.components)
    unit = Table("embodied_unit", "Production impacts of one unit",
                 (Column("component"), Column("family"), Column("adp_basis"), Column("quantity", "units per node"),
                  Column("pe", "MJ"), Column("gwp", "kgCO2eq"), Column("adp", "kgSbeq")), unit_rows)
    shares = {i: a.embodied.shares(i) for i in ("pe", "gwp", "adp")}
    alloc_rows = tuple((c.name, c.allocated.adp_basis.value, c.allocated.pe_mj, c.allocated.gwp_kgco2eq,
                        c.allocated.adp_kgsbeq, 100 * shares["pe"][c.name], 100 * shares["gwp"][c.name],
                        100 * shares["adp"][c.name]) for c in a.embodied.components)
    tot = a.embodied.total
    alloc_rows += (("Total", tot.adp_basis.value, tot.pe_mj, tot.gwp_kgco2eq, tot.adp_kgsbeq, 100.0, 100.0, 100.0),)
    alloc = Table("embodied_allocated", "Production impacts allocated to the compute budget",
                  (Column("component"), Column("adp_basis"), Column("pe", "MJ"), Column("gwp", "kgCO2eq"),
                   Column("adp", "kgSbeq"), Column("pe share", PCT, sig=2), Column("gwp share", PCT, sig=2),
                   Column("adp share", PCT, sig=2)), alloc_rows)
    out = {"energy": energy, "embodied_unit": unit, "embodied_allocated": alloc}
    for ind in ("pe", "gwp", "adp"):
        out[f"impacts_{ind}"] = _impact_table(a, ind)
    out["impacts_wc"] = _water_table(a)
    return out


def scenario_tables(locations: Sequence[LocationImpact], sweeps: Mapping[str, Sequence[SweepPoint]] = {}) \
        -> dict[str, Table]:
    out = {"locations": Table(
        "locations", "Operational impacts by location, excluding production",
        (Column("location"), Column("ci", "gCO2eq/kWh"), Column("ewif", "L/kWh"), Column("gwp", "kgCO2eq"),
         Column("wc", "L"), Column("wc cooling", "L"), Column("wc electricity", "L")),
        tuple((x.name, x.ci_g_per_kwh, x.ewif_l_per_kwh, x.gwp_kgco2eq, x.wc_liters, x.wc_cooling_liters,
               x.wc_electricity_liters) for x in locations),
    )}
    for path, points in sweeps.items():
        rows = []
        for p in points:
            t = p.assessment.total
            rows.append((p.value, t.total.pe_mj, t.computation.gwp_kgco2eq, t.datacenter.gwp_kgco2eq,
                         t.embodied.gwp_kgco2eq, t.total.gwp_kgco2eq, t.total.adp_kgsbeq,
                         p.assessment.water.total))
        name = "sweep_" + path.replace(".", "_")
        out[name] = Table(name, f"Full reassessment for each value of {path}",
                          (Column("value", path), Column("pe total", "MJ"), Column("gwp computation", "kgCO2eq"),
                           Column("gwp datacenter", "kgCO2eq"), Column("gwp embodied", "kgCO2eq"),
                           Column("gwp total", "kgCO2eq"), Column("adp total", "kgSbeq"), Column("wc total", "L")),
                          tuple(rows))
    return out


def base_metadata(**extra: str) -> dict[str, str]:
    meta = {"tool": "computelca", "tool_version": __version__}
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


# rendering --------------------------------------------------------------------

def _json_cell(col: Column, v: Cell) -> Any:
    if isinstance(v, bool) or v is None or isinstance(v, str) or col.unit is None:
        return v
    return {"raw": v, "display": col.show(v), "unit": col.unit}


def table_to_json(t: Table) -> dict:
    return {
        "title": t.title,
        "columns": [{"name": c.name, "unit": c.unit, "sig": c.sig, "decimals": c.decimals} for c in t.columns],
        "rows": [[_json_cell(c, v) for c, v in zip(t.columns, r)] for r in t.rows],
        "notes": list(t.notes),
    }


def table_from_json(name: str, obj: Mapping) -> Table:
    cols = tuple(Column(c["name"], c["unit"], c["sig"], c["decimals"]) for c in obj["columns"])
    rows = tuple(tuple(v["raw"] if isinstance(v, dict) else v for v in r) for r in obj["rows"])
    return Table(name, obj["title"], cols, rows, tuple(obj.get("notes", ())))


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _csv_text(t: Table, *, raw_only: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header: list[str] = []
    for c in t.columns:
        if c.unit is None or raw_only:
            header.append(c.header())
        else:
            header += [c.header(), f"{c.name} raw [{c.unit}]"]
    w.writerow(header)
    for r in t.rows:
        out: list[str] = []
        for c, v in zip(t.columns, r):
            raw = "" if v is None else (v if isinstance(v, str) else repr(v))
            if c.unit is None or raw_only:
                out.append(raw)
            else:
                out += [c.show(v), raw]
        w.writerow(out)
    return buf.getvalue()


def render_report(r: Report, out_dir: str | Path, fmt: str = "json") -> list[Path]:
    """Write ``r`` under ``out_dir``; returns the files written, sorted.

    json: ``report.json``. csv: ``<section>/<table>.csv`` with display and
    raw columns. plotdata: ``<table>.csv`` with raw numbers only. All
    formats also write ``metadata.json``.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    out = Path(out_dir)
    files: dict[Path, str] = {out / "metadata.json": _dumps(dict(r.metadata))}
    if fmt == "json":
        body = {s: {n: table_to_json(t) for n, t in tables.items()} for s, tables in r.sections.items()}
        files[out / "report.json"] = _dumps({"sections": body})
    else:
        for section, tables in r.sections.items():
            for name, t in tables.items():
                path = out / f"{name}.csv" if fmt == "plotdata" else out / section / f"{name}.csv"
                if path in files:
                    raise ValueError(f"two tables map to {path}")
                files[path] = _csv_text(t, raw_only=fmt == "plotdata")
    for path in sorted(files):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(files[path], encoding="utf-8", newline="\n")
    return sorted(files)


def load_report(out_dir: str | Path) -> Report:
    """Inverse of ``render_report(..., fmt="json")``."""
    out = Path(out_dir)
    meta = json.loads((out / "metadata.json").read_text(encoding="utf-8"))
    body = json.loads((out / "report.json").read_text(encoding="utf-8"))["sections"]
    sections = {s: {n: table_from_json(n, t) for n, t in tables.items()} for s, tables in body.items()}
    return Report(meta, sections)


def canonical_sections(sections: Mapping[str, Mapping[str, Table]]) -> dict[str, dict[str, Table]]:
    """Sections and tables sorted by name, matching what a load returns."""
    return {s: {n: sections[s][n] for n in sorted(sections[s])} for s in sorted(sections)}


def build_report(metadata: Mapping[str, str], analytics: Mapping[str, Table] | None = None,
                 lca: Mapping[str, Table] | None = None, scenarios: Mapping[str, Table] | None = None) -> Report:
    sections = {}
    for name, tables in (("analytics", analytics), ("lca", lca), ("scenarios", scenarios)):
        if tables is not None:
            sections[name] = dict(tables)
    return Report(dict(metadata), canonical_sections(sections))
