"""Run-log ingestion: one JSON object per line."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Mapping

from .domain import (
    ComputeQuantity,
    ModuleKind,
    ResearchPhaseKind,
    RunPhaseKind,
    TrainingPhaseKind,
    check_pair,
    is_valid_pair,
)
from .errors import DuplicateRunIdError, InvalidPhaseError, LogParseError, UnknownCategoryError

FRACTION_TOLERANCE = 1e-6

DEFAULT_FRACTIONS: Mapping[RunPhaseKind, float] = {
    RunPhaseKind.OPTIMIZATION: 1.0,
    RunPhaseKind.VALIDATION: 0.0,
    RunPhaseKind.EVALUATION: 0.0,
    RunPhaseKind.SAMPLE_GENERATION: 0.0,
}

_REQUIRED = ("run_id", "module", "training_phase", "research_phase", "start", "end", "gpus")
_KNOWN = frozenset(_REQUIRED + ("phase_fractions",))


def _utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class RunRecord:
    """One training run.

    Only the module/phase pairing is checked here. Everything else
    (negative durations, bad fractions) is reported by ``validate_log``
    so a broken log can still be loaded and inspected.
    """

    run_id: str
    module: ModuleKind
    training_phase: TrainingPhaseKind
    research_phase: ResearchPhaseKind
    start: datetime
    end: datetime
    gpus: int
    phase_fractions: Mapping[RunPhaseKind, float] = field(default_factory=lambda: dict(DEFAULT_FRACTIONS))

    def __post_init__(self) -> None:
        check_pair(self.module, self.training_phase)
        object.__setattr__(self, "start", _utc(self.start))
        object.__setattr__(self, "end", _utc(self.end))
        fractions = {k: 0.0 for k in RunPhaseKind}
        fractions.update(self.phase_fractions or DEFAULT_FRACTIONS)
        object.__setattr__(self, "phase_fractions", fractions)

    @property
    def duration_seconds(self) -> int:
        return int((self.end - self.start).total_seconds())

    @property
    def gpu_seconds(self) -> int:
        return self.duration_seconds * self.gpus


def run_compute(r: RunRecord) -> ComputeQuantity:
    """Duration in hours times GPU count."""
    return ComputeQuantity(r.gpu_seconds / 3600.0)


@dataclass(frozen=True)
class RunLog:
    runs: tuple[RunRecord, ...] = ()
    source_path: str = "<memory>"

    def __post_init__(self) -> None:
        object.__setattr__(self, "runs", tuple(self.runs))
        seen: set[str] = set()
        for r in self.runs:
            if r.run_id in seen:
                raise DuplicateRunIdError(f"duplicate run_id {r.run_id!r}")
            seen.add(r.run_id)

    def __len__(self) -> int:
        return len(self.runs)

    def __iter__(self):
        return iter(self.runs)

    @classmethod
    def merge(cls, logs: Iterable[RunLog]) -> RunLog:
        logs = list(logs)
        runs = [r for log in logs for r in log.runs]
        return cls(tuple(runs), ",".join(log.source_path for log in logs))


@dataclass(frozen=True)
class Diagnostic:
    run_id: str
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.run_id}: {self.field}: {self.reason}"


def _parse_timestamp(value: object, name: str, line: int) -> datetime:
    if not isinstance(value, str):
        raise LogParseError(f"{name} must be an ISO-8601 string", line)
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        return _utc(datetime.fromisoformat(text))
    except ValueError as exc:
        raise LogParseError(f"{name}: {exc}", line) from None


def _enum(kind, value: object, name: str, line: int):
    if not isinstance(value, str):
        raise LogParseError(f"{name} must be a string", line)
    try:
        return kind(value)
    except ValueError:
        allowed = ", ".join(m.value for m in kind)
        raise UnknownCategoryError(f"unknown {name} {value!r} (expected one of {allowed})", line) from None


def _parse_fractions(value: object, line: int) -> dict[RunPhaseKind, float]:
    if not isinstance(value, dict):
        raise LogParseError("phase_fractions must be an object", line)
    out: dict[RunPhaseKind, float] = {}
    for key, frac in value.items():
        phase = _enum(RunPhaseKind, key, "run phase", line)
        if isinstance(frac, bool) or not isinstance(frac, (int, float)) or not math.isfinite(frac):
            raise LogParseError(f"phase fraction {key!r} must be a finite number", line)
        out[phase] = float(frac)
    return out


def parse_record(obj: object, line: int = 0) -> RunRecord:
    if not isinstance(obj, dict):
        raise LogParseError("record must be a JSON object", line)
    missing = [k for k in _REQUIRED if k not in obj]
    if missing:
        raise LogParseError(f"missing field(s): {', '.join(missing)}", line)
    extra = sorted(set(obj) - _KNOWN)
    if extra:
        raise LogParseError(f"unknown field(s): {', '.join(extra)}", line)
    run_id = obj["run_id"]
    if not isinstance(run_id, str) or not run_id:
        raise LogParseError("run_id must be a non-empty string", line)
    gpus = obj["gpus"]
    if isinstance(gpus, bool) or not isinstance(gpus, int):
        raise LogParseError("gpus must be an integer", line)
    fractions = obj.get("phase_fractions")
    try:
        return RunRecord(
            run_id=run_id,
            module=_enum(ModuleKind, obj["module"], "module", line),
            training_phase=_enum(TrainingPhaseKind, obj["training_phase"], "training_phase", line),
            research_phase=_enum(ResearchPhaseKind, obj["research_phase"], "research_phase", line),
            start=_parse_timestamp(obj["start"], "start", line),
            end=_parse_timestamp(obj["end"], "end", line),
            gpus=gpus,
            phase_fractions=_parse_fractions(fractions, line) if fractions is not None else DEFAULT_FRACTIONS,
        )
    except InvalidPhaseError as exc:
        raise LogParseError(str(exc), line) from None


def parse_log(stream: IO[bytes] | Iterable[bytes] | bytes, source_path: str = "<stream>") -> RunLog:
    """Parse a line-oriented run log. Blank lines are skipped."""
    if isinstance(stream, (bytes, bytearray)):
        stream = bytes(stream).splitlines()
    runs: list[RunRecord] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(stream, start=1):
        try:
            text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
        except UnicodeDecodeError:
            raise LogParseError("line is not valid UTF-8", lineno) from None
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LogParseError(f"invalid JSON: {exc.msg}", lineno) from None
        record = parse_record(obj, lineno)
        if record.run_id in seen:
            raise DuplicateRunIdError(
                f"duplicate run_id {record.run_id!r} (first seen on line {seen[record.run_id]})", lineno
            )
        seen[record.run_id] = lineno
        runs.append(record)
    return RunLog(tuple(runs), source_path)


def read_log(path: str | Path) -> RunLog:
    p = Path(path)
    with p.open("rb") as fh:
        return parse_log(fh, str(path))


def read_logs(paths: Iterable[str | Path]) -> RunLog:
    """Load several files as one log. Run ids must be unique across them."""
    return RunLog.merge(read_log(p) for p in paths)


def _format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def record_to_dict(r: RunRecord) -> dict:
    obj = {
        "run_id": r.run_id,
        "module": r.module.value,
        "training_phase": r.training_phase.value,
        "research_phase": r.research_phase.value,
        "start": _format_timestamp(r.start),
        "end": _format_timestamp(r.end),
        "gpus": r.gpus,
    }
    if dict(r.phase_fractions) != dict(DEFAULT_FRACTIONS):
        obj["phase_fractions"] = {k.value: r.phase_fractions[k] for k in RunPhaseKind}
    return obj


def serialize_log(log: RunLog) -> bytes:
    lines = [json.dumps(record_to_dict(r), separators=(",", ":")) for r in log.runs]
    return "".join(line + "\n" for line in lines).encode("utf-8")


def validate_log(log: RunLog) -> list[Diagnostic]:
    """One diagnostic per violated invariant, in log order."""
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for r in log.runs:
        if r.run_id in seen:
            diags.append(Diagnostic(r.run_id, "run_id", "duplicate run id"))
        seen.add(r.run_id)
        if not is_valid_pair(r.module, r.training_phase):
            diags.append(Diagnostic(r.run_id, "training_phase", "invalid for module"))
        if r.end < r.start:
            diags.append(Diagnostic(r.run_id, "end", "negative duration"))
        if r.gpus < 1:
            diags.append(Diagnostic(r.run_id, "gpus", "gpu count must be at least 1"))
        fractions = r.phase_fractions
        bad = [k for k in RunPhaseKind if not 0.0 <= fractions[k] <= 1.0]
        for k in bad:
            diags.append(Diagnostic(r.run_id, f"phase_fractions.{k.value}", "fraction out of [0, 1]"))
        if abs(math.fsum(fractions.values()) - 1.0) > FRACTION_TOLERANCE:
            diags.append(Diagnostic(r.run_id, "phase_fractions", "fractions not normalized"))
    return diags
