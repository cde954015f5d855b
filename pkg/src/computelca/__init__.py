"""Compute-footprint accounting for GPU training projects.

Turns per-run training logs into compute-distribution analytics and a
multi-indicator life-cycle assessment (primary energy, global warming,
abiotic depletion, water).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .domain import (  # noqa: E402
    AdpBasis,
    ComputeQuantity,
    ImpactVector,
    ModuleKind,
    ResearchPhaseKind,
    RunPhaseKind,
    ScopedImpact,
    TrainingPhaseKind,
    add_impacts,
    to_gpu_years,
)
from .logs import RunLog, RunRecord, parse_log, read_log, run_compute, serialize_log, validate_log  # noqa: E402

__all__ = [
    "AdpBasis",
    "ComputeQuantity",
    "ImpactVector",
    "ModuleKind",
    "ResearchPhaseKind",
    "RunLog",
    "RunPhaseKind",
    "RunRecord",
    "ScopedImpact",
    "TrainingPhaseKind",
    "add_impacts",
    "parse_log",
    "read_log",
    "run_compute",
    "serialize_log",
    "to_gpu_years",
    "validate_log",
]
