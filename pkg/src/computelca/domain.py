"""Shared value types: run classifications, compute quantities, impact vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple

from .errors import AdpBasisMismatchError, InvalidPhaseError

HOURS_PER_YEAR = 8760.0


class ModuleKind(str, Enum):
    TOKENIZER = "tokenizer"
    LLM_BACKBONE = "llm_backbone"
    MAIN_MODEL = "main_model"
    DATA_GENERATOR = "data_generator"


class TrainingPhaseKind(str, Enum):
    EXPERIMENTATION = "exp"
    PRE_TRAINING = "pre"
    POST_TRAINING = "post"
    FINE_TUNING = "ft"
    TRAIN = "train"


class ResearchPhaseKind(str, Enum):
    DEBUGGING = "debug"
    FAILED = "failed"
    DESIGN_AND_TUNING = "tuning"
    ABLATION = "ablation"
    FINAL_TRAINING = "final"


class RunPhaseKind(str, Enum):
    OPTIMIZATION = "optimization"
    VALIDATION = "validation"
    EVALUATION = "evaluation"
    SAMPLE_GENERATION = "sample_generation"


_T = TrainingPhaseKind
VALID_TRAINING_PHASES: dict[ModuleKind, tuple[TrainingPhaseKind, ...]] = {
    ModuleKind.TOKENIZER: (_T.TRAIN,),
    ModuleKind.LLM_BACKBONE: (_T.TRAIN,),
    ModuleKind.MAIN_MODEL: (_T.EXPERIMENTATION, _T.PRE_TRAINING, _T.POST_TRAINING, _T.FINE_TUNING),
    ModuleKind.DATA_GENERATOR: (_T.EXPERIMENTATION, _T.POST_TRAINING, _T.FINE_TUNING),
}


def is_valid_pair(module: ModuleKind, phase: TrainingPhaseKind) -> bool:
    return phase in VALID_TRAINING_PHASES[module]


def check_pair(module: ModuleKind, phase: TrainingPhaseKind) -> None:
    if not is_valid_pair(module, phase):
        raise InvalidPhaseError(f"training phase {phase.value!r} is not valid for module {module.value!r}")


class ModulePhase(NamedTuple):
    """Aggregation key. ``module is None`` marks the pooled failed-runs sector."""

    module: ModuleKind | None
    phase: TrainingPhaseKind | None

    @property
    def label(self) -> str:
        if self.module is None:
            return "failed"
        if self.phase is None:
            return self.module.value
        return f"{self.module.value}/{self.phase.value}"

    @classmethod
    def from_label(cls, label: str) -> "ModulePhase":
        if label == "failed":
            return FAILED_SECTOR
        module, _, phase = label.partition("/")
        return cls(ModuleKind(module), TrainingPhaseKind(phase) if phase else None)


FAILED_SECTOR = ModulePhase(None, None)

# Canonical ordering used by every report.
MODULE_PHASE_KEYS: tuple[ModulePhase, ...] = tuple(
    ModulePhase(m, p) for m, phases in VALID_TRAINING_PHASES.items() for p in phases
)


@dataclass(frozen=True, order=True)
class ComputeQuantity:
    """Non-negative GPU-hours."""

    gpu_hours: float = 0.0

    def __post_init__(self) -> None:
        if not (self.gpu_hours >= 0.0) or math.isinf(self.gpu_hours):
            raise ValueError(f"compute must be a finite non-negative number of GPU-hours, got {self.gpu_hours}")

    def __add__(self, other: ComputeQuantity) -> ComputeQuantity:
        if not isinstance(other, ComputeQuantity):
            return NotImplemented
        return ComputeQuantity(self.gpu_hours + other.gpu_hours)

    def __radd__(self, other: object) -> ComputeQuantity:
        # lets builtin sum() start from 0
        if other == 0:
            return self
        return NotImplemented  # type: ignore[return-value]

    def scale(self, k: float) -> ComputeQuantity:
        return ComputeQuantity(self.gpu_hours * k)

    @property
    def gpu_years(self) -> float:
        return self.gpu_hours / HOURS_PER_YEAR

    @staticmethod
    def total(items: Iterable[ComputeQuantity]) -> ComputeQuantity:
        """Correctly rounded sum; independent of iteration order."""
        return ComputeQuantity(math.fsum(c.gpu_hours for c in items))


def to_gpu_years(c: ComputeQuantity) -> float:
    return c.gpu_hours / HOURS_PER_YEAR


class AdpBasis(str, Enum):
    """Which abiotic depletion terms an ADP number includes."""

    ELEMENTS = "ADPe"
    ELEMENTS_AND_FOSSIL = "ADPe+ADPf"
    MIXED = "mixed"


@dataclass(frozen=True)
class ImpactVector:
    """PE in MJ, GWP in kgCO2eq, ADP in kgSbeq, WC in litres.

    ``wc_liters`` is ``None`` when water was not assessed (embodied impacts).
    ``None`` behaves as an absent term under addition.
    """

    pe_mj: float
    gwp_kgco2eq: float
    adp_kgsbeq: float
    wc_liters: float | None
    adp_basis: AdpBasis = AdpBasis.ELEMENTS

    def __post_init__(self) -> None:
        for name in ("pe_mj", "gwp_kgco2eq", "adp_kgsbeq", "wc_liters"):
            v = getattr(self, name)
            if v is not None and not v >= 0.0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    @property
    def adp_includes_fossil(self) -> bool | None:
        """True/False for a pure basis, None for a mixed one."""
        if self.adp_basis is AdpBasis.MIXED:
            return None
        return self.adp_basis is AdpBasis.ELEMENTS_AND_FOSSIL

    @classmethod
    def zero(cls, basis: AdpBasis = AdpBasis.ELEMENTS, *, water: bool = True) -> ImpactVector:
        return cls(0.0, 0.0, 0.0, 0.0 if water else None, basis)

    def scale(self, k: float) -> ImpactVector:
        wc = None if self.wc_liters is None else self.wc_liters * k
        return ImpactVector(self.pe_mj * k, self.gwp_kgco2eq * k, self.adp_kgsbeq * k, wc, self.adp_basis)

    def __add__(self, other: ImpactVector) -> ImpactVector:
        if not isinstance(other, ImpactVector):
            return NotImplemented
        return add_impacts(self, other)

    def get(self, indicator: str) -> float | None:
        return getattr(self, INDICATOR_FIELDS[indicator])


INDICATOR_FIELDS = {"pe": "pe_mj", "gwp": "gwp_kgco2eq", "adp": "adp_kgsbeq", "wc": "wc_liters"}
INDICATOR_UNITS = {"pe": "MJ", "gwp": "kgCO2eq", "adp": "kgSbeq", "wc": "L"}


def _add_optional(a: float | None, b: float | None) -> float | None:
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def add_impacts(a: ImpactVector, b: ImpactVector, *, widen: bool = False) -> ImpactVector:
    """Component-wise sum.

    Differing ADP bases raise unless ``widen`` is set, in which case the
    result is tagged ``MIXED``.
    """
    if a.adp_basis is b.adp_basis:
        basis = a.adp_basis
    elif widen:
        basis = AdpBasis.MIXED
    else:
        raise AdpBasisMismatchError(
            f"cannot add ADP on basis {a.adp_basis.value} to {b.adp_basis.value} without widening"
        )
    return ImpactVector(
        a.pe_mj + b.pe_mj,
        a.gwp_kgco2eq + b.gwp_kgco2eq,
        a.adp_kgsbeq + b.adp_kgsbeq,
        _add_optional(a.wc_liters, b.wc_liters),
        basis,
    )


def sum_impacts(items: Iterable[ImpactVector], *, widen: bool = False) -> ImpactVector:
    """Order-independent sum using ``math.fsum`` per component."""
    items = list(items)
    if not items:
        return ImpactVector.zero()
    bases = {v.adp_basis for v in items}
    if len(bases) == 1:
        basis = bases.pop()
    elif widen:
        basis = AdpBasis.MIXED
    else:
        raise AdpBasisMismatchError(f"mixed ADP bases {sorted(b.value for b in bases)} without widening")
    waters = [v.wc_liters for v in items if v.wc_liters is not None]
    return ImpactVector(
        math.fsum(v.pe_mj for v in items),
        math.fsum(v.gwp_kgco2eq for v in items),
        math.fsum(v.adp_kgsbeq for v in items),
        math.fsum(waters) if waters else None,
        basis,
    )


@dataclass(frozen=True)
class ScopedImpact:
    """Impacts split by scope.

    Water in the computation scope is the electricity-production share of
    computation energy. The datacenter scope holds the overhead-energy
    electricity share plus all datacenter cooling. So the two WC fields
    always add up to the operational WC.
    """

    computation: ImpactVector
    datacenter: ImpactVector
    embodied: ImpactVector
    wc_cooling_liters: float
    wc_electricity_liters: float

    @property
    def operational(self) -> ImpactVector:
        return add_impacts(self.computation, self.datacenter)

    @property
    def total(self) -> ImpactVector:
        return sum_impacts((self.computation, self.datacenter, self.embodied), widen=True)

    def scope(self, name: str) -> ImpactVector:
        return {"computation": self.computation, "datacenter": self.datacenter,
                "embodied": self.embodied, "total": self.total}[name]
