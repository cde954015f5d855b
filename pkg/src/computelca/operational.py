"""Use-phase energy and its impacts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .domain import ComputeQuantity
from .errors import ConfigError, DomainError, UnknownSourceError

SHARE_TOLERANCE = 1e-6


class ComponentKind(str, Enum):
    GPU = "gpu"
    CPU = "cpu"
    RAM = "ram"
    OTHER = "other"


@dataclass(frozen=True)
class UtilizationScaled:
    tdp_w: float
    utilization: float

    def __post_init__(self) -> None:
        if not self.tdp_w > 0:
            raise ConfigError(f"TDP must be positive, got {self.tdp_w}")
        if not 0.0 <= self.utilization <= 1.0:
            raise ConfigError(f"utilization must lie in [0, 1], got {self.utilization}")

    @property
    def watts(self) -> float:
        return self.utilization * self.tdp_w


@dataclass(frozen=True)
class ConstantPower:
    power_w: float

    def __post_init__(self) -> None:
        if not self.power_w > 0:
            raise ConfigError(f"power must be positive, got {self.power_w}")

    @property
    def watts(self) -> float:
        return self.power_w


@dataclass(frozen=True)
class ComponentPowerModel:
    kind: ComponentKind
    quantity_per_node: int
    mode: UtilizationScaled | ConstantPower

    def __post_init__(self) -> None:
        if isinstance(self.quantity_per_node, bool) or not isinstance(self.quantity_per_node, int) \
                or self.quantity_per_node < 1:
            raise ConfigError(f"{self.kind.value}: quantity per node must be an integer >= 1")


@dataclass(frozen=True)
class DatacenterParams:
    pue: float
    wue_l_per_kwh: float
    o_cluster: float

    def __post_init__(self) -> None:
        if not self.pue >= 1.0:
            raise ConfigError(f"PUE must be >= 1, got {self.pue}")
        if not self.wue_l_per_kwh >= 0.0:
            raise ConfigError(f"WUE must be >= 0, got {self.wue_l_per_kwh}")
        if not self.o_cluster >= 1.0:
            raise ConfigError(f"o_cluster must be >= 1, got {self.o_cluster}")

    @property
    def overhead_factor(self) -> float:
        """Datacenter energy per unit of computation energy."""
        return (self.pue - 1.0) * self.o_cluster + (self.o_cluster - 1.0)


@dataclass(frozen=True)
class GridProfile:
    """Yearly-average electricity parameters for one location.

    ``adpf_mj_per_kwh``, ``adpe_kgsbeq_per_kwh`` and ``renewable_share``
    are optional: location scenarios only need CI and EWIF.
    """

    name: str
    ci_g_per_kwh: float
    ewif_l_per_kwh: float
    adpf_mj_per_kwh: float | None = None
    adpe_kgsbeq_per_kwh: float | None = None
    renewable_share: float | None = None
    energy_mix: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        for name in ("ci_g_per_kwh", "ewif_l_per_kwh", "adpf_mj_per_kwh", "adpe_kgsbeq_per_kwh"):
            v = getattr(self, name)
            if v is not None and not v >= 0.0:
                raise ConfigError(f"grid {self.name}: {name} must be >= 0, got {v}")
        if self.renewable_share is not None and not 0.0 <= self.renewable_share <= 1.0:
            raise ConfigError(f"grid {self.name}: renewable share must lie in [0, 1]")
        if self.energy_mix is not None:
            _check_shares(self.energy_mix)

    @property
    def pe_mj_per_kwh(self) -> float:
        if self.adpf_mj_per_kwh is None or self.renewable_share is None:
            raise ConfigError(f"grid {self.name}: ADPf and renewable share are needed for primary energy")
        if self.renewable_share >= 1.0:
            raise DomainError(f"grid {self.name}: renewable share of 1 makes primary energy undefined")
        return self.adpf_mj_per_kwh / (1.0 - self.renewable_share)


@dataclass(frozen=True)
class EnergyBreakdown:
    """kWh per component, split into computation and datacenter overhead."""

    computation_kwh: Mapping[ComponentKind, float]
    overhead_factor: float

    @property
    def datacenter_kwh(self) -> dict[ComponentKind, float]:
        return {k: v * self.overhead_factor for k, v in self.computation_kwh.items()}

    @property
    def computation_total(self) -> float:
        return math.fsum(self.computation_kwh.values())

    @property
    def datacenter_total(self) -> float:
        return math.fsum(self.datacenter_kwh.values())

    @property
    def total_kwh(self) -> float:
        return math.fsum(list(self.computation_kwh.values()) + list(self.datacenter_kwh.values()))

    def component_total(self, kind: ComponentKind) -> float:
        return self.computation_kwh[kind] * (1.0 + self.overhead_factor)


@dataclass(frozen=True)
class PerScope:
    """One indicator per component and scope."""

    computation: Mapping[ComponentKind, float]
    datacenter: Mapping[ComponentKind, float]

    @property
    def computation_total(self) -> float:
        return math.fsum(self.computation.values())

    @property
    def datacenter_total(self) -> float:
        return math.fsum(self.datacenter.values())

    @property
    def total(self) -> float:
        return math.fsum(list(self.computation.values()) + list(self.datacenter.values()))

    def component(self, kind: ComponentKind) -> float:
        return self.computation[kind] + self.datacenter[kind]


@dataclass(frozen=True)
class WaterSplit:
    cooling: Mapping[ComponentKind, float]
    electricity: Mapping[ComponentKind, float]

    @property
    def cooling_total(self) -> float:
        return math.fsum(self.cooling.values())

    @property
    def electricity_total(self) -> float:
        return math.fsum(self.electricity.values())

    @property
    def total(self) -> float:
        return math.fsum(list(self.cooling.values()) + list(self.electricity.values()))

    def component(self, kind: ComponentKind) -> float:
        return self.cooling[kind] + self.electricity[kind]


def component_energy(c: ComputeQuantity, m: ComponentPowerModel, q_gpu: int) -> float:
    """kWh drawn by one component type over ``c`` GPU-hours."""
    if q_gpu < 1:
        raise ConfigError("q_gpu must be at least 1")
    return c.gpu_hours * (m.quantity_per_node / q_gpu) * m.mode.watts / 1000.0


def gpus_per_node(models: Iterable[ComponentPowerModel]) -> int:
    for m in models:
        if m.kind is ComponentKind.GPU:
            return m.quantity_per_node
    raise ConfigError("power models define no GPU entry")


def _check_models(models: Iterable[ComponentPowerModel]) -> dict[ComponentKind, ComponentPowerModel]:
    by_kind: dict[ComponentKind, ComponentPowerModel] = {}
    for m in models:
        if m.kind in by_kind:
            raise ConfigError(f"component kind {m.kind.value!r} appears more than once")
        by_kind[m.kind] = m
    missing = [k.value for k in ComponentKind if k not in by_kind]
    if missing:
        raise ConfigError(f"missing power model(s): {', '.join(missing)}")
    return by_kind


def total_energy(c: ComputeQuantity, models: Iterable[ComponentPowerModel], dc: DatacenterParams) -> EnergyBreakdown:
    by_kind = _check_models(models)
    q_gpu = by_kind[ComponentKind.GPU].quantity_per_node
    comp = {k: component_energy(c, by_kind[k], q_gpu) for k in ComponentKind}
    return EnergyBreakdown(comp, dc.overhead_factor)


def _per_scope(e: EnergyBreakdown, factor: float) -> PerScope:
    dc = e.datacenter_kwh
    return PerScope({k: v * factor for k, v in e.computation_kwh.items()}, {k: v * factor for k, v in dc.items()})


def primary_energy(e: EnergyBreakdown, g: GridProfile) -> PerScope:
    """MJ, using PE per kWh = ADPf / (1 - renewable share)."""
    return _per_scope(e, g.pe_mj_per_kwh)


def gwp(e: EnergyBreakdown, g: GridProfile) -> PerScope:
    """kgCO2eq."""
    return _per_scope(e, g.ci_g_per_kwh / 1000.0)


def adpe_use(e: EnergyBreakdown, g: GridProfile) -> PerScope:
    """kgSbeq from electricity use."""
    if g.adpe_kgsbeq_per_kwh is None:
        raise ConfigError(f"grid {g.name}: ADPe per kWh is needed for use-phase depletion")
    return _per_scope(e, g.adpe_kgsbeq_per_kwh)


def water(e: EnergyBreakdown, dc: DatacenterParams, g: GridProfile) -> WaterSplit:
    """Cooling is WUE x o_cluster x computation energy; electricity is EWIF x total energy."""
    cooling = {k: dc.wue_l_per_kwh * dc.o_cluster * v for k, v in e.computation_kwh.items()}
    electricity = {k: g.ewif_l_per_kwh * e.component_total(k) for k in e.computation_kwh}
    return WaterSplit(cooling, electricity)


# Generation-source names that differ between mix datasets and water-intensity tables.
DEFAULT_SOURCE_CORRESPONDENCE: Mapping[str, str] = {
    "solar": "photovoltaic",
    "bioenergy": "biomass",
    "other renewables": "geothermal",
    "gas": "natural gas",
    "coal": "hard coal",
    "other fossil": "heavy fuel oil",
}


def _check_shares(mix: Mapping[str, float]) -> None:
    if any(not s >= 0.0 for s in mix.values()):
        raise ValueError("energy-mix shares must be non-negative")
    if abs(math.fsum(mix.values()) - 1.0) > SHARE_TOLERANCE:
        raise ValueError(f"energy-mix shares sum to {math.fsum(mix.values())}, expected 1")


def ewif_from_mix(mix: Mapping[str, float], intensities: Mapping[str, float],
                  correspondence: Mapping[str, str] = DEFAULT_SOURCE_CORRESPONDENCE) -> float:
    """Share-weighted water intensity, L/kWh."""
    _check_shares(mix)
    terms = []
    for source, share in mix.items():
        name = source if source in intensities else correspondence.get(source.lower(), source)
        if name not in intensities:
            raise UnknownSourceError(f"no water intensity for energy source {source!r}")
        terms.append(share * intensities[name])
    return math.fsum(terms)
