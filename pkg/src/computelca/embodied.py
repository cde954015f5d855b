"""Production impacts of node hardware and their allocation to a project."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .domain import AdpBasis, ComputeQuantity, ImpactVector, sum_impacts
from .errors import ComponentSpecError, ConfigError


class EmbodiedFamily(str, Enum):
    GPU = "gpu"
    CPU = "cpu"
    RAM = "ram"
    SSD = "ssd"
    PSU = "psu"
    MOTHERBOARD = "motherboard"
    CASE = "case"
    ASSEMBLY = "assembly"
    EXTRA = "extra"  # any additional part with a fixed per-unit impact


CONSTANT_FAMILIES = frozenset({EmbodiedFamily.GPU, EmbodiedFamily.MOTHERBOARD, EmbodiedFamily.CASE,
                               EmbodiedFamily.ASSEMBLY})
REQUIRED_FAMILIES = tuple(f for f in EmbodiedFamily if f is not EmbodiedFamily.EXTRA)


@dataclass(frozen=True)
class ImpactTriple:
    pe_mj: float
    gwp_kgco2eq: float
    adp_kgsbeq: float

    def __post_init__(self) -> None:
        if min(self.pe_mj, self.gwp_kgco2eq, self.adp_kgsbeq) < 0:
            raise ConfigError("impact factors must be non-negative")

    def scaled(self, k: float) -> ImpactTriple:
        return ImpactTriple(self.pe_mj * k, self.gwp_kgco2eq * k, self.adp_kgsbeq * k)

    def plus(self, other: ImpactTriple) -> ImpactTriple:
        return ImpactTriple(self.pe_mj + other.pe_mj, self.gwp_kgco2eq + other.gwp_kgco2eq,
                            self.adp_kgsbeq + other.adp_kgsbeq)


@dataclass(frozen=True)
class FamilyFactors:
    """``base`` is per unit (per kg for PSUs); ``die`` is per cm2 of die."""

    base: ImpactTriple
    die: ImpactTriple | None = None
    adp_basis: AdpBasis = AdpBasis.ELEMENTS_AND_FOSSIL


@dataclass(frozen=True)
class EmbodiedFactors:
    families: Mapping[EmbodiedFamily, FamilyFactors]

    def __post_init__(self) -> None:
        for fam, f in self.families.items():
            if fam in CONSTANT_FAMILIES and f.die is not None:
                raise ConfigError(f"{fam.value}: constant-impact family cannot carry a die term")
            if fam in (EmbodiedFamily.CPU, EmbodiedFamily.RAM, EmbodiedFamily.SSD) and f.die is None:
                raise ConfigError(f"{fam.value}: die factor is required")

    def __getitem__(self, family: EmbodiedFamily) -> FamilyFactors:
        try:
            return self.families[family]
        except KeyError:
            raise ConfigError(f"no embodied factors for family {family.value!r}") from None


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    family: EmbodiedFamily
    quantity_per_node: int
    die_size_cm2: float | None = None
    capacity_gb: float | None = None
    density_gb_per_cm2: float | None = None
    weight_kg: float | None = None
    constant_impact: ImpactTriple | None = None  # EXTRA family only
    adp_basis: AdpBasis | None = None  # EXTRA family only

    def __post_init__(self) -> None:
        if isinstance(self.quantity_per_node, bool) or not isinstance(self.quantity_per_node, int) \
                or self.quantity_per_node < 1:
            raise ComponentSpecError(f"{self.name}: quantity per node must be an integer >= 1")
        for fname in _REQUIRED_FIELDS.get(self.family, ()):
            v = getattr(self, fname)
            if v is None or not v > 0:
                raise ComponentSpecError(f"{self.name}: {self.family.value} needs a positive {fname}")
        if self.family is EmbodiedFamily.EXTRA and self.constant_impact is None:
            raise ComponentSpecError(f"{self.name}: extra components need a constant_impact")


_REQUIRED_FIELDS: dict[EmbodiedFamily, tuple[str, ...]] = {
    EmbodiedFamily.CPU: ("die_size_cm2",),
    EmbodiedFamily.RAM: ("capacity_gb", "density_gb_per_cm2"),
    EmbodiedFamily.SSD: ("capacity_gb", "density_gb_per_cm2"),
    EmbodiedFamily.PSU: ("weight_kg",),
}


@dataclass(frozen=True)
class AllocationParams:
    lifespan_hours: float = 4 * 8760.0
    utilization_rate: float = 0.6

    def __post_init__(self) -> None:
        if not self.lifespan_hours > 0:
            raise ConfigError("lifespan must be positive")
        if not 0.0 < self.utilization_rate <= 1.0:
            raise ConfigError("utilization rate must lie in (0, 1]")

    @property
    def duration_hours(self) -> float:
        """Hours of use over the hardware lifetime."""
        return self.lifespan_hours * self.utilization_rate


def _vector(t: ImpactTriple, basis: AdpBasis) -> ImpactVector:
    return ImpactVector(t.pe_mj, t.gwp_kgco2eq, t.adp_kgsbeq, None, basis)


def unit_impact(spec: ComponentSpec, f: EmbodiedFactors) -> ImpactVector:
    """Production impact of one unit. Water is not assessed."""
    fam = spec.family
    if fam is EmbodiedFamily.EXTRA:
        return _vector(spec.constant_impact, spec.adp_basis or AdpBasis.ELEMENTS_AND_FOSSIL)  # type: ignore[arg-type]
    ff = f[fam]
    if fam is EmbodiedFamily.CPU:
        t = ff.base.plus(ff.die.scaled(spec.die_size_cm2))  # type: ignore[union-attr,arg-type]
    elif fam in (EmbodiedFamily.RAM, EmbodiedFamily.SSD):
        area = spec.capacity_gb / spec.density_gb_per_cm2  # type: ignore[operator]
        t = ff.base.plus(ff.die.scaled(area))  # type: ignore[union-attr]
    elif fam is EmbodiedFamily.PSU:
        t = ff.base.scaled(spec.weight_kg)  # type: ignore[arg-type]
    else:
        t = ff.base
    return _vector(t, ff.adp_basis)


def allocate(c: ComputeQuantity, a: AllocationParams, q_hw: int, q_gpu: int, unit: ImpactVector) -> ImpactVector:
    """Share of ``q_hw`` units' production impact used by ``c`` GPU-hours."""
    if q_gpu < 1:
        raise ConfigError("q_gpu must be at least 1")
    return unit.scale((c.gpu_hours / a.duration_hours) * (q_hw / q_gpu))


@dataclass(frozen=True)
class ComponentEmbodied:
    name: str
    family: EmbodiedFamily
    quantity_per_node: int
    unit: ImpactVector
    allocated: ImpactVector


@dataclass(frozen=True)
class NodeEmbodied:
    components: tuple[ComponentEmbodied, ...]

    @property
    def total(self) -> ImpactVector:
        return sum_impacts((c.allocated for c in self.components), widen=True)

    def __getitem__(self, name: str) -> ComponentEmbodied:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def shares(self, indicator: str) -> dict[str, float]:
        """Fraction of the node total per component for 'pe', 'gwp' or 'adp'."""
        vals = {c.name: c.allocated.get(indicator) or 0.0 for c in self.components}
        total = math.fsum(vals.values())
        return {k: (v / total if total > 0 else 0.0) for k, v in vals.items()}


def node_embodied(cluster, c: ComputeQuantity, a: AllocationParams | None = None) -> NodeEmbodied:
    """Allocated impacts of every component of ``cluster``'s node.

    ``cluster`` needs ``components``, ``factors``, ``allocation`` and ``q_gpu``.
    """
    return embodied_components(cluster.components, cluster.factors, c,
                               a if a is not None else cluster.allocation, cluster.q_gpu)


def embodied_components(components: Sequence[ComponentSpec], factors: EmbodiedFactors, c: ComputeQuantity,
                        a: AllocationParams, q_gpu: int | None = None) -> NodeEmbodied:
    present = {s.family for s in components}
    missing = [f.value for f in REQUIRED_FAMILIES if f not in present]
    if missing:
        raise ConfigError(f"node is missing component famil(ies): {', '.join(missing)}")
    names = [s.name for s in components]
    if len(set(names)) != len(names):
        raise ConfigError("component names must be unique")
    if q_gpu is None:
        q_gpu = sum(s.quantity_per_node for s in components if s.family is EmbodiedFamily.GPU)
    out = []
    for s in components:
        unit = unit_impact(s, factors)
        out.append(ComponentEmbodied(s.name, s.family, s.quantity_per_node, unit,
                                     allocate(c, a, s.quantity_per_node, q_gpu, unit)))
    return NodeEmbodied(tuple(out))
