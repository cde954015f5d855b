"""What-if recomputation across grids and parameter values."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .assessment import Assessment, assess
from .config import ClusterConfig
from .domain import ComputeQuantity
from .errors import ConfigError, SweepError
from .operational import GridProfile, gwp, total_energy, water

COMPUTE_PATH = "compute_gpu_hours"


@dataclass(frozen=True)
class ScenarioSet:
    base: ClusterConfig
    compute: ComputeQuantity
    grids: tuple[GridProfile, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "grids", tuple(self.grids))
        names = [g.name for g in self.grids]
        if len(set(names)) != len(names):
            raise ConfigError("scenario grid names must be unique")

    @classmethod
    def from_config(cls, cluster: ClusterConfig, compute: ComputeQuantity | None = None) -> ScenarioSet:
        return cls(cluster, compute if compute is not None else cluster.compute, cluster.grids)


@dataclass(frozen=True)
class LocationImpact:
    """Operational impacts only. Cooling water does not depend on the grid."""

    name: str
    ci_g_per_kwh: float
    ewif_l_per_kwh: float
    gwp_kgco2eq: float
    wc_liters: float
    wc_cooling_liters: float
    wc_electricity_liters: float


def location_scenarios(s: ScenarioSet) -> list[LocationImpact]:
    e = total_energy(s.compute, s.base.power_models, s.base.datacenter)
    out = []
    for g in s.grids:
        w = water(e, s.base.datacenter, g)
        out.append(LocationImpact(g.name, g.ci_g_per_kwh, g.ewif_l_per_kwh, gwp(e, g).total, w.total,
                                  w.cooling_total, w.electricity_total))
    return out


@dataclass(frozen=True)
class SweepPoint:
    value: float
    assessment: Assessment

    @property
    def impact(self):
        return self.assessment.total


def sweep(path: str, values: Iterable[float], s: ScenarioSet | ClusterConfig) -> list[SweepPoint]:
    """Full reassessment per value with everything else held fixed.

    ``path`` is a dotted config path such as ``datacenter.pue`` or
    ``node.components.RAM.capacity_gb``. ``compute_gpu_hours`` sweeps the
    compute budget itself.
    """
    if isinstance(s, ClusterConfig):
        s = ScenarioSet.from_config(s)
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SweepError(f"sweep value {v!r} is not a number")
        if path == COMPUTE_PATH:
            out.append(SweepPoint(float(v), assess(s.base, ComputeQuantity(float(v)))))
            continue
        try:
            cluster = s.base.with_value(path, v)
        except (ValueError, KeyError, ConfigError) as exc:
            raise SweepError(f"{path}={v}: {exc}") from None
        out.append(SweepPoint(float(v), assess(cluster, s.compute)))
    return out


def parse_values(text: str) -> Sequence[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise SweepError(f"sweep values must be comma-separated numbers, got {text!r}") from None
