"""Full life-cycle assessment of a compute budget on one cluster."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .config import ClusterConfig
from .domain import AdpBasis, ComputeQuantity, ImpactVector, ScopedImpact, sum_impacts
from .embodied import EmbodiedFamily, NodeEmbodied, node_embodied
from .operational import (
    ComponentKind,
    EnergyBreakdown,
    GridProfile,
    PerScope,
    WaterSplit,
    adpe_use,
    gwp,
    primary_energy,
    total_energy,
    water,
)

# Embodied families reported under each operational component column.
GROUP_OF_FAMILY: Mapping[EmbodiedFamily, ComponentKind] = {
    EmbodiedFamily.GPU: ComponentKind.GPU,
    EmbodiedFamily.CPU: ComponentKind.CPU,
    EmbodiedFamily.RAM: ComponentKind.RAM,
}


def group_of(family: EmbodiedFamily) -> ComponentKind:
    return GROUP_OF_FAMILY.get(family, ComponentKind.OTHER)


@dataclass(frozen=True)
class Assessment:
    compute: ComputeQuantity
    grid: GridProfile
    energy: EnergyBreakdown
    pe: PerScope
    gwp: PerScope
    adp: PerScope
    water: WaterSplit
    embodied: NodeEmbodied
    groups: Mapping[ComponentKind, ScopedImpact]

    @property
    def total(self) -> ScopedImpact:
        g = list(self.groups.values())
        return ScopedImpact(
            computation=sum_impacts(s.computation for s in g),
            datacenter=sum_impacts(s.datacenter for s in g),
            embodied=sum_impacts((s.embodied for s in g), widen=True),
            wc_cooling_liters=math.fsum(s.wc_cooling_liters for s in g),
            wc_electricity_liters=math.fsum(s.wc_electricity_liters for s in g),
        )


def assess(cluster: ClusterConfig, compute: ComputeQuantity | None = None,
           grid: GridProfile | None = None) -> Assessment:
    c = compute if compute is not None else cluster.compute
    g = grid if grid is not None else cluster.grid
    e = total_energy(c, cluster.power_models, cluster.datacenter)
    pe, gw, ad = primary_energy(e, g), gwp(e, g), adpe_use(e, g)
    w = water(e, cluster.datacenter, g)
    emb = node_embodied(cluster, c)
    dc_kwh = e.datacenter_kwh
    groups: dict[ComponentKind, ScopedImpact] = {}
    for k in ComponentKind:
        comp_wc = g.ewif_l_per_kwh * e.computation_kwh[k]
        dc_wc = g.ewif_l_per_kwh * dc_kwh[k] + w.cooling[k]
        members = [x.allocated for x in emb.components if group_of(x.family) is k]
        groups[k] = ScopedImpact(
            computation=ImpactVector(pe.computation[k], gw.computation[k], ad.computation[k], comp_wc,
                                     AdpBasis.ELEMENTS),
            datacenter=ImpactVector(pe.datacenter[k], gw.datacenter[k], ad.datacenter[k], dc_wc,
                                    AdpBasis.ELEMENTS),
            embodied=sum_impacts(members, widen=True) if members else ImpactVector.zero(water=False),
            wc_cooling_liters=w.cooling[k],
            wc_electricity_liters=w.electricity[k],
        )
    return Assessment(c, g, e, pe, gw, ad, w, emb, groups)
