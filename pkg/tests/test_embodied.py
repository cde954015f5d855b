from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from computelca.domain import AdpBasis, ComputeQuantity, ImpactVector
from computelca.embodied import (
    AllocationParams,
    ComponentSpec,
    EmbodiedFamily,
    ImpactTriple,
    allocate,
    embodied_components,
    node_embodied,
    unit_impact,
)
from computelca.errors import ComponentSpecError, ConfigError
from computelca.report import display

import golden

C = ComputeQuantity(3_256_263)
F = EmbodiedFamily


def spec(cluster, name):
    return next(s for s in cluster.components if s.name == name)


def test_worked_unit_examples(cluster):
    u = {s.name: unit_impact(s, cluster.factors) for s in cluster.components}
    assert u["CPU"].gwp_kgco2eq == pytest.approx(9.14 + 19.08 * 1.97)
    assert u["PSU"].gwp_kgco2eq == pytest.approx(3 * 24.3)
    assert u["RAM"].gwp_kgco2eq == pytest.approx(5.22 + 64 / 2.66 * 2.20)
    assert u["SSD1"].gwp_kgco2eq == pytest.approx(39.34)
    assert u["SSD2"].gwp_kgco2eq == pytest.approx(72.34)
    assert u["GPU"].adp_basis is AdpBasis.ELEMENTS
    assert u["CPU"].adp_basis is AdpBasis.ELEMENTS_AND_FOSSIL
    assert all(v.wc_liters is None for v in u.values())


@pytest.mark.parametrize("indicator", ["pe", "gwp", "adp"])
@pytest.mark.parametrize("name", golden.COMPONENTS)
def test_per_unit_table_to_three_figures(cluster, name, indicator):
    u = unit_impact(spec(cluster, name), cluster.factors)
    assert display(u.get(indicator)) == golden.PER_UNIT[indicator][name]


def test_allocation_examples(cluster):
    a = AllocationParams()
    assert a.duration_hours == 21024
    gpu = unit_impact(spec(cluster, "GPU"), cluster.factors)
    assert allocate(C, a, 8, 8, gpu).gwp_kgco2eq == pytest.approx(4.19e4, rel=0.005)
    ram = unit_impact(spec(cluster, "RAM"), cluster.factors)
    assert allocate(C, a, 32, 8, ram).gwp_kgco2eq == pytest.approx(3.60e4, rel=0.005)
    assert allocate(ComputeQuantity(0), a, 32, 8, ram) == ImpactVector(0, 0, 0, None, ram.adp_basis)


def test_allocation_identity_at_one_lifetime():
    u = ImpactVector(3.0, 5.0, 7.0, None)
    a = AllocationParams(1000, 0.5)
    assert allocate(ComputeQuantity(500), a, 4, 4, u) == u


@given(st.floats(0, 1e7), st.floats(0, 1e7))
def test_allocation_linear(c1, c2):
    u = ImpactVector(1.0, 2.0, 3.0, None)
    a = AllocationParams()
    s = allocate(ComputeQuantity(c1 + c2), a, 2, 8, u)
    parts = allocate(ComputeQuantity(c1), a, 2, 8, u) + allocate(ComputeQuantity(c2), a, 2, 8, u)
    assert s.gwp_kgco2eq == pytest.approx(parts.gwp_kgco2eq, rel=1e-12, abs=1e-12)


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_unit_impact_monotone(cluster, x, y):
    lo, hi = min(x, y), max(x, y)
    for field, name in (("die_size_cm2", "CPU"), ("capacity_gb", "RAM"), ("weight_kg", "PSU")):
        base = spec(cluster, name)
        kw = dict(base.__dict__)
        a = unit_impact(ComponentSpec(**{**kw, field: lo}), cluster.factors)
        b = unit_impact(ComponentSpec(**{**kw, field: hi}), cluster.factors)
        assert a.gwp_kgco2eq <= b.gwp_kgco2eq and a.pe_mj <= b.pe_mj and a.adp_kgsbeq <= b.adp_kgsbeq


def test_node_totals_and_shares(cluster):
    n = node_embodied(cluster, C)
    t = n.total
    assert t.gwp_kgco2eq == pytest.approx(1.05e5, rel=0.01)
    assert t.adp_kgsbeq == pytest.approx(7.95, rel=0.01)
    assert t.adp_basis is AdpBasis.MIXED and t.wc_liters is None
    shares = n.shares("adp")
    assert max(shares, key=shares.get) == "PSU"
    assert round(100 * shares["PSU"]) == 36


def test_spec_errors(cluster):
    with pytest.raises(ComponentSpecError):
        ComponentSpec("CPU", F.CPU, 2)
    with pytest.raises(ComponentSpecError):
        ComponentSpec("RAM", F.RAM, 32, capacity_gb=64)
    with pytest.raises(ComponentSpecError):
        ComponentSpec("GPU", F.GPU, 0)
    with pytest.raises(ConfigError):
        embodied_components([s for s in cluster.components if s.family is not F.PSU], cluster.factors, C,
                            AllocationParams(), 8)
    with pytest.raises(ConfigError):
        AllocationParams(utilization_rate=0)


def test_extra_constant_component(cluster):
    extra = ComponentSpec("NIC", F.EXTRA, 4, constant_impact=ImpactTriple(10, 1, 0.001))
    n = embodied_components(list(cluster.components) + [extra], cluster.factors, C, AllocationParams(), 8)
    base = node_embodied(cluster, C)
    assert n.total.gwp_kgco2eq == pytest.approx(base.total.gwp_kgco2eq + C.gpu_hours / 21024 * 0.5)
