from __future__ import annotations

import pytest

from computelca.assessment import assess
from computelca.domain import AdpBasis, ComputeQuantity
from computelca.operational import ComponentKind

import golden

K = ComponentKind
COLUMNS = {"GPU": K.GPU, "CPU": K.CPU, "RAM": K.RAM, "Other": K.OTHER}
INDICATOR = {"pe": "pe_mj", "gwp": "gwp_kgco2eq", "adp": "adp_kgsbeq"}
TABLES = {"pe": golden.IMPACTS_PE, "gwp": golden.IMPACTS_GWP, "adp": golden.IMPACTS_ADP}


@pytest.fixture(scope="module")
def a(cluster):
    return assess(cluster)


def cell(a, indicator, scope, column):
    attr = INDICATOR[indicator]
    if scope == "Embodied":
        v = a.embodied.total if column == "Total" else a.embodied[column].allocated
        return getattr(v, attr)
    if column == "Total":
        s = a.total
    else:
        s = a.groups[COLUMNS[column]]
    return getattr({"Datacenter": s.datacenter, "Computation": s.computation, "Total": s.total}[scope], attr)


def cases():
    for ind, table in TABLES.items():
        for scope, row in table.items():
            for col, v in row.items():
                yield pytest.param(ind, scope, col, v, id=f"{ind}-{scope}-{col}")


@pytest.mark.parametrize("indicator, scope, column, expected", list(cases()))
def test_impact_cells_within_two_percent(a, indicator, scope, column, expected):
    assert cell(a, indicator, scope, column) == pytest.approx(expected, rel=0.02)


@pytest.mark.parametrize("row", ["cooling", "electricity", "total"])
@pytest.mark.parametrize("column", ["GPU", "CPU", "RAM", "Other", "Total"])
def test_water_cells_within_two_percent(a, row, column):
    if column == "Total":
        s = a.total
    else:
        s = a.groups[COLUMNS[column]]
    got = {"cooling": s.wc_cooling_liters, "electricity": s.wc_electricity_liters,
           "total": s.wc_cooling_liters + s.wc_electricity_liters}[row]
    assert got == pytest.approx(golden.WATER[row][column], rel=0.02)


def test_headline_numbers(a):
    t = a.total.total
    assert t.gwp_kgco2eq == pytest.approx(3.19e5, rel=0.005)
    assert a.groups[K.GPU].computation.gwp_kgco2eq == pytest.approx(8.88e4, rel=1e-3)
    emb_share = a.total.embodied.gwp_kgco2eq / t.gwp_kgco2eq
    assert round(100 * emb_share) == 33
    assert a.total.embodied.wc_liters is None
    assert a.total.total.wc_liters == pytest.approx(a.water.total)


def test_scope_bases(a):
    assert a.total.computation.adp_basis is AdpBasis.ELEMENTS
    assert a.total.embodied.adp_basis is AdpBasis.MIXED
    assert a.total.total.adp_basis is AdpBasis.MIXED


def test_groups_partition_scopes(a):
    assert sum(g.computation.gwp_kgco2eq for g in a.groups.values()) == pytest.approx(a.gwp.computation_total)
    assert sum(g.embodied.gwp_kgco2eq for g in a.groups.values()) == pytest.approx(a.embodied.total.gwp_kgco2eq)


def test_zero_compute_is_all_zero(cluster):
    z = assess(cluster, ComputeQuantity(0)).total.total
    assert (z.pe_mj, z.gwp_kgco2eq, z.adp_kgsbeq, z.wc_liters) == (0, 0, 0, 0)
