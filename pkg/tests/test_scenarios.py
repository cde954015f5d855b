from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from computelca.assessment import assess
from computelca.domain import ComputeQuantity
from computelca.errors import ConfigError, SweepError
from computelca.operational import GridProfile
from computelca.scenarios import COMPUTE_PATH, ScenarioSet, location_scenarios, parse_values, sweep

import golden


@pytest.fixture(scope="module")
def locations(cluster):
    return {x.name: x for x in location_scenarios(ScenarioSet.from_config(cluster))}


@pytest.mark.parametrize("name", list(golden.LOCATIONS))
def test_locations_within_two_percent(locations, name):
    gwp, wc = golden.LOCATIONS[name]
    assert locations[name].gwp_kgco2eq == pytest.approx(gwp, rel=0.02)
    assert locations[name].wc_liters == pytest.approx(wc, rel=0.02)


def test_gwp_ranks_by_carbon_intensity(locations):
    by_ci = sorted(locations.values(), key=lambda x: x.ci_g_per_kwh)
    assert [x.name for x in by_ci] == sorted(locations, key=lambda n: locations[n].gwp_kgco2eq)
    assert max(locations.values(), key=lambda x: x.wc_liters).name == "SE"
    assert min(locations.values(), key=lambda x: x.wc_liters).name == "PL"


def test_cooling_water_is_location_independent(locations):
    assert len({round(x.wc_cooling_liters, 6) for x in locations.values()}) == 1


def test_base_grid_matches_assessment(cluster, locations):
    a = assess(cluster).total.operational
    assert locations["FR"].gwp_kgco2eq == pytest.approx(a.gwp_kgco2eq, rel=1e-12)
    assert locations["FR"].wc_liters == pytest.approx(a.wc_liters, rel=1e-12)


def test_duplicate_grids_rejected(cluster):
    g = GridProfile("X", 1, 1)
    with pytest.raises(ConfigError):
        ScenarioSet(cluster, cluster.compute, (g, g))


def test_pue_sweep_scales_datacenter_scope(cluster):
    lo, base = sweep("datacenter.pue", [1.0, 1.25], cluster)
    ratio = lo.impact.datacenter.gwp_kgco2eq / base.impact.datacenter.gwp_kgco2eq
    assert ratio == pytest.approx(0.11 / 0.3875)
    assert lo.impact.computation == base.impact.computation


def test_compute_sweep_is_linear(cluster):
    one, two = sweep(COMPUTE_PATH, [1e6, 2e6], cluster)
    assert two.impact.total.gwp_kgco2eq == pytest.approx(2 * one.impact.total.gwp_kgco2eq, rel=1e-12)


def test_utilization_sweep_scales_embodied(cluster):
    lo, hi = sweep("allocation.utilization_rate", [0.6, 1.0], cluster)
    assert hi.impact.embodied.gwp_kgco2eq == pytest.approx(0.6 * lo.impact.embodied.gwp_kgco2eq, rel=1e-12)
    assert hi.impact.operational == lo.impact.operational


def test_sweep_holds_compute_fixed(cluster):
    s = ScenarioSet.from_config(cluster, ComputeQuantity(1000))
    (p,) = sweep("datacenter.pue", [1.25], s)
    assert p.assessment.compute.gpu_hours == 1000


@pytest.mark.parametrize("path, values", [("datacenter.nope", [1.0]), ("datacenter.pue", [0.5]),
                                          ("node.components.XYZ.capacity_gb", [1.0]), ("datacenter.pue", ["a"])])
def test_bad_sweeps(cluster, path, values):
    with pytest.raises(SweepError):
        sweep(path, values, cluster)


def test_parse_values():
    assert parse_values("1, 2.5,3") == [1.0, 2.5, 3.0]
    with pytest.raises(SweepError):
        parse_values("1,x")


@given(st.floats(1.0, 2.0), st.floats(1.0, 2.0))
def test_pue_sweep_monotone(cluster, p1, p2):
    a, b = sweep("datacenter.pue", sorted([p1, p2]), cluster)
    assert a.impact.total.gwp_kgco2eq <= b.impact.total.gwp_kgco2eq * (1 + 1e-12)
