from __future__ import annotations

import json

import pytest

from computelca.config import (
    config_hash,
    deep_merge,
    load_config,
    parse_override,
    reference_config,
    reference_config_dict,
)
from computelca.errors import ConfigError
from computelca.operational import ComponentKind

from conftest import CONFIGS


def write(tmp_path, obj, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_reference_values(cluster):
    assert cluster.name == "nabuchodonosor-fr"
    assert cluster.compute.gpu_hours == 3_256_263
    assert cluster.grid.name == "FR"
    assert [g.name for g in cluster.grids] == ["SE", "FR", "US", "AU", "CN", "PL"]
    assert cluster.q_gpu == 8
    assert cluster.power_model(ComponentKind.OTHER).mode.watts == pytest.approx(3773.92)


def test_root_copy_loads_identically():
    assert load_config(CONFIGS / "nabuchodonosor-fr.json") == reference_config()


def test_partial_file_is_merged_over_reference(tmp_path):
    c = load_config(write(tmp_path, {"datacenter": {"pue": 1.4}, "node": {"components": [
        {"name": "RAM", "capacity_gb": 128}]}}))
    assert c.datacenter.pue == 1.4 and c.datacenter.o_cluster == 1.11
    ram = next(s for s in c.components if s.name == "RAM")
    assert ram.capacity_gb == 128 and ram.density_gb_per_cm2 == 2.66
    assert len(c.components) == 9


def test_deep_merge_keyed_lists():
    base = {"a": [{"name": "x", "v": 1}, {"name": "y", "v": 2}], "b": {"c": 1}}
    out = deep_merge(base, {"a": [{"name": "y", "v": 5}, {"name": "z"}], "b": {"d": 2}})
    assert out == {"a": [{"name": "x", "v": 1}, {"name": "y", "v": 5}, {"name": "z"}], "b": {"c": 1, "d": 2}}
    assert base["a"][1]["v"] == 2


def test_overrides():
    c = load_config(overrides=[parse_override("datacenter.pue=1.1"), parse_override("grid=SE")])
    assert c.datacenter.pue == 1.1 and c.grid.name == "SE"
    assert parse_override("name=hello") == ("name", "hello")
    with pytest.raises(ConfigError):
        parse_override("nothing")
    with pytest.raises(ConfigError):
        load_config(overrides=[("datacenter.nope", 1)])


def test_with_value_paths(cluster):
    assert cluster.with_value("node.components.RAM.capacity_gb", 32).components[2].capacity_gb == 32
    assert cluster.with_value("grids.FR.ci_g_per_kwh", 50).grid.ci_g_per_kwh == 50
    assert cluster.with_value("node.power.gpu.utilization", 0.6).power_model(ComponentKind.GPU).mode.utilization \
        == 0.6


@pytest.mark.parametrize("over", [
    {"datacenter": {"pue": 0.8}},
    {"grid": "XX"},
    {"allocation": {"utilization_rate": 0}},
    {"node": {"power": {"gpu": {"quantity": 4}}}},  # disagrees with embodied GPU count
    {"node": {"total_power_w": 100}},  # leaves nothing for other components
    {"grids": [{"name": "FR", "renewable_share": 1.5}]},
    {"node": {"components": [{"name": "CPU", "die_size_cm2": None}]}},
])
def test_invalid_configs(tmp_path, over):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, over))


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_hash_is_canonical(cluster):
    d = reference_config_dict()
    assert config_hash(d) == cluster.config_hash
    assert config_hash(json.loads(json.dumps(d, indent=4))) == cluster.config_hash
    assert cluster.with_value("datacenter.pue", 1.3).config_hash != cluster.config_hash
