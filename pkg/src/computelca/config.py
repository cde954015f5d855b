"""Cluster configuration: loading, layering, and path-addressed edits.

Layers, lowest first: the packaged reference file, an optional user file
(deep-merged), then ``path=value`` overrides. Lists of objects carrying a
``name`` key merge item by item; other lists are replaced.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

from .domain import AdpBasis, ComputeQuantity
from .embodied import (
    AllocationParams,
    ComponentSpec,
    EmbodiedFactors,
    EmbodiedFamily,
    FamilyFactors,
    ImpactTriple,
)
from .errors import ConfigError, SweepError
from .operational import (
    ComponentKind,
    ComponentPowerModel,
    ConstantPower,
    DatacenterParams,
    GridProfile,
    UtilizationScaled,
)

REFERENCE_CONFIG_NAME = "nabuchodonosor-fr"


def reference_config_path() -> Path:
    return Path(str(resources.files("computelca") / "data" / "configs" / f"{REFERENCE_CONFIG_NAME}.json"))


def reference_config_dict() -> dict:
    return json.loads(reference_config_path().read_text(encoding="utf-8"))


def resolve_config_path(path: str | Path) -> Path:
    """Accept paths with or without the ``.json`` suffix."""
    p = Path(path)
    if p.is_file():
        return p
    alt = p.with_name(p.name + ".json")
    if alt.is_file():
        return alt
    raise ConfigError(f"config file not found: {path}")


def read_config_file(path: str | Path) -> dict:
    p = resolve_config_path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be an object")
    return data


def _named(items: object) -> bool:
    return isinstance(items, list) and all(isinstance(i, dict) and "name" in i for i in items)


def deep_merge(base: Any, over: Any) -> Any:
    if isinstance(base, dict) and isinstance(over, dict):
        out = dict(base)
        for k, v in over.items():
            out[k] = deep_merge(base[k], v) if k in base else copy.deepcopy(v)
        return out
    if _named(base) and _named(over):
        out = [dict(i) for i in base]
        index = {i["name"]: n for n, i in enumerate(out)}
        for item in over:
            if item["name"] in index:
                out[index[item["name"]]] = deep_merge(out[index[item["name"]]], item)
            else:
                out.append(copy.deepcopy(item))
        return out
    return copy.deepcopy(over)


def _step(node: Any, seg: str, path: str) -> Any:
    if isinstance(node, dict):
        if seg not in node:
            raise KeyError(path)
        return node[seg]
    if isinstance(node, list):
        for item in node:
            if isinstance(item, dict) and item.get("name") == seg:
                return item
        if seg.isdigit() and int(seg) < len(node):
            return node[int(seg)]
    raise KeyError(path)


def get_path(data: Mapping, path: str) -> Any:
    node: Any = data
    for seg in path.split("."):
        node = _step(node, seg, path)
    return node


def set_path(data: dict, path: str, value: Any) -> dict:
    """Return a copy of ``data`` with ``path`` set. The path must exist."""
    out = copy.deepcopy(data)
    *parents, leaf = path.split(".")
    node: Any = out
    for seg in parents:
        node = _step(node, seg, path)
    if isinstance(node, dict):
        if leaf not in node:
            raise KeyError(path)
        node[leaf] = value
    elif isinstance(node, list) and leaf.isdigit() and int(leaf) < len(node):
        node[int(leaf)] = value
    else:
        raise KeyError(path)
    return out


def set_numeric(data: dict, path: str, value: float) -> dict:
    try:
        current = get_path(data, path)
    except KeyError:
        raise SweepError(f"no configuration field at {path!r}") from None
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise SweepError(f"{path!r} is not a numeric field")
    return set_path(data, path, value)


def parse_override(text: str) -> tuple[str, Any]:
    """``a.b=1.5`` to (``a.b``, 1.5). Values are JSON, falling back to strings."""
    path, sep, raw = text.partition("=")
    if not sep or not path:
        raise ConfigError(f"override must look like path=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path.strip(), value


def layered_config(path: str | Path | None = None, overrides: Iterable[tuple[str, Any]] = ()) -> dict:
    data = reference_config_dict()
    if path is not None:
        data = deep_merge(data, read_config_file(path))
    for key, value in overrides:
        try:
            data = set_path(data, key, value)
        except KeyError:
            raise ConfigError(f"override targets unknown field {key!r}") from None
    return data


@dataclass(frozen=True)
class ClusterConfig:
    name: str
    compute: ComputeQuantity
    power_models: tuple[ComponentPowerModel, ...]
    datacenter: DatacenterParams
    grid: GridProfile
    grids: tuple[GridProfile, ...]
    components: tuple[ComponentSpec, ...]
    factors: EmbodiedFactors
    allocation: AllocationParams
    raw: Mapping[str, Any] = field(compare=False, repr=False, default_factory=dict)

    @property
    def q_gpu(self) -> int:
        return self.power_model(ComponentKind.GPU).quantity_per_node

    def power_model(self, kind: ComponentKind) -> ComponentPowerModel:
        for m in self.power_models:
            if m.kind is kind:
                return m
        raise ConfigError(f"no power model for {kind.value}")

    def grid_by_name(self, name: str) -> GridProfile:
        for g in self.grids:
            if g.name == name:
                return g
        raise ConfigError(f"unknown grid {name!r}")

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def with_value(self, path: str, value: float) -> ClusterConfig:
        return build_cluster(set_numeric(dict(self.raw), path, value))


def config_hash(data: Mapping) -> str:
    canon = json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(canon).hexdigest()


def _num(obj: Mapping, key: str, where: str, default: Any = ...) -> float:
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{where}: missing {key!r}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    return float(v)


def _int(obj: Mapping, key: str, where: str) -> int:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key} must be an integer")
    return v


def _power_models(node: Mapping) -> tuple[ComponentPowerModel, ...]:
    power = node.get("power")
    if not isinstance(power, dict):
        raise ConfigError("node.power must be an object")
    unknown = sorted(set(power) - {k.value for k in ComponentKind})
    if unknown:
        raise ConfigError(f"node.power has unknown component(s): {', '.join(unknown)}")
    models: dict[ComponentKind, ComponentPowerModel] = {}
    pending_other = None
    for kind in ComponentKind:
        entry = power.get(kind.value)
        where = f"node.power.{kind.value}"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: missing power model")
        q = _int(entry, "quantity", where)
        if "tdp_w" in entry:
            mode = UtilizationScaled(_num(entry, "tdp_w", where), _num(entry, "utilization", where))
        elif "power_w" in entry:
            mode = ConstantPower(_num(entry, "power_w", where))
        elif kind is ComponentKind.OTHER:
            pending_other = q
            continue
        else:
            raise ConfigError(f"{where}: needs tdp_w/utilization or power_w")
        models[kind] = ComponentPowerModel(kind, q, mode)
    if pending_other is not None:
        total = _num(node, "total_power_w", "node", None)
        if total is None:
            raise ConfigError("node.power.other needs power_w, or node.total_power_w to derive it")
        rated = sum(m.quantity_per_node * (m.mode.tdp_w if isinstance(m.mode, UtilizationScaled) else m.mode.power_w)
                    for m in models.values())
        p_other = (total - rated) / pending_other
        if not p_other > 0:
            raise ConfigError(f"derived other-hardware power is {p_other:g} W; total_power_w is too small")
        models[ComponentKind.OTHER] = ComponentPowerModel(ComponentKind.OTHER, pending_other, ConstantPower(p_other))
    return tuple(models[k] for k in ComponentKind)


def _triple(obj: Any, where: str) -> ImpactTriple:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    return ImpactTriple(_num(obj, "pe_mj", where), _num(obj, "gwp_kgco2eq", where), _num(obj, "adp_kgsbeq", where))


def _basis(value: Any, where: str) -> AdpBasis:
    try:
        return AdpBasis(value)
    except ValueError:
        raise ConfigError(f"{where}: unknown ADP basis {value!r}") from None


def _factors(data: Any) -> EmbodiedFactors:
    if not isinstance(data, dict):
        raise ConfigError("embodied_factors must be an object")
    fams: dict[EmbodiedFamily, FamilyFactors] = {}
    for key, entry in data.items():
        where = f"embodied_factors.{key}"
        try:
            fam = EmbodiedFamily(key)
        except ValueError:
            raise ConfigError(f"{where}: unknown component family") from None
        if not isinstance(entry, dict):
            raise ConfigError(f"{where} must be an object")
        die = _triple(entry["die"], f"{where}.die") if entry.get("die") is not None else None
        fams[fam] = FamilyFactors(_triple(entry.get("base"), f"{where}.base"), die,
                                  _basis(entry.get("adp_basis", "ADPe+ADPf"), where))
    return EmbodiedFactors(fams)


_SPEC_FIELDS = ("die_size_cm2", "capacity_gb", "density_gb_per_cm2", "weight_kg")


def _components(items: Any) -> tuple[ComponentSpec, ...]:
    if not isinstance(items, list):
        raise ConfigError("node.components must be a list")
    out = []
    for n, item in enumerate(items):
        where = f"node.components[{n}]"
        if not isinstance(item, dict) or "name" not in item:
            raise ConfigError(f"{where} must be an object with a name")
        try:
            fam = EmbodiedFamily(item.get("family"))
        except ValueError:
            raise ConfigError(f"{where}: unknown family {item.get('family')!r}") from None
        kwargs = {k: _num(item, k, where, None) for k in _SPEC_FIELDS}
        const = _triple(item["constant_impact"], f"{where}.constant_impact") if "constant_impact" in item else None
        basis = _basis(item["adp_basis"], where) if "adp_basis" in item else None
        out.append(ComponentSpec(str(item["name"]), fam, _int(item, "quantity", where),
                                 constant_impact=const, adp_basis=basis, **kwargs))
    return tuple(out)


def grid_from_dict(obj: Any) -> GridProfile:
    if not isinstance(obj, dict) or not isinstance(obj.get("name"), str):
        raise ConfigError("each grid needs a string name")
    where = f"grids.{obj['name']}"
    mix = obj.get("energy_mix")
    try:
        return GridProfile(
            name=obj["name"],
            ci_g_per_kwh=_num(obj, "ci_g_per_kwh", where),
            ewif_l_per_kwh=_num(obj, "ewif_l_per_kwh", where),
            adpf_mj_per_kwh=_num(obj, "adpf_mj_per_kwh", where, None),
            adpe_kgsbeq_per_kwh=_num(obj, "adpe_kgsbeq_per_kwh", where, None),
            renewable_share=_num(obj, "renewable_share", where, None),
            energy_mix=dict(mix) if mix is not None else None,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def build_cluster(data: Mapping[str, Any]) -> ClusterConfig:
    """Validate a fully layered config dict and build typed values."""
    try:
        node = data["node"]
        dc = data["datacenter"]
        alloc = data.get("allocation", {})
        grids = tuple(grid_from_dict(g) for g in data.get("grids", []))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"incomplete configuration: {exc}") from None
    names = [g.name for g in grids]
    if len(set(names)) != len(names):
        raise ConfigError("grid names must be unique")
    models = _power_models(node)
    components = _components(node.get("components"))
    q_gpu = models[0].quantity_per_node
    q_gpu_emb = sum(c.quantity_per_node for c in components if c.family is EmbodiedFamily.GPU)
    if q_gpu_emb and q_gpu_emb != q_gpu:
        raise ConfigError(f"GPU count differs between power model ({q_gpu}) and components ({q_gpu_emb})")
    grid_name = data.get("grid")
    by_name = {g.name: g for g in grids}
    if grid_name not in by_name:
        raise ConfigError(f"operating grid {grid_name!r} is not among the configured grids")
    if not isinstance(dc, dict):
        raise ConfigError("datacenter must be an object")
    return ClusterConfig(
        name=str(data.get("name", "unnamed")),
        compute=ComputeQuantity(_num(data, "compute_gpu_hours", "config")),
        power_models=models,
        datacenter=DatacenterParams(_num(dc, "pue", "datacenter"), _num(dc, "wue_l_per_kwh", "datacenter"),
                                    _num(dc, "o_cluster", "datacenter")),
        grid=by_name[grid_name],
        grids=grids,
        components=components,
        factors=_factors(data.get("embodied_factors")),
        allocation=AllocationParams(_num(alloc, "lifespan_hours", "allocation", 35040.0),
                                    _num(alloc, "utilization_rate", "allocation", 0.6)),
        raw=copy.deepcopy(dict(data)),
    )


def load_config(path: str | Path | None = None, overrides: Iterable[tuple[str, Any]] = ()) -> ClusterConfig:
    try:
        return build_cluster(layered_config(path, overrides))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def reference_config() -> ClusterConfig:
    return load_config()
