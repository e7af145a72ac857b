"""File formats: versioned JSON for networks/instances/reports and the
flat key-value config format.

All emitters are byte-stable for fixed inputs (sorted keys, fixed
separators, trailing newline). Loaders reject unknown fields.

Config files are plain ``key = value`` lines; ``#`` starts a comment.
Mappings are comma-separated ``key:value`` pairs, lists are
comma-separated values. See README for the full key reference.
"""

from __future__ import annotations

import json

from .generator import GeneratorConfig
from .instance import (Category, CostSchedule, InstanceNode, InterdictionInstance,
                       NodeKind, RestructArc)
from .model import (Age, Arc, ArcKind, Operation, Person, Pod, Role,
                    TraffickingNetwork)

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Malformed or unknown-versioned document."""


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _check_keys(d: dict, what: str, required: set[str], optional: set[str] = frozenset()):
    if not isinstance(d, dict):
        raise SchemaError(f"{what}: expected an object")
    unknown = set(d) - required - set(optional)
    if unknown:
        raise SchemaError(f"{what}: unknown fields {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise SchemaError(f"{what}: missing fields {sorted(missing)}")


def _check_version(d: dict, what: str):
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{what}: unsupported schema_version "
                          f"{d.get('schema_version')!r}")


# --------------------------------------------------------------------------
# generator config


_CONFIG_FIELDS = {
    "victim_count_pmf": "int_map",
    "bottom_prob": "int_map",
    "partition_weight": "str",
    "minor_prob": "float",
    "mixed_pair_prob": "float",
    "pod_to_trafficker_prob": "str_map",
    "pod_to_bottom_prob": "str_map",
    "intra_op_social_prob": "str_map",
    "cross_op_social_prob": "str_map",
    "ws_neighbors": "int",
    "ws_rewire": "float",
    "seed": "int",
}


def config_to_dict(cfg: GeneratorConfig) -> dict:
    return {
        "victim_count_pmf": {str(k): v for k, v in sorted(cfg.victim_count_pmf.items())},
        "bottom_prob": {str(k): v for k, v in sorted(cfg.bottom_prob.items())},
        "partition_weight": cfg.partition_weight,
        "minor_prob": cfg.minor_prob,
        "mixed_pair_prob": cfg.mixed_pair_prob,
        "pod_to_trafficker_prob": dict(sorted(cfg.pod_to_trafficker_prob.items())),
        "pod_to_bottom_prob": dict(sorted(cfg.pod_to_bottom_prob.items())),
        "intra_op_social_prob": dict(sorted(cfg.intra_op_social_prob.items())),
        "cross_op_social_prob": dict(sorted(cfg.cross_op_social_prob.items())),
        "ws_neighbors": cfg.ws_neighbors,
        "ws_rewire": cfg.ws_rewire,
        "seed": cfg.seed,
    }


def config_from_dict(d: dict) -> GeneratorConfig:
    _check_keys(d, "generator config", set(), optional=set(_CONFIG_FIELDS))
    kwargs = {}
    for key, value in d.items():
        kind = _CONFIG_FIELDS[key]
        if kind == "int_map":
            kwargs[key] = {int(k): float(v) for k, v in value.items()}
        elif kind == "str_map":
            kwargs[key] = {str(k): float(v) for k, v in value.items()}
        elif kind == "int":
            kwargs[key] = int(value)
        elif kind == "float":
            kwargs[key] = float(value)
        else:
            kwargs[key] = str(value)
    cfg = GeneratorConfig(**kwargs)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# flat key-value files


def parse_kv_text(text: str, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{what} line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise SchemaError(f"{what} line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _parse_typed(raw: dict[str, str], schema: dict[str, str], what: str) -> dict:
    unknown = set(raw) - set(schema)
    if unknown:
        raise SchemaError(f"{what}: unknown keys {sorted(unknown)}")
    out: dict = {}
    for key, text in raw.items():
        kind = schema[key]
        try:
            if kind == "int":
                out[key] = int(text)
            elif kind == "float":
                out[key] = float(text)
            elif kind == "bool":
                if text.lower() not in ("true", "false"):
                    raise ValueError(text)
                out[key] = text.lower() == "true"
            elif kind == "str":
                out[key] = text
            elif kind == "int_list":
                out[key] = [int(x) for x in text.split(",") if x.strip() != ""]
            elif kind == "int_map":
                out[key] = dict(
                    (int(k), float(v))
                    for k, v in (pair.split(":") for pair in text.split(",")))
            elif kind == "str_map":
                out[key] = dict(
                    (k.strip(), float(v))
                    for k, v in (pair.split(":") for pair in text.split(",")))
            else:  # pragma: no cover
                raise AssertionError(kind)
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"{what}: bad value for {key!r}: {text!r}") from exc
    return out


def load_generator_config_text(text: str) -> GeneratorConfig:
    raw = parse_kv_text(text, "generator config")
    values = _parse_typed(raw, _CONFIG_FIELDS, "generator config")
    cfg = GeneratorConfig(**values)
    cfg.validate()
    return cfg


_SCHEDULE_FIELDS = {
    "r_trafficker": "float", "r_bottom": "float", "r_victim": "float",
    "d_bottom": "float", "d_victim": "float", "r_min": "float",
    "b_restructure": "float", "c_known_victim": "float",
    "c_bottom_transfer": "float", "c_recruit": "float", "c_backup": "float",
    "c_promote": "float", "c_assign_promoted": "float",
    "recruitable_fraction": "float", "backup_threshold": "int",
    "promotable_fraction": "float", "trafficker_capacity_slack": "float",
    "latent_interdictable": "bool",
}


def load_schedule_text(text: str) -> CostSchedule:
    raw = parse_kv_text(text, "cost schedule")
    values = _parse_typed(raw, _SCHEDULE_FIELDS, "cost schedule")
    sched = CostSchedule(**values)
    sched.validate()
    return sched


def schedule_to_dict(s: CostSchedule) -> dict:
    return {k: getattr(s, k) for k in _SCHEDULE_FIELDS}


def schedule_from_dict(d: dict) -> CostSchedule:
    _check_keys(d, "cost schedule", set(_SCHEDULE_FIELDS))
    sched = CostSchedule(**d)
    sched.validate()
    return sched


# --------------------------------------------------------------------------
# networks


def network_to_dict(net: TraffickingNetwork) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "network",
        "generation_seed": net.generation_seed,
        "config": net.config_snapshot,
        "persons": [
            {"id": p.id, "role": p.role.value, "age": p.age.value,
             "operation": p.operation}
            for p in sorted(net.persons.values(), key=lambda p: p.id)
        ],
        "operations": [
            {"index": op.index, "trafficker": op.trafficker, "bottom": op.bottom,
             "pods": [list(pod.members) for pod in op.pods],
             "trafficker_pods": sorted(op.trafficker_pods),
             "bottom_pods": sorted(op.bottom_pods)}
            for op in net.operations
        ],
        "arcs": [[a.u, a.v, a.kind.value] for a in net.arcs],
        "trafficker_social": [[u, v] for (u, v) in net.trafficker_social],
    }


def network_from_dict(d: dict) -> TraffickingNetwork:
    _check_version(d, "network")
    _check_keys(d, "network",
                {"schema_version", "kind", "generation_seed", "config",
                 "persons", "operations", "arcs", "trafficker_social"})
    if d["kind"] != "network":
        raise SchemaError(f"expected kind 'network', got {d['kind']!r}")
    persons = {}
    for p in d["persons"]:
        _check_keys(p, "person", {"id", "role", "age", "operation"})
        persons[p["id"]] = Person(p["id"], Role(p["role"]), Age(p["age"]),
                                  p["operation"])
    operations = []
    for o in d["operations"]:
        _check_keys(o, "operation",
                    {"index", "trafficker", "bottom", "pods",
                     "trafficker_pods", "bottom_pods"})
        operations.append(Operation(
            index=o["index"], trafficker=o["trafficker"], bottom=o["bottom"],
            pods=[Pod(tuple(m)) for m in o["pods"]],
            trafficker_pods=frozenset(o["trafficker_pods"]),
            bottom_pods=frozenset(o["bottom_pods"])))
    arcs = [Arc(u, v, ArcKind(kind)) for (u, v, kind) in d["arcs"]]
    return TraffickingNetwork(
        operations=operations,
        persons=persons,
        arcs=arcs,
        trafficker_social=[(u, v) for (u, v) in d["trafficker_social"]],
        generation_seed=d["generation_seed"],
        config_snapshot=d["config"],
    )


# --------------------------------------------------------------------------
# instances


def instance_to_dict(inst: InterdictionInstance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "instance",
        "nodes": [
            {"id": n.id, "node_kind": n.kind.value, "capacity": n.capacity,
             "cost": n.cost, "operation": n.operation}
            for n in sorted(inst.nodes.values(), key=lambda n: n.id)
        ],
        "arcs": [[t, h, c] for (t, h, c) in inst.arcs],
        "restruct_arcs": [
            {"tail": a.tail, "head": a.head, "owner": a.owner, "cost": a.cost,
             "category": a.category.value, "in_allowed": a.in_allowed,
             "gate": a.gate}
            for a in inst.restruct_arcs
        ],
        "recruitables": [[rid, list(elig)]
                         for rid, elig in sorted(inst.recruitables.items())],
        "backups": [list(pair) for pair in inst.backups],
        "promotables": [list(trip) for trip in inst.promotables],
        "reductions": [[t, k, d] for (t, k), d in sorted(inst.reductions.items())],
        "schedule": schedule_to_dict(inst.schedule),
        "big_m": inst.big_m,
        "num_victims": inst.num_victims,
        "num_bottoms": inst.num_bottoms,
        "source": inst.source,
        "sink": inst.sink,
    }


def instance_from_dict(d: dict) -> InterdictionInstance:
    _check_version(d, "instance")
    _check_keys(d, "instance",
                {"schema_version", "kind", "nodes", "arcs", "restruct_arcs",
                 "recruitables", "backups", "promotables", "reductions",
                 "schedule", "big_m", "num_victims", "num_bottoms",
                 "source", "sink"})
    if d["kind"] != "instance":
        raise SchemaError(f"expected kind 'instance', got {d['kind']!r}")
    nodes = {}
    for n in d["nodes"]:
        _check_keys(n, "instance node",
                    {"id", "node_kind", "capacity", "cost", "operation"})
        nodes[n["id"]] = InstanceNode(n["id"], NodeKind(n["node_kind"]),
                                      n["capacity"], n["cost"], n["operation"])
    restruct = []
    for a in d["restruct_arcs"]:
        _check_keys(a, "restruct arc",
                    {"tail", "head", "owner", "cost", "category", "in_allowed",
                     "gate"})
        restruct.append(RestructArc(a["tail"], a["head"], a["owner"], a["cost"],
                                    Category(a["category"]), a["in_allowed"],
                                    a["gate"]))
    return InterdictionInstance(
        nodes=nodes,
        arcs=[(t, h, c) for (t, h, c) in d["arcs"]],
        restruct_arcs=restruct,
        recruitables={rid: tuple(elig) for rid, elig in d["recruitables"]},
        backups=[tuple(pair) for pair in d["backups"]],
        promotables=[tuple(trip) for trip in d["promotables"]],
        reductions={(t, k): v for (t, k, v) in d["reductions"]},
        schedule=schedule_from_dict(d["schedule"]),
        big_m=d["big_m"],
        num_victims=d["num_victims"],
        num_bottoms=d["num_bottoms"],
        source=d["source"],
        sink=d["sink"],
    )


# --------------------------------------------------------------------------
# solve reports (emit only; wall time is deliberately omitted so outputs
# stay byte-identical across runs)


def report_to_dict(inst: InterdictionInstance, report) -> dict:
    plan = report.plan
    response = report.defender_response
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "solve_report",
        "objective": report.objective,
        "iterations": report.iterations,
        "bounds_trace": [[lo, up] for (lo, up) in report.bounds_trace],
        "interdiction": {
            "interdicted": sorted(plan.interdicted),
            "adjusted_costs": {str(t): c for t, c in sorted(plan.adjusted_costs.items())},
            "spent": plan.spent,
        },
        "restructuring": _response_dict(inst, response),
    }


def _response_dict(inst: InterdictionInstance, response) -> dict:
    return {
        "value": response.value,
        "optimal": response.optimal,
        "activated_out": [_arc_dict(inst, i) for i in sorted(response.plan.activated_out)],
        "activated_in": [_arc_dict(inst, i) for i in sorted(response.plan.activated_in)],
    }


def defender_report_to_dict(inst: InterdictionInstance, interdicted, response) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "defender_report",
        "interdicted": sorted(interdicted),
        "response": _response_dict(inst, response),
    }


def _arc_dict(inst: InterdictionInstance, idx: int) -> dict:
    a = inst.restruct_arcs[idx]
    return {"index": idx, "tail": a.tail, "head": a.head,
            "category": a.category.value, "cost": a.cost, "owner": a.owner}
