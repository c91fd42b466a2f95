"""JSON instance files.

Layout (keys are written sorted, two-space indent, trailing newline)::

    {
      "objects":   [{"id", "size", "frequency"}, ...],
      "operators": [{"id", "compute_demand", "output_size",
                     "leaf_children", "child_operators"}, ...],
      "servers":   [{"id", "card_bandwidth", "held_objects",
                     "link_to_processors", "class_links"?}, ...],
      "classes":   [{"id", "speed", "card_bandwidth", "cost", "name"}, ...],
      "platform":  {"inter_processor_bandwidth", "max_processors",
                    "is_left_deep", "class_links"?},
      "throughput": rho,
      "variant":   {"constructive", "heterogeneous_links", "hom_s",
                    "ld_tree", "hom_a", "no_com_a"}
    }

Parent links are not stored; they are derived from ``child_operators``.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from .model import (
    Instance, Mapping, PlatformSpec, ProcessorClass, ServerSpec, Solution, Variant, build_tree,
)


def instance_to_dict(inst: Instance) -> dict:
    tree, plat = inst.tree, inst.platform
    servers = []
    for s in plat.servers:
        d = {"id": s.id, "card_bandwidth": s.card_bandwidth,
             "held_objects": sorted(s.held_objects), "link_to_processors": s.link_to_processors}
        if s.class_links is not None:
            d["class_links"] = list(s.class_links)
        servers.append(d)
    platform = {"inter_processor_bandwidth": plat.inter_processor_bandwidth,
                "max_processors": plat.max_processors, "is_left_deep": tree.is_left_deep}
    if plat.class_links is not None:
        platform["class_links"] = [list(r) for r in plat.class_links]
    return {
        "objects": [{"id": o.id, "size": o.size, "frequency": o.frequency} for o in tree.objects],
        "operators": [{"id": op.id, "compute_demand": op.compute_demand, "output_size": op.output_size,
                       "leaf_children": list(op.leaf_children),
                       "child_operators": list(op.child_operators)} for op in tree.operators],
        "servers": servers,
        "classes": [{"id": c.id, "speed": c.speed, "card_bandwidth": c.card_bandwidth,
                     "cost": c.cost, "name": c.name} for c in plat.classes],
        "platform": platform,
        "throughput": inst.throughput,
        "variant": asdict(inst.variant),
    }


def instance_from_dict(data: dict) -> Instance:
    plat = data["platform"]
    tree = build_tree(data["operators"], data["objects"], is_left_deep=plat.get("is_left_deep", False))
    servers = tuple(
        ServerSpec(s["id"], s["card_bandwidth"], frozenset(s["held_objects"]), s["link_to_processors"],
                   tuple(s["class_links"]) if s.get("class_links") is not None else None)
        for s in sorted(data["servers"], key=lambda s: s["id"])
    )
    classes = tuple(
        ProcessorClass(c["id"], c["speed"], c["card_bandwidth"], c["cost"], c.get("name", ""))
        for c in sorted(data["classes"], key=lambda c: c["id"])
    )
    links = plat.get("class_links")
    platform = PlatformSpec(servers, classes, plat["inter_processor_bandwidth"], plat.get("max_processors"),
                            tuple(tuple(r) for r in links) if links is not None else None)
    return Instance(tree, platform, data["throughput"], Variant(**data.get("variant", {})))


def dumps(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True, indent=2) + "\n"


def loads(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps(inst), encoding="ascii")


def load_instance(path) -> Instance:
    return loads(Path(path).read_text(encoding="ascii"))


def mapping_to_dict(m: Mapping) -> dict:
    return {
        "assignment": {str(i): u for i, u in sorted(m.assignment.items())},
        "purchases": {str(u): c for u, c in sorted(m.purchases.items())},
        "downloads": {str(u): sorted([k, l] for k, l in pairs) for u, pairs in sorted(m.downloads.items())},
    }


def solution_to_dict(sol: Solution, platform: PlatformSpec | None = None) -> dict:
    out = {
        "feasible": sol.feasible,
        "total_cost": sol.total_cost,
        "processors": sol.processors,
        "mapping": mapping_to_dict(sol.mapping),
        "violations": [v.as_dict() for v in sol.violation_report],
    }
    if platform is not None:
        out["classes_bought"] = sorted(platform.classes[c].name or str(c) for c in sol.mapping.purchases.values())
    return out
