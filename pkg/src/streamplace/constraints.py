"""Throughput and bandwidth feasibility of a mapping.

Each ``check_*`` function returns the list of violated constraints (empty
means the constraint family holds). Comparisons are non-strict and allow a
relative slack of ``TOL`` on the capacity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable

from .model import Instance, Mapping, Solution

TOL = 1e-9

COMPUTE = "Compute"
PROCESSOR_CARD = "ProcessorCard"
SERVER_CARD = "ServerCard"
SERVER_LINK = "ServerLink"
PROCESSOR_LINK = "ProcessorLink"


class UnplacedOperatorError(ValueError):
    pass


class MissingDownloadError(ValueError):
    pass


class InvalidDownloadError(ValueError):
    pass


@dataclass(frozen=True)
class ViolationReport:
    kind: str
    resource: Hashable
    load: float
    capacity: float

    def resource_label(self) -> str:
        if isinstance(self.resource, tuple):
            return "-".join(str(r) for r in self.resource)
        return str(self.resource)

    def to_csv_row(self) -> str:
        return f"{self.kind},{self.resource_label()},{self.load!r},{self.capacity!r}"

    def as_dict(self) -> dict:
        return {"kind": self.kind, "resource": self.resource_label(),
                "load": self.load, "capacity": self.capacity}


def fits(load: float, capacity: float) -> bool:
    return load <= capacity * (1.0 + TOL) + TOL


def _check_placed(instance: Instance, mapping: Mapping) -> None:
    n = len(instance.tree.operators)
    missing = [i for i in range(n) if i not in mapping.assignment]
    if missing:
        raise UnplacedOperatorError(f"operators {missing} are not placed")
    for i, u in mapping.assignment.items():
        if u not in mapping.purchases:
            raise UnplacedOperatorError(f"operator {i} sits on processor {u}, which was not purchased")


def _groups(mapping: Mapping) -> dict[int, set[int]]:
    return mapping.groups()


def compute_load(instance: Instance, ops, speed: float) -> float:
    rho = instance.throughput
    return sum(rho * instance.tree.operators[i].compute_demand / speed for i in ops)


def check_compute(instance: Instance, mapping: Mapping) -> list[ViolationReport]:
    _check_placed(instance, mapping)
    out = []
    for u, ops in sorted(_groups(mapping).items()):
        cls = instance.platform.classes[mapping.purchases[u]]
        load = compute_load(instance, ops, cls.speed)
        if not fits(load, 1.0):
            out.append(ViolationReport(COMPUTE, u, load, 1.0))
    return out


def _child_set(instance: Instance, ops) -> set[int]:
    out = set()
    for i in ops:
        out.update(instance.tree.operators[i].child_operators)
    return out


def _parent_set(instance: Instance, ops) -> set[int]:
    return {instance.tree.operators[i].parent for i in ops} - {None}


def communication_load(instance: Instance, ops: set[int]) -> float:
    """Inter-operator traffic through the card of a processor holding ``ops``.

    Sum over children of ``ops`` placed elsewhere, plus for every parent
    placed elsewhere the outputs of its children that are in ``ops``.
    """
    tree, rho = instance.tree, instance.throughput
    incoming = sum(rho * tree.operators[j].output_size for j in _child_set(instance, ops) - ops)
    outgoing = 0.0
    for j in _parent_set(instance, ops) - ops:
        outgoing += sum(rho * tree.operators[i].output_size
                        for i in set(tree.operators[j].child_operators) & ops)
    return incoming + outgoing


def download_load(instance: Instance, pairs) -> float:
    return sum(instance.tree.objects[k].rate for k, _ in pairs)


def _check_downloads(instance: Instance, mapping: Mapping) -> None:
    tree = instance.tree
    servers = instance.platform.servers
    for u, ops in _groups(mapping).items():
        pairs = mapping.downloads.get(u, frozenset())
        for k, l in pairs:
            if not 0 <= l < len(servers) or k not in servers[l].held_objects:
                raise InvalidDownloadError(f"processor {u} downloads object {k} from server {l}, which lacks it")
        have = {k for k, _ in pairs}
        for i in sorted(ops):
            for k in tree.operators[i].leaf_set:
                if k not in have:
                    raise MissingDownloadError(f"processor {u} hosts operator {i} but does not download object {k}")


def processor_card_load(instance: Instance, mapping: Mapping, u: int, ops: set[int] | None = None) -> float:
    if ops is None:
        ops = mapping.operators_on(u)
    return download_load(instance, mapping.downloads.get(u, ())) + communication_load(instance, ops)


def check_processor_cards(instance: Instance, mapping: Mapping) -> list[ViolationReport]:
    _check_placed(instance, mapping)
    _check_downloads(instance, mapping)
    out = []
    for u, ops in sorted(_groups(mapping).items()):
        cap = instance.platform.classes[mapping.purchases[u]].card_bandwidth
        load = processor_card_load(instance, mapping, u, ops)
        if not fits(load, cap):
            out.append(ViolationReport(PROCESSOR_CARD, u, load, cap))
    return out


def server_loads(instance: Instance, mapping: Mapping) -> dict[int, float]:
    loads = {s.id: 0.0 for s in instance.platform.servers}
    for u in sorted(mapping.downloads):
        for k, l in mapping.downloads[u]:
            loads[l] += instance.tree.objects[k].rate
    return loads


def check_server_cards(instance: Instance, mapping: Mapping) -> list[ViolationReport]:
    out = []
    loads = server_loads(instance, mapping)
    for s in instance.platform.servers:
        if not fits(loads[s.id], s.card_bandwidth):
            out.append(ViolationReport(SERVER_CARD, s.id, loads[s.id], s.card_bandwidth))
    return out


def check_server_links(instance: Instance, mapping: Mapping) -> list[ViolationReport]:
    out = []
    servers = instance.platform.servers
    for u in sorted(mapping.downloads):
        per_server: dict[int, float] = {}
        for k, l in mapping.downloads[u]:
            per_server[l] = per_server.get(l, 0.0) + instance.tree.objects[k].rate
        for l in sorted(per_server):
            cap = servers[l].link_to_processors
            if not fits(per_server[l], cap):
                out.append(ViolationReport(SERVER_LINK, (l, u), per_server[l], cap))
    return out


def link_load(instance: Instance, ops_u: set[int], ops_v: set[int]) -> float:
    """Traffic on the shared link between processors holding ``ops_u`` and ``ops_v``."""
    tree, rho = instance.tree, instance.throughput
    load = sum(rho * tree.operators[j].output_size for j in _child_set(instance, ops_u) & ops_v)
    for j in _parent_set(instance, ops_u) & ops_v:
        load += sum(rho * tree.operators[i].output_size for i in set(tree.operators[j].child_operators) & ops_u)
    return load


def check_processor_links(instance: Instance, mapping: Mapping) -> list[ViolationReport]:
    _check_placed(instance, mapping)
    cap = instance.platform.inter_processor_bandwidth
    groups = sorted(_groups(mapping).items())
    out = []
    for a, (u, ops_u) in enumerate(groups):
        for v, ops_v in groups[a + 1:]:
            load = link_load(instance, ops_u, ops_v)
            if not fits(load, cap):
                out.append(ViolationReport(PROCESSOR_LINK, (u, v), load, cap))
    return out


def is_feasible(instance: Instance, mapping: Mapping) -> Solution:
    if not mapping.purchases and instance.tree.operators:
        raise UnplacedOperatorError("no processor purchased")
    violations = (check_compute(instance, mapping) + check_processor_cards(instance, mapping)
                  + check_server_cards(instance, mapping) + check_server_links(instance, mapping)
                  + check_processor_links(instance, mapping))
    return Solution(mapping, mapping.cost(instance.platform), not violations, tuple(violations))
