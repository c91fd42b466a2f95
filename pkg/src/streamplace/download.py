"""Choice of the server each processor downloads each object from, and the
final processor downgrade."""
from __future__ import annotations

import random

from .constraints import (
    SERVER_CARD, SERVER_LINK, ViolationReport, check_processor_cards, check_server_cards,
    check_server_links, compute_load, fits, is_feasible, processor_card_load,
)
from .model import Instance, Mapping


class SelectionFailure(RuntimeError):
    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)

    @property
    def kind(self) -> str:
        return self.violations[0].kind if self.violations else "Selection"


def _as_mapping(placed) -> Mapping:
    return placed.to_mapping() if hasattr(placed, "to_mapping") else placed


def download_demands(instance: Instance, mapping: Mapping) -> list[tuple[int, int]]:
    """Sorted (processor, object) pairs; one per object a processor needs."""
    need: set[tuple[int, int]] = set()
    for i, u in mapping.assignment.items():
        for k in instance.tree.operators[i].leaf_set:
            need.add((u, k))
    return sorted(need)


def _finish(instance: Instance, mapping: Mapping, chosen: dict[tuple[int, int], int]) -> Mapping:
    downloads: dict[int, set] = {u: set() for u in mapping.purchases}
    for (u, k), l in chosen.items():
        downloads[u].add((k, l))
    out = Mapping(dict(mapping.assignment), dict(mapping.purchases),
                  {u: frozenset(p) for u, p in sorted(downloads.items())})
    violations = (check_processor_cards(instance, out) + check_server_cards(instance, out)
                  + check_server_links(instance, out))
    if violations:
        raise SelectionFailure(f"{len(violations)} bandwidth constraint(s) violated", violations)
    return out


def select_servers_random(instance: Instance, placed, rng_seed: int = 0) -> Mapping:
    rng = random.Random(rng_seed)
    mapping = _as_mapping(placed)
    chosen = {}
    for u, k in download_demands(instance, mapping):
        chosen[(u, k)] = rng.choice(instance.platform.holders(k))
    return _finish(instance, mapping, chosen)


class _Capacity:
    """Residual server-card and server-to-processor link capacity."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.card_used = {s.id: 0.0 for s in instance.platform.servers}
        self.link_used: dict[tuple[int, int], float] = {}

    def card_left(self, l):
        return self.instance.platform.servers[l].card_bandwidth - self.card_used[l]

    def link_left(self, l, u):
        return self.instance.platform.servers[l].link_to_processors - self.link_used.get((l, u), 0.0)

    def violation(self, l, u, k):
        srv = self.instance.platform.servers[l]
        r = self.instance.tree.objects[k].rate
        if not fits(self.card_used[l] + r, srv.card_bandwidth):
            return ViolationReport(SERVER_CARD, l, self.card_used[l] + r, srv.card_bandwidth)
        used = self.link_used.get((l, u), 0.0)
        if not fits(used + r, srv.link_to_processors):
            return ViolationReport(SERVER_LINK, (l, u), used + r, srv.link_to_processors)
        return None

    def take(self, l, u, k):
        r = self.instance.tree.objects[k].rate
        self.card_used[l] += r
        self.link_used[(l, u)] = self.link_used.get((l, u), 0.0) + r


def select_servers_intelligent(instance: Instance, placed) -> Mapping:
    """Three passes: objects held by a single server, then servers that hold
    a single object type, then the rest by decreasing demand pressure."""
    mapping = _as_mapping(placed)
    plat = instance.platform
    holders = {o.id: plat.holders(o.id) for o in instance.tree.objects}
    cap = _Capacity(instance)
    chosen: dict[tuple[int, int], int] = {}
    demands = download_demands(instance, mapping)

    for u, k in demands:
        if len(holders[k]) == 1:
            l = holders[k][0]
            v = cap.violation(l, u, k)
            if v is not None:
                raise SelectionFailure(f"exclusive object {k} cannot reach processor {u}", [v])
            cap.take(l, u, k)
            chosen[(u, k)] = l

    single = {s.id for s in plat.servers if len(s.held_objects) == 1}
    for u, k in demands:
        if (u, k) in chosen:
            continue
        for l in holders[k]:
            if l in single and cap.violation(l, u, k) is None:
                cap.take(l, u, k)
                chosen[(u, k)] = l
                break

    pending: dict[int, list[int]] = {}
    for u, k in demands:
        if (u, k) not in chosen:
            pending.setdefault(k, []).append(u)
    while pending:
        def pressure(k):
            r = instance.tree.objects[k].rate
            possible = sum(1 for l in holders[k] if fits(cap.card_used[l] + r, plat.servers[l].card_bandwidth))
            return float("inf") if possible == 0 else len(pending[k]) / possible

        k = min(pending, key=lambda k: (-pressure(k), k))
        for u in pending.pop(k):
            for l in sorted(holders[k], key=lambda l: (-min(cap.card_left(l), cap.link_left(l, u)), l)):
                if cap.violation(l, u, k) is None:
                    cap.take(l, u, k)
                    chosen[(u, k)] = l
                    break
            else:
                l = max(holders[k], key=lambda l: (min(cap.card_left(l), cap.link_left(l, u)), -l))
                raise SelectionFailure(f"no server can deliver object {k} to processor {u}",
                                       [cap.violation(l, u, k)])
    return _finish(instance, mapping, chosen)


SELECTORS = {"random": select_servers_random, "intelligent": select_servers_intelligent}


def downgrade_all(instance: Instance, mapping: Mapping) -> Mapping:
    """Replace every processor by the cheapest class that still carries its
    final compute and card load."""
    classes = instance.platform.by_increasing_cost()
    purchases = dict(mapping.purchases)
    groups = mapping.groups()
    for u, current in mapping.purchases.items():
        ops = groups.get(u, set())
        card = processor_card_load(instance, mapping, u, ops)
        for cls in classes:
            if fits(compute_load(instance, ops, cls.speed), 1.0) and fits(card, cls.card_bandwidth):
                if cls.cost <= instance.platform.classes[current].cost:
                    purchases[u] = cls.id
                break
    out = mapping.with_classes(purchases)
    if not is_feasible(instance, out).feasible:
        raise RuntimeError("downgrade broke feasibility")
    return out
