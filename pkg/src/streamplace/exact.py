"""Exhaustive minimum-cost solver for small instances.

Operators (heaviest first) are dealt into processor groups with
restricted-growth numbering, so each set partition is visited once. A
partial partition is pruned when a group exceeds the fastest class, when a
group's object downloads exceed the widest card, when the servers holding an
object cannot feed every group needing it, or when the cheapest classes able
to carry the partial groups already cost as much as the incumbent. At a full
partition each group takes its cheapest fitting class, processor links are
checked, and download servers are searched by backtracking.
"""
from __future__ import annotations

import math

from .constraints import communication_load, fits, is_feasible, link_load
from .model import Instance, Mapping, Solution


class CapExceededError(ValueError):
    pass


class _Found(Exception):
    pass


def _download_plan(instance: Instance, groups: list[set[int]], needs: list[dict[int, int]]):
    """Assign a server to every (group, object) demand, or return None."""
    plat = instance.platform
    rate = {o.id: o.rate for o in instance.tree.objects}
    holders = {k: plat.holders(k) for k in rate}
    demands = sorted(((g, k) for g, need in enumerate(needs) for k in need),
                     key=lambda d: (len(holders[d[1]]), -rate[d[1]], d[1], d[0]))
    card = [0.0] * len(plat.servers)
    link: dict[tuple[int, int], float] = {}
    plan: dict[tuple[int, int], int] = {}

    def rec(pos):
        if pos == len(demands):
            return True
        g, k = demands[pos]
        r = rate[k]
        for l in holders[k]:
            srv = plat.servers[l]
            used = link.get((l, g), 0.0)
            if fits(card[l] + r, srv.card_bandwidth) and fits(used + r, srv.link_to_processors):
                card[l] += r
                link[(l, g)] = used + r
                plan[(g, k)] = l
                if rec(pos + 1):
                    return True
                card[l] -= r
                link[(l, g)] = used
                del plan[(g, k)]
        return False

    return plan if rec(0) else None


def solve_exact(instance: Instance, max_operators: int = 12, max_classes: int = 5,
                max_processors: int | None = None) -> Solution | None:
    """Minimum-cost feasible solution, or None when none exists.

    ``max_processors`` caps the number of purchased processors (defaults to
    the platform bound).
    """
    tree, plat = instance.tree, instance.platform
    n = len(tree.operators)
    if n > max_operators:
        raise CapExceededError(f"{n} operators exceed the cap of {max_operators}")
    if len(plat.classes) > max_classes:
        raise CapExceededError(f"{len(plat.classes)} classes exceed the cap of {max_classes}")
    budget = min(max_processors or instance.max_processors, instance.max_processors)

    rho = instance.throughput
    ops = tree.operators
    rate = {o.id: o.rate for o in tree.objects}
    classes = plat.by_increasing_cost()
    max_speed = max(c.speed for c in classes)
    max_card = max(c.card_bandwidth for c in classes)
    supply = {k: sum(plat.servers[l].card_bandwidth for l in plat.holders(k)) for k in rate}
    pipe = {k: max((min(plat.servers[l].card_bandwidth, plat.servers[l].link_to_processors)
                    for l in plat.holders(k)), default=0.0) for k in rate}
    if any(not fits(rate[k], pipe[k]) for i in range(n) for k in ops[i].leaf_set):
        return None

    order = sorted(range(n), key=lambda i: (-ops[i].compute_demand, sorted(ops[i].leaf_set), i))
    total_load = rho * sum(op.compute_demand for op in ops) / max_speed
    lower_bound = max(1, math.ceil(total_load - 1e-9)) * classes[0].cost

    groups: list[set[int]] = []
    work: list[float] = []
    needs: list[dict[int, int]] = []
    dl: list[float] = []
    lbs: list[float] = []
    groups_needing = {k: 0 for k in rate}
    best = {"cost": math.inf, "sol": None}

    def group_lb(g):
        for c in classes:
            if fits(rho * work[g] / c.speed, 1.0) and fits(dl[g], c.card_bandwidth):
                return c.cost
        return math.inf

    def add(i, g):
        groups[g].add(i)
        work[g] += ops[i].compute_demand
        for k in ops[i].leaf_set:
            if needs[g].get(k, 0) == 0:
                dl[g] += rate[k]
                groups_needing[k] += 1
            needs[g][k] = needs[g].get(k, 0) + 1

    def remove(i, g):
        groups[g].discard(i)
        work[g] -= ops[i].compute_demand
        for k in ops[i].leaf_set:
            needs[g][k] -= 1
            if needs[g][k] == 0:
                del needs[g][k]
                dl[g] -= rate[k]
                groups_needing[k] -= 1

    def admissible(i, g):
        if not fits(rho * work[g] / max_speed, 1.0) or not fits(dl[g], max_card):
            return False
        return all(fits(groups_needing[k] * rate[k], supply[k]) for k in ops[i].leaf_set)

    def evaluate():
        chosen = []
        cost = 0.0
        for g, members in enumerate(groups):
            card = dl[g] + communication_load(instance, members)
            for c in classes:
                if fits(rho * work[g] / c.speed, 1.0) and fits(card, c.card_bandwidth):
                    chosen.append(c.id)
                    cost += c.cost
                    break
            else:
                return
            if cost >= best["cost"]:
                return
        bw = plat.inter_processor_bandwidth
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                if not fits(link_load(instance, groups[a], groups[b]), bw):
                    return
        plan = _download_plan(instance, groups, needs)
        if plan is None:
            return
        assignment = {i: g for g, members in enumerate(groups) for i in members}
        downloads = {g: frozenset((k, l) for (h, k), l in plan.items() if h == g) for g in range(len(groups))}
        best["cost"] = cost
        best["sol"] = Mapping(dict(sorted(assignment.items())), dict(enumerate(chosen)), downloads)
        if cost <= lower_bound:
            raise _Found

    def rec(pos):
        if pos == n:
            evaluate()
            return
        i = order[pos]
        options = list(range(len(groups)))
        if len(groups) < budget:
            options.append(len(groups))
        for g in options:
            fresh = g == len(groups)
            if fresh:
                groups.append(set())
                work.append(0.0)
                needs.append({})
                dl.append(0.0)
                lbs.append(0.0)
            add(i, g)
            if admissible(i, g):
                old = lbs[g]
                lbs[g] = group_lb(g)
                if sum(lbs) < best["cost"]:
                    rec(pos + 1)
                lbs[g] = old
            remove(i, g)
            if fresh:
                groups.pop()
                work.pop()
                needs.pop()
                dl.pop()
                lbs.pop()

    try:
        rec(0)
    except _Found:
        pass
    if best["sol"] is None:
        return None
    sol = is_feasible(instance, best["sol"])
    if not sol.feasible:
        raise RuntimeError(f"exact search produced an infeasible mapping: {sol.violation_report}")
    return sol
