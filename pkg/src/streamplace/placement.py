"""Constructive operator-placement heuristics.

Every heuristic buys processors from the catalog through a
:class:`PurchaseLedger` and returns it with all operators placed. A set of
operators "fits" a class when its compute load stays within the class speed
and its card can carry the downloads of every distinct object the set needs
plus the traffic of every tree edge leaving the set (worst case: all of them
cross to another processor). The ledger keeps every processor's set fitting
its class, so compute feasibility holds on return; the choice of download
servers, and the bandwidth constraints that depend on it, are settled later
by :mod:`streamplace.download`.

Ties are broken by lower operator index everywhere.
"""
from __future__ import annotations

import random
from typing import Callable, Iterable

from .constraints import fits as _within
from .model import Instance, Mapping, ProcessorClass


class HeuristicFailure(RuntimeError):
    pass


class GroupingFailure(HeuristicFailure):
    pass


class _Demand:
    """Per-instance lookup tables for fit tests."""

    def __init__(self, instance: Instance):
        tree = instance.tree
        rho = instance.throughput
        self.rho = rho
        self.work = [op.compute_demand for op in tree.operators]
        self.objects = [op.leaf_set for op in tree.operators]
        self.rate = {o.id: o.rate for o in tree.objects}
        self.edges: list[list[tuple[int, float]]] = [[] for _ in tree.operators]
        for parent, child in tree.edges():
            t = rho * tree.operators[child].output_size
            self.edges[parent].append((child, t))
            self.edges[child].append((parent, t))

    def compute(self, ops: Iterable[int], cls: ProcessorClass) -> float:
        return self.rho * sum(self.work[i] for i in ops) / cls.speed

    def card(self, ops: set[int]) -> float:
        objs: set[int] = set()
        boundary = 0.0
        for i in ops:
            objs |= self.objects[i]
            boundary += sum(t for j, t in self.edges[i] if j not in ops)
        return sum(self.rate[k] for k in objs) + boundary

    def fits(self, ops: set[int], cls: ProcessorClass) -> bool:
        return _within(self.compute(ops, cls), 1.0) and _within(self.card(ops), cls.card_bandwidth)

    def traffic(self, i: int, j: int) -> float:
        for k, t in self.edges[i]:
            if k == j:
                return t
        raise KeyError((i, j))


class PurchaseLedger:
    """Processors bought so far and the operators seated on them."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.demand = _Demand(instance)
        self.classes = instance.platform.classes
        self._by_cost = instance.platform.by_increasing_cost()
        self.top = instance.platform.most_expensive
        self.purchases: dict[int, int] = {}
        self.assignment: dict[int, int] = {}
        self._ops: dict[int, set[int]] = {}
        self._next = 0
        self.log: list[tuple] = []

    # bookkeeping
    def buy(self, cls_id: int) -> int:
        pid = self._next
        self._next += 1
        self.purchases[pid] = cls_id
        self._ops[pid] = set()
        self.log.append(("buy", pid, cls_id))
        return pid

    def sell(self, pid: int) -> None:
        if self._ops[pid]:
            raise ValueError(f"processor {pid} still hosts operators {sorted(self._ops[pid])}")
        cls_id = self.purchases.pop(pid)
        del self._ops[pid]
        self.log.append(("sell", pid, cls_id))

    def assign(self, i: int, pid: int) -> None:
        if i in self.assignment:
            raise ValueError(f"operator {i} already placed on {self.assignment[i]}")
        self.assignment[i] = pid
        self._ops[pid].add(i)
        self.log.append(("assign", i, pid))

    def unassign(self, i: int) -> int:
        pid = self.assignment.pop(i)
        self._ops[pid].discard(i)
        self.log.append(("unassign", i, pid))
        return pid

    def reclass(self, pid: int, cls_id: int) -> None:
        old = self.purchases[pid]
        if old != cls_id:
            self.purchases[pid] = cls_id
            self.log.append(("sell", pid, old))
            self.log.append(("buy", pid, cls_id))

    # queries
    def ops_on(self, pid: int) -> set[int]:
        return set(self._ops[pid])

    def processors(self) -> list[int]:
        return sorted(self.purchases)

    def unassigned(self) -> list[int]:
        return [i for i in range(len(self.instance.tree.operators)) if i not in self.assignment]

    def cost(self) -> float:
        return sum(self.classes[c].cost for c in self.purchases.values())

    def fits(self, ops: set[int], cls_id: int) -> bool:
        return self.demand.fits(ops, self.classes[cls_id])

    def fits_on(self, pid: int, extra: Iterable[int]) -> bool:
        return self.fits(self._ops[pid] | set(extra), self.purchases[pid])

    def cheapest_class(self, ops: set[int]) -> int | None:
        for cls in self._by_cost:
            if self.demand.fits(ops, cls):
                return cls.id
        return None

    def downgrade(self, pid: int) -> None:
        """Swap ``pid`` for the cheapest class still able to host its operators."""
        if not self._ops[pid]:
            return
        c = self.cheapest_class(self._ops[pid])
        if c is not None and self.classes[c].cost <= self.classes[self.purchases[pid]].cost:
            self.reclass(pid, c)

    def detach(self, i: int) -> None:
        """Remove operator ``i`` from its processor, selling the processor
        if it empties and upgrading it if the remaining set no longer fits."""
        pid = self.unassign(i)
        rest = self._ops[pid]
        if not rest:
            self.sell(pid)
        elif not self.fits(rest, self.purchases[pid]):
            c = self.cheapest_class(rest)
            if c is None:
                self.assign(i, pid)
                raise GroupingFailure(f"cannot take operator {i} off processor {pid}")
            self.reclass(pid, c)

    def move_all(self, src: int, dst: int) -> None:
        for i in sorted(self._ops[src]):
            self.unassign(i)
            self.assign(i, dst)
        self.sell(src)

    def to_mapping(self) -> Mapping:
        """Mapping with processors renumbered densely by lowest hosted operator."""
        live = sorted((min(ops), pid) for pid, ops in self._ops.items() if ops)
        empty = sorted(pid for pid, ops in self._ops.items() if not ops)
        order = [pid for _, pid in live] + empty
        renum = {pid: u for u, pid in enumerate(order)}
        return Mapping({i: renum[p] for i, p in sorted(self.assignment.items())},
                       {renum[p]: self.purchases[p] for p in order})


def group_with_neighbor(ledger: PurchaseLedger, op: int, pid: int | None = None,
                        unassigned_only: bool = False) -> int:
    """Place ``op`` together with its most communication-heavy neighbor.

    The neighbor is the parent or child operator with the largest traffic on
    the connecting edge. Without ``pid`` the pair goes on a new processor of
    the cheapest class that fits it; with ``pid`` it joins that processor.
    A neighbor already seated elsewhere is moved, and its old processor is
    sold back if that leaves it empty. Returns the hosting processor.
    """
    tree = ledger.instance.tree
    candidates = [j for j in tree.neighbors(op) if not (unassigned_only and j in ledger.assignment)]
    if not candidates:
        raise GroupingFailure(f"operator {op} has no neighbor to group with")
    nb = min(candidates, key=lambda j: (-ledger.demand.traffic(op, j), j))
    pair = {op, nb}
    if pid is not None:
        if not ledger.fits_on(pid, pair):
            raise GroupingFailure(f"operators {sorted(pair)} do not fit on processor {pid}")
        cls_id = None
    else:
        cls_id = ledger.cheapest_class(pair)
        if cls_id is None:
            raise GroupingFailure(f"no processor class can host operators {sorted(pair)}")
    if nb in ledger.assignment:
        ledger.detach(nb)
    if pid is None:
        pid = ledger.buy(cls_id)
    ledger.assign(op, pid)
    ledger.assign(nb, pid)
    return pid


def _seat_and_fill(ledger: PurchaseLedger, first: int, fill: Iterable[int],
                   unassigned_only: bool) -> int:
    """Buy a most expensive processor, seat ``first`` (grouping it with a
    neighbor if it cannot run alone), fill with ``fill`` in order, downgrade."""
    pid = ledger.buy(ledger.top.id)
    if ledger.fits({first}, ledger.top.id):
        ledger.assign(first, pid)
    else:
        try:
            group_with_neighbor(ledger, first, pid=pid, unassigned_only=unassigned_only)
        except GroupingFailure:
            ledger.sell(pid)
            raise
    for i in fill:
        if i not in ledger.assignment and ledger.fits_on(pid, (i,)):
            ledger.assign(i, pid)
    ledger.downgrade(pid)
    return pid


def _by_work(instance: Instance) -> list[int]:
    ops = instance.tree.operators
    return sorted(range(len(ops)), key=lambda i: (-ops[i].compute_demand, i))


def _first_unassigned(ledger: PurchaseLedger, *orders) -> int | None:
    for order in orders:
        for i in order:
            if i not in ledger.assignment:
                return i
    return None


def place_random(instance: Instance, rng_seed: int = 0) -> PurchaseLedger:
    """Seat operators in random order, each on the cheapest class that can
    host it. Randomness comes from ``random.Random(rng_seed)`` (MT19937)."""
    rng = random.Random(rng_seed)
    ledger = PurchaseLedger(instance)
    while True:
        todo = ledger.unassigned()
        if not todo:
            return ledger
        op = rng.choice(todo)
        cls_id = ledger.cheapest_class({op})
        if cls_id is not None:
            ledger.assign(op, ledger.buy(cls_id))
        else:
            group_with_neighbor(ledger, op)


def place_comp_greedy(instance: Instance) -> PurchaseLedger:
    ledger = PurchaseLedger(instance)
    order = _by_work(instance)
    while (first := _first_unassigned(ledger, order)) is not None:
        _seat_and_fill(ledger, first, order, unassigned_only=False)
    return ledger


def _edge_order(ledger: PurchaseLedger) -> list[tuple[int, int]]:
    d = ledger.demand
    return sorted(ledger.instance.tree.edges(), key=lambda e: (-d.traffic(*e), e[0], e[1]))


def place_comm_greedy(instance: Instance) -> PurchaseLedger:
    """Walk tree edges by decreasing traffic and co-locate their endpoints."""
    ledger = PurchaseLedger(instance)
    top = ledger.top.id

    def alone_on_top(i):
        if ledger.fits({i}, top):
            ledger.assign(i, ledger.buy(top))

    def accommodate(pid, extra):
        union = ledger.ops_on(pid) | set(extra)
        if ledger.fits(union, ledger.purchases[pid]):
            return True
        c = ledger.cheapest_class(union)
        if c is None:
            return False
        ledger.reclass(pid, c)
        return True

    for a, b in _edge_order(ledger):
        pa, pb = ledger.assignment.get(a), ledger.assignment.get(b)
        if pa is None and pb is None:
            c = ledger.cheapest_class({a, b})
            if c is not None:
                pid = ledger.buy(c)
                ledger.assign(a, pid)
                ledger.assign(b, pid)
            else:
                alone_on_top(a)
                alone_on_top(b)
        elif pa is None or pb is None:
            x, pid = (a, pb) if pa is None else (b, pa)
            if accommodate(pid, (x,)):
                ledger.assign(x, pid)
            else:
                alone_on_top(x)
        elif pa != pb:
            keep, drop = min(pa, pb), max(pa, pb)
            if accommodate(keep, ledger.ops_on(drop)):
                ledger.move_all(drop, keep)

    for i in ledger.unassigned():
        if i in ledger.assignment:
            continue
        c = ledger.cheapest_class({i})
        if c is not None:
            ledger.assign(i, ledger.buy(c))
        else:
            group_with_neighbor(ledger, i)
    return ledger


def _max_rate(instance: Instance, i: int) -> float:
    objs = instance.tree.objects
    return max(objs[k].rate for k in instance.tree.operators[i].leaf_children)


def place_object_greedy(instance: Instance) -> PurchaseLedger:
    ledger = PurchaseLedger(instance)
    ops = instance.tree.operators
    al = sorted(instance.tree.al_operators, key=lambda i: (-_max_rate(instance, i), -ops[i].compute_demand, i))
    al_set = set(al)
    others = [i for i in _by_work(instance) if i not in al_set]
    while (first := _first_unassigned(ledger, al, others)) is not None:
        _seat_and_fill(ledger, first, al + others, unassigned_only=True)
    return ledger


def place_subtree_bottom_up(instance: Instance) -> PurchaseLedger:
    """One top-class processor per al-operator, then merge upwards.

    Processors are visited deepest first (then by lowest hosted operator);
    each repeatedly absorbs the parents of its operators, either taking an
    unplaced parent or pulling in the whole processor hosting it. Parents
    that fit nowhere get a processor of their own.
    """
    ledger = PurchaseLedger(instance)
    tree = instance.tree
    depth = tree.depths()
    top = ledger.top.id
    for i in sorted(tree.al_operators, key=lambda i: (-depth[i], i)):
        if not ledger.fits({i}, top):
            raise HeuristicFailure(f"al-operator {i} does not fit on the most expensive processor")
        ledger.assign(i, ledger.buy(top))

    def visit_order():
        live = [(-max(depth[i] for i in ledger.ops_on(p)), min(ledger.ops_on(p)), p)
                for p in ledger.processors()]
        return [p for *_, p in sorted(live)]

    changed = True
    while changed:
        changed = False
        for p in visit_order():
            while p in ledger.purchases:
                hosted = ledger.ops_on(p)
                parents = {tree.operators[i].parent for i in hosted} - {None} - hosted
                progress = False
                for j in sorted(parents, key=lambda j: (-depth[j], j)):
                    q = ledger.assignment.get(j)
                    if q is None:
                        if ledger.fits_on(p, (j,)):
                            ledger.assign(j, p)
                            progress = True
                    elif q != p and ledger.fits_on(p, ledger.ops_on(q)):
                        ledger.move_all(q, p)
                        progress = True
                if not progress:
                    break
                changed = True
        ready = [j for j in ledger.unassigned()
                 if all(c in ledger.assignment for c in tree.operators[j].child_operators)]
        for j in sorted(ready, key=lambda j: (-depth[j], j)):
            if not ledger.fits({j}, top):
                group_with_neighbor(ledger, j)
            else:
                ledger.assign(j, ledger.buy(top))
            changed = True

    for p in ledger.processors():
        ledger.downgrade(p)
    return ledger


def place_object_grouping(instance: Instance) -> PurchaseLedger:
    ledger = PurchaseLedger(instance)
    tree = instance.tree
    pop = tree.popularity()
    score = {i: sum(pop[k] for k in tree.operators[i].leaf_set) for i in tree.al_operators}
    al = sorted(score, key=lambda i: (-score[i], i))
    al_set = set(al)
    others = [i for i in _by_work(instance) if i not in al_set]
    while (first := _first_unassigned(ledger, al, others)) is not None:
        wanted = tree.operators[first].leaf_set
        sharing = [i for i in al if i != first and tree.operators[i].leaf_set & wanted]
        _seat_and_fill(ledger, first, sharing + others, unassigned_only=True)
    return ledger


def place_object_availability(instance: Instance) -> PurchaseLedger:
    ledger = PurchaseLedger(instance)
    tree = instance.tree
    av = instance.platform.availability()
    al = tree.al_operators
    needed = sorted({k for i in al for k in tree.operators[i].leaf_set}, key=lambda k: (av[k], k))
    for k in needed:
        group = [i for i in al if k in tree.operators[i].leaf_set]
        while (first := _first_unassigned(ledger, group)) is not None:
            _seat_and_fill(ledger, first, group, unassigned_only=True)
    order = _by_work(instance)
    while (first := _first_unassigned(ledger, order)) is not None:
        _seat_and_fill(ledger, first, order, unassigned_only=False)
    return ledger


HEURISTICS: dict[str, Callable[..., PurchaseLedger]] = {
    "random": place_random,
    "comp": place_comp_greedy,
    "comm": place_comm_greedy,
    "object": place_object_greedy,
    "subtree": place_subtree_bottom_up,
    "grouping": place_object_grouping,
    "availability": place_object_availability,
}


def place(instance: Instance, heuristic: str, seed: int = 0) -> PurchaseLedger:
    try:
        fn = HEURISTICS[heuristic]
    except KeyError:
        raise ValueError(f"unknown heuristic {heuristic!r}; choose from {sorted(HEURISTICS)}") from None
    if heuristic == "random":
        return fn(instance, seed)
    return fn(instance)
