"""Processor catalog, random instance generation and reduction instances."""
from __future__ import annotations

import random
from dataclasses import dataclass, fields, replace
from fractions import Fraction

from .model import (
    BasicObject, Instance, ModelError, Operator, ApplicationTree, PlatformSpec, ProcessorClass,
    ServerSpec, Variant, derive_demands, left_deep_tree,
)

MB = 1e6
GHZ = 1e9
GBIT = 1e9 / 8
GBYTE = 1e9

BASE_COST = 7548
CPU_TIERS = ((11.72, 0), (19.20, 1550), (25.60, 2399), (38.40, 3949), (46.88, 5299))
NIC_TIERS = ((1, 0), (2, 399), (4, 1197), (10, 2800), (20, 5999))

SIZE_REGIMES = {"small": (5, 30), "big": (450, 530)}


class ConfigError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


def default_catalog() -> tuple[ProcessorClass, ...]:
    """The 25 CPU x NIC configurations; id = 5 * cpu_tier + nic_tier."""
    out = []
    for a, (ghz, dcpu) in enumerate(CPU_TIERS):
        for b, (gbps, dnic) in enumerate(NIC_TIERS):
            out.append(ProcessorClass(len(out), ghz * GHZ, gbps * GBIT, BASE_COST + dcpu + dnic,
                                      f"{ghz:.2f}GHz/{gbps}Gbps"))
    return tuple(out)


def catalog_class(ghz: float, gbps: float) -> ProcessorClass:
    for c in default_catalog():
        if abs(c.speed - ghz * GHZ) < 1 and abs(c.card_bandwidth - gbps * GBIT) < 1:
            return c
    raise KeyError((ghz, gbps))


class _CountTable:
    """Fewest-parts table for sums of ``costs``, grown on demand."""

    def __init__(self, costs):
        self.costs = costs
        self.best: list[int | None] = [0]
        self.pick = [0]

    def extend(self, target: int) -> None:
        best, pick = self.best, self.pick
        for v in range(len(best), target + 1):
            b, p = None, 0
            for c in self.costs:
                if c > v:
                    break
                prev = best[v - c]
                if prev is not None and (b is None or prev + 1 < b):
                    b, p = prev + 1, c
            best.append(b)
            pick.append(p)


_TABLES: dict[tuple[int, ...], _CountTable] = {}


def decompose_cost(value: float, costs=None) -> dict[int, int] | None:
    """Express ``value`` as a sum of catalog costs (with repetition).

    Returns ``{cost: multiplicity}`` using as few processors as possible, or
    None when no decomposition exists.
    """
    if costs is None:
        costs = {int(c.cost) for c in default_catalog()}
    key = tuple(sorted(int(c) for c in costs))
    if value != int(value) or value < 0:
        return None
    target = int(value)
    table = _TABLES.setdefault(key, _CountTable(key))
    table.extend(target)
    if table.best[target] is None:
        return None
    out: dict[int, int] = {}
    v = target
    while v:
        c = table.pick[v]
        out[c] = out.get(c, 0) + 1
        v -= c
    return out


@dataclass(frozen=True)
class GeneratorConfig:
    max_operators: int = 20
    alpha: float = 0.9
    beta: float = 1.0
    object_size_regime: str = "small"
    frequency: float = 0.5
    num_object_types: int = 15
    num_servers: int = 6
    server_card: float = 10 * GBYTE
    link: float = 1 * GBYTE
    replication: float = 0.5
    seed: int = 0
    throughput: float = 1.0
    leaf_probability: float = 0.25
    # Base unit of the power law w = (sum of input sizes / size_unit)**alpha * work_unit.
    size_unit: float = MB
    work_unit: float = MB
    classes: tuple[int, ...] | None = None

    def validate(self) -> None:
        if self.max_operators < 1:
            raise ConfigError("max_operators must be >= 1")
        if self.object_size_regime not in SIZE_REGIMES:
            raise ConfigError(f"unknown size regime {self.object_size_regime!r}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError("alpha and beta must be positive")
        if self.frequency <= 0 or self.throughput <= 0:
            raise ConfigError("frequency and throughput must be positive")
        if self.num_object_types < 1 or self.num_servers < 1:
            raise ConfigError("need at least one object type and one server")
        if not 0 < self.replication <= 1:
            raise ConfigError("replication must be in (0, 1]")
        if not 0 <= self.leaf_probability < 1:
            raise ConfigError("leaf_probability must be in [0, 1)")
        if self.server_card <= 0 or self.link <= 0:
            raise ConfigError("bandwidths must be positive")
        if self.classes is not None:
            n = len(default_catalog())
            if not self.classes or any(not 0 <= c < n for c in self.classes):
                raise ConfigError(f"class ids must be in [0, {n})")

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if data.get("classes") is not None:
            data["classes"] = tuple(data["classes"])
        return cls(**data)


def random_tree_shape(rng: random.Random, max_operators: int, num_types: int,
                      leaf_probability: float) -> list[tuple[list[int], list[int]]]:
    """Grow a binary tree by expanding uniformly chosen open slots.

    Each open slot becomes a leaf with probability ``leaf_probability`` and
    an operator (with two new open slots) otherwise; once ``max_operators``
    operators exist every open slot becomes a leaf. Leaves draw their object
    type uniformly. Returns ``(leaves, children)`` per operator, root first.
    """
    leaves: list[list[int]] = [[]]
    children: list[list[int]] = [[]]
    slots = [0, 0]
    while slots:
        pos = rng.randrange(len(slots))
        owner = slots.pop(pos)
        if len(leaves) < max_operators and rng.random() >= leaf_probability:
            leaves.append([])
            children.append([])
            new = len(leaves) - 1
            children[owner].append(new)
            slots += [new, new]
        else:
            leaves[owner].append(rng.randrange(num_types))
    return list(zip(leaves, children))


def generate(config: GeneratorConfig) -> Instance:
    config.validate()
    rng = random.Random(config.seed)
    lo, hi = SIZE_REGIMES[config.object_size_regime]
    objects = tuple(BasicObject(k, rng.randint(int(lo * MB), int(hi * MB)), config.frequency)
                    for k in range(config.num_object_types))

    shape = random_tree_shape(rng, config.max_operators, config.num_object_types, config.leaf_probability)
    parent = {c: i for i, (_, ch) in enumerate(shape) for c in ch}
    ops = tuple(Operator(i, 0.0, 0.0, tuple(lv), tuple(ch), parent.get(i)) for i, (lv, ch) in enumerate(shape))
    tree = derive_demands(ApplicationTree(ops, objects), config.alpha, config.beta,
                          config.size_unit, config.work_unit)

    # First copies are dealt round-robin over a shuffled order so that no
    # server is empty; further copies go to uniformly drawn servers.
    copies = max(1, round(config.replication * config.num_servers))
    held: list[set[int]] = [set() for _ in range(config.num_servers)]
    order = list(range(config.num_object_types))
    rng.shuffle(order)
    first = list(range(config.num_servers))
    rng.shuffle(first)
    for pos, k in enumerate(order):
        home = first[pos % config.num_servers]
        held[home].add(k)
        others = [l for l in range(config.num_servers) if l != home]
        for l in rng.sample(others, copies - 1):
            held[l].add(k)
    servers = tuple(ServerSpec(l, config.server_card, frozenset(h), config.link)
                    for l, h in enumerate(held) if h)
    if len(servers) != config.num_servers:
        # Fewer object types than servers: keep only servers holding something.
        servers = tuple(replace(s, id=i) for i, s in enumerate(servers))

    catalog = default_catalog()
    if config.classes is None:
        classes = catalog
    else:
        classes = tuple(replace(catalog[c], id=i) for i, c in enumerate(config.classes))
    platform = PlatformSpec(servers, classes, config.link, len(tree.operators))
    return Instance(tree, platform, config.throughput, Variant(constructive=True, hom_s=True))


def three_partition_instance(a, R: int, unit_cost: float = 1.0) -> Instance:
    """Placement instance that is solvable on n processors iff ``a`` splits
    into n triples of sum ``R``."""
    a = [int(x) for x in a]
    if not a or len(a) % 3:
        raise PreconditionError("need 3n numbers")
    n = len(a) // 3
    if sum(a) != n * R:
        raise PreconditionError(f"numbers sum to {sum(a)}, expected n*R = {n * R}")
    for x in a:
        if not 4 * x > R or not 2 * x < R:
            raise PreconditionError(f"{x} is outside the open interval (R/4, R/2) for R={R}")
    objects = tuple(BasicObject(k, 1, 1) for k in range(3 * n))
    leaf_seq = [k for k, count in enumerate(a) for _ in range(count)]
    tree = left_deep_tree(leaf_seq, objects, compute_demand=1.0, output_size=0.0)
    servers = tuple(ServerSpec(k, 1, frozenset({k}), 1) for k in range(3 * n))
    classes = (ProcessorClass(0, 1, 3, unit_cost, "reduction"),)
    platform = PlatformSpec(servers, classes, 1, max_processors=n)
    variant = Variant(constructive=True, hom_s=True, ld_tree=True, hom_a=True, no_com_a=True)
    return Instance(tree, platform, float(Fraction(1, R)), variant)


def three_partition_solutions(a, R: int):
    """Brute-force 3-Partition: yield lists of index triples, each of sum R."""
    a = list(a)

    def rec(rest):
        if not rest:
            yield []
            return
        first = rest[0]
        others = rest[1:]
        for x in range(len(others)):
            for y in range(x + 1, len(others)):
                if a[first] + a[others[x]] + a[others[y]] == R:
                    left = [j for t, j in enumerate(others) if t not in (x, y)]
                    for tail in rec(left):
                        yield [(first, others[x], others[y])] + tail

    if len(a) % 3 == 0 and sum(a) == R * (len(a) // 3):
        yield from rec(list(range(len(a))))


def is_three_partition_yes(a, R: int) -> bool:
    return next(three_partition_solutions(a, R), None) is not None


__all__ = [
    "ConfigError", "GeneratorConfig", "ModelError", "PreconditionError", "decompose_cost", "default_catalog",
    "generate", "three_partition_instance", "three_partition_solutions", "is_three_partition_yes",
]
