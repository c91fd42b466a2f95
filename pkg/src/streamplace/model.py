"""Domain types: operator trees, platforms, instances and mappings.

All quantities are in base units: sizes in bytes, bandwidths in bytes/s,
speeds in operations/s, frequencies in 1/s. Identifiers are dense integer
indices starting at 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping as TMapping, Sequence


class ModelError(ValueError):
    """Raised when a domain object violates one of its invariants."""


class TreeError(ModelError):
    pass


class CycleError(TreeError):
    pass


class MultiRootError(TreeError):
    pass


class ArityError(TreeError):
    pass


class DanglingReferenceError(TreeError):
    pass


@dataclass(frozen=True)
class BasicObject:
    id: int
    size: float
    frequency: float

    def __post_init__(self):
        if not self.size > 0:
            raise ModelError(f"object {self.id}: size must be positive, got {self.size}")
        if not self.frequency > 0:
            raise ModelError(f"object {self.id}: frequency must be positive, got {self.frequency}")

    @property
    def rate(self) -> float:
        return self.size * self.frequency


def object_rate(obj: BasicObject) -> float:
    """Bandwidth consumed by one continuous download of ``obj``."""
    return obj.rate


@dataclass(frozen=True)
class Operator:
    id: int
    compute_demand: float = 0.0
    output_size: float = 0.0
    # One entry per leaf slot; the same object may fill both slots.
    leaf_children: tuple[int, ...] = ()
    child_operators: tuple[int, ...] = ()
    parent: int | None = None

    @property
    def leaf_set(self) -> frozenset[int]:
        return frozenset(self.leaf_children)

    @property
    def is_al_operator(self) -> bool:
        return bool(self.leaf_children)


@dataclass(frozen=True)
class ApplicationTree:
    operators: tuple[Operator, ...]
    objects: tuple[BasicObject, ...]
    is_left_deep: bool = False

    def __post_init__(self):
        _validate_tree(self)

    def __len__(self):
        return len(self.operators)

    @property
    def root(self) -> int:
        return next(op.id for op in self.operators if op.parent is None)

    @property
    def al_operators(self) -> list[int]:
        return [op.id for op in self.operators if op.leaf_children]

    def edges(self) -> list[tuple[int, int]]:
        """(parent, child) pairs between operators, ordered by child index."""
        return [(op.parent, op.id) for op in self.operators if op.parent is not None]

    def neighbors(self, i: int) -> list[int]:
        op = self.operators[i]
        out = list(op.child_operators)
        if op.parent is not None:
            out.append(op.parent)
        return out

    def depths(self) -> list[int]:
        depth = [0] * len(self.operators)
        for i in self.topdown():
            p = self.operators[i].parent
            depth[i] = 0 if p is None else depth[p] + 1
        return depth

    def topdown(self) -> list[int]:
        order = [self.root]
        for i in order:
            order.extend(self.operators[i].child_operators)
        return order

    def bottomup(self) -> list[int]:
        return self.topdown()[::-1]

    def popularity(self) -> dict[int, int]:
        """Number of operators that need each object."""
        counts = {o.id: 0 for o in self.objects}
        for op in self.operators:
            for k in op.leaf_set:
                counts[k] += 1
        return counts


def _validate_tree(tree: ApplicationTree) -> None:
    ops = tree.operators
    n = len(ops)
    if n == 0:
        raise TreeError("tree has no operators")
    for idx, op in enumerate(ops):
        if op.id != idx:
            raise DanglingReferenceError(f"operator ids must be dense; position {idx} holds {op.id}")
    for idx, obj in enumerate(tree.objects):
        if obj.id != idx:
            raise DanglingReferenceError(f"object ids must be dense; position {idx} holds {obj.id}")

    parent_of: dict[int, int] = {}
    for op in ops:
        if len(op.leaf_children) + len(op.child_operators) > 2:
            raise ArityError(f"operator {op.id} has more than two children")
        if not op.leaf_children and not op.child_operators:
            raise ArityError(f"operator {op.id} has no inputs")
        for k in op.leaf_children:
            if not 0 <= k < len(tree.objects):
                raise DanglingReferenceError(f"operator {op.id} references unknown object {k}")
        for c in op.child_operators:
            if not 0 <= c < n:
                raise DanglingReferenceError(f"operator {op.id} references unknown operator {c}")
            if c == op.id:
                raise CycleError(f"operator {op.id} is its own child")
            if c in parent_of:
                raise CycleError(f"operator {c} has two parents ({parent_of[c]} and {op.id})")
            parent_of[c] = op.id
        if len(set(op.child_operators)) != len(op.child_operators):
            raise CycleError(f"operator {op.id} lists a child twice")

    for op in ops:
        if op.parent != parent_of.get(op.id):
            raise TreeError(f"operator {op.id}: parent link {op.parent} inconsistent with child sets")

    roots = [op.id for op in ops if op.id not in parent_of]
    if not roots:
        raise CycleError("every operator has a parent")
    if len(roots) > 1:
        raise MultiRootError(f"several roots: {roots}")
    seen = {roots[0]}
    stack = [roots[0]]
    while stack:
        for c in ops[stack.pop()].child_operators:
            seen.add(c)
            stack.append(c)
    if len(seen) != n:
        raise CycleError(f"operators {sorted(set(range(n)) - seen)} are detached from the root")

    if tree.is_left_deep:
        for op in ops:
            if len(op.child_operators) > 1:
                raise TreeError(f"left-deep tree: operator {op.id} has two child operators")
            if op.child_operators and len(op.leaf_children) != 1:
                raise TreeError(f"left-deep tree: operator {op.id} needs exactly one leaf")


def _get(desc, key, default=None):
    if isinstance(desc, TMapping):
        return desc.get(key, default)
    return getattr(desc, key, default)


def build_tree(nodes: Iterable, objects: Iterable, is_left_deep: bool = False) -> ApplicationTree:
    """Build a validated tree from operator and object descriptors.

    Descriptors are mappings (or objects with matching attributes). Operators
    use ``id``, ``leaves``/``leaf_children``, ``children``/``child_operators``
    and optional ``compute_demand`` and ``output_size``; objects use ``id``,
    ``size`` and ``frequency``. Parent links are derived from child links.
    """
    objs = []
    for d in objects:
        if isinstance(d, BasicObject):
            objs.append(d)
        else:
            objs.append(BasicObject(int(_get(d, "id")), _get(d, "size"), _get(d, "frequency")))
    objs.sort(key=lambda o: o.id)

    raw = []
    for d in nodes:
        leaves = _get(d, "leaf_children", None)
        if leaves is None:
            leaves = _get(d, "leaves", ())
        children = _get(d, "child_operators", None)
        if children is None:
            children = _get(d, "children", ())
        raw.append((int(_get(d, "id")), tuple(leaves), tuple(children),
                    _get(d, "compute_demand", 0.0) or 0.0, _get(d, "output_size", 0.0) or 0.0))
    raw.sort(key=lambda r: r[0])

    known = {r[0] for r in raw}
    parent: dict[int, int] = {}
    for i, _, children, _, _ in raw:
        for c in children:
            if c not in known:
                raise DanglingReferenceError(f"operator {i} references unknown operator {c}")
            if c in parent and parent[c] != i:
                raise CycleError(f"operator {c} has two parents ({parent[c]} and {i})")
            parent[c] = i
    ops = tuple(
        Operator(i, float(w), float(delta), leaves, children, parent.get(i))
        for i, leaves, children, w, delta in raw
    )
    return ApplicationTree(ops, tuple(objs), is_left_deep)


def derive_demands(tree: ApplicationTree, alpha: float, beta: float = 1.0,
                   size_unit: float = 1.0, work_unit: float = 1.0) -> ApplicationTree:
    """Set compute demands and output sizes bottom-up from input sizes.

    For an operator whose inputs (child outputs or leaf object sizes) sum to
    ``s``, ``w = (s/size_unit)**alpha * work_unit`` and
    ``delta = (s/size_unit)**beta * size_unit``. A single input is a
    degenerate sum. The units only rescale the base of the power law; with
    the defaults the formula applies to raw numbers.
    """
    if not (alpha > 0 and beta > 0):
        raise ModelError("alpha and beta must be positive")
    w = [0.0] * len(tree.operators)
    out = [0.0] * len(tree.operators)
    for i in tree.bottomup():
        op = tree.operators[i]
        s = sum(out[c] for c in op.child_operators)
        s += sum(tree.objects[k].size for k in op.leaf_children)
        base = s / size_unit
        w[i] = base ** alpha * work_unit
        out[i] = base ** beta * size_unit
    ops = tuple(replace(op, compute_demand=w[op.id], output_size=out[op.id]) for op in tree.operators)
    return ApplicationTree(ops, tree.objects, tree.is_left_deep)


@dataclass(frozen=True)
class ServerSpec:
    id: int
    card_bandwidth: float
    held_objects: frozenset[int]
    link_to_processors: float
    # Per-class link bandwidths; only read by the heterogeneous ILP export.
    class_links: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "held_objects", frozenset(self.held_objects))
        if not self.card_bandwidth > 0:
            raise ModelError(f"server {self.id}: card bandwidth must be positive")
        if not self.link_to_processors > 0:
            raise ModelError(f"server {self.id}: link bandwidth must be positive")
        if not self.held_objects:
            raise ModelError(f"server {self.id} holds no object")


@dataclass(frozen=True)
class ProcessorClass:
    id: int
    speed: float
    card_bandwidth: float
    cost: float
    name: str = ""

    def __post_init__(self):
        if not (self.speed > 0 and self.card_bandwidth > 0 and self.cost > 0):
            raise ModelError(f"class {self.id}: speed, bandwidth and cost must be positive")


@dataclass(frozen=True)
class PlatformSpec:
    servers: tuple[ServerSpec, ...]
    classes: tuple[ProcessorClass, ...]
    inter_processor_bandwidth: float
    max_processors: int | None = None
    # |C| x |C| matrix of processor link bandwidths (heterogeneous variant only).
    class_links: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if not self.classes:
            raise ModelError("platform has no processor class")
        if not self.inter_processor_bandwidth > 0:
            raise ModelError("inter-processor bandwidth must be positive")
        for idx, c in enumerate(self.classes):
            if c.id != idx:
                raise ModelError("class ids must be dense")
        for idx, s in enumerate(self.servers):
            if s.id != idx:
                raise ModelError("server ids must be dense")

    def holders(self, k: int) -> list[int]:
        return [s.id for s in self.servers if k in s.held_objects]

    def availability(self) -> dict[int, int]:
        av: dict[int, int] = {}
        for s in self.servers:
            for k in s.held_objects:
                av[k] = av.get(k, 0) + 1
        return av

    @property
    def most_expensive(self) -> ProcessorClass:
        return max(self.classes, key=lambda c: (c.cost, c.speed, c.card_bandwidth, -c.id))

    def by_increasing_cost(self) -> list[ProcessorClass]:
        return sorted(self.classes, key=lambda c: (c.cost, c.speed, c.card_bandwidth, c.id))


@dataclass(frozen=True)
class Variant:
    constructive: bool = True
    heterogeneous_links: bool = False
    hom_s: bool = False
    ld_tree: bool = False
    hom_a: bool = False
    no_com_a: bool = False

    @property
    def name(self) -> str:
        if self.constructive:
            base = "Constr"
        else:
            base = "Non-Constr-Het" if self.heterogeneous_links else "Non-Constr"
        flags = [n for n, on in (("HomS", self.hom_s), ("LDTree", self.ld_tree),
                                  ("HomA", self.hom_a), ("NoComA", self.no_com_a)) if on]
        return "-".join([base] + flags)


@dataclass(frozen=True)
class Instance:
    tree: ApplicationTree
    platform: PlatformSpec
    throughput: float
    variant: Variant = field(default_factory=Variant)

    def __post_init__(self):
        if not self.throughput > 0:
            raise ModelError("throughput must be positive")
        held = set()
        for s in self.platform.servers:
            for k in s.held_objects:
                if not 0 <= k < len(self.tree.objects):
                    raise ModelError(f"server {s.id} holds unknown object {k}")
            held |= s.held_objects
        missing = sorted(o.id for o in self.tree.objects if o.id not in held)
        if missing:
            raise ModelError(f"objects {missing} are held by no server")
        v = self.variant
        ops = self.tree.operators
        if v.no_com_a and any(op.output_size != 0 for op in ops):
            raise ModelError("NoComA instance with non-zero output sizes")
        if v.ld_tree and not self.tree.is_left_deep:
            raise ModelError("LDTree instance without a left-deep tree")
        if v.hom_a:
            if len({op.compute_demand for op in ops}) > 1 or len({o.rate for o in self.tree.objects}) > 1:
                raise ModelError("HomA instance with heterogeneous demands or rates")
        if v.hom_s:
            servers = self.platform.servers
            if len({(s.card_bandwidth, s.link_to_processors) for s in servers}) > 1:
                raise ModelError("HomS instance with heterogeneous servers")

    @property
    def max_processors(self) -> int:
        return self.platform.max_processors or len(self.tree.operators)


@dataclass(frozen=True)
class Mapping:
    """Operator placement on purchased processors plus download sources.

    ``assignment`` maps operator -> processor id, ``purchases`` maps processor
    id -> class id and ``downloads`` maps processor id -> set of
    (object, server) pairs.
    """
    assignment: dict[int, int]
    purchases: dict[int, int]
    downloads: dict[int, frozenset[tuple[int, int]]] = field(default_factory=dict)

    def operators_on(self, u: int) -> set[int]:
        return {i for i, p in self.assignment.items() if p == u}

    def groups(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {u: set() for u in self.purchases}
        for i, u in self.assignment.items():
            out.setdefault(u, set()).add(i)
        return out

    def cost(self, platform: PlatformSpec) -> float:
        return sum(platform.classes[c].cost for c in self.purchases.values())

    def with_classes(self, purchases: dict[int, int]) -> "Mapping":
        return Mapping(dict(self.assignment), dict(purchases), dict(self.downloads))


@dataclass(frozen=True)
class Solution:
    mapping: Mapping
    total_cost: float
    feasible: bool
    violation_report: tuple = ()

    @property
    def processors(self) -> int:
        return len(self.mapping.purchases)


def needed_objects(tree: ApplicationTree, ops: Iterable[int]) -> set[int]:
    out: set[int] = set()
    for i in ops:
        out.update(tree.operators[i].leaf_children)
    return out


def left_deep_tree(leaf_sequence: Sequence[int], objects: Sequence[BasicObject],
                   compute_demand: float = 1.0, output_size: float = 0.0) -> ApplicationTree:
    """Left-deep chain with one leaf per operator; operator 0 is the root."""
    n = len(leaf_sequence)
    ops = []
    for t, k in enumerate(leaf_sequence):
        ops.append(Operator(t, compute_demand, output_size, (k,),
                            (t + 1,) if t + 1 < n else (), t - 1 if t > 0 else None))
    return ApplicationTree(tuple(ops), tuple(objects), is_left_deep=True)
