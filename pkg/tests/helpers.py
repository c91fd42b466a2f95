"""Independent oracles and random instance builders for the test-suite."""
from __future__ import annotations

import itertools
import random
import re

from streamplace.constraints import is_feasible
from streamplace.model import (
    Instance, Mapping, PlatformSpec, ProcessorClass, ServerSpec, Variant, build_tree,
)


def random_shape(rng: random.Random, n_ops: int, n_objects: int):
    """Operator descriptors for a random binary tree with ``n_ops`` operators."""
    children = {i: [] for i in range(n_ops)}
    for i in range(1, n_ops):
        parent = rng.choice([j for j in range(i) if len(children[j]) < 2])
        children[parent].append(i)
    nodes = []
    for i in range(n_ops):
        free = 2 - len(children[i])
        if not children[i]:
            n_leaves = rng.choice([1, 2])
        else:
            n_leaves = rng.randint(0, free)
        nodes.append({"id": i, "children": children[i],
                      "leaves": [rng.randrange(n_objects) for _ in range(n_leaves)]})
    return nodes


def desk_instance(seed: int, n_ops: int | None = None, n_classes: int = 2, n_servers: int = 2,
                  n_objects: int = 3, comm: bool = True) -> Instance:
    """Small random instance with tight capacities, so that optima vary
    between one and several processors and between classes."""
    rng = random.Random(seed)
    n_ops = n_ops or rng.randint(1, 5)
    nodes = random_shape(rng, n_ops, n_objects)
    for d in nodes:
        d["compute_demand"] = rng.choice([1, 2, 3, 4])
        d["output_size"] = rng.choice([0, 1, 2, 3]) if comm else 0
    objects = [{"id": k, "size": rng.choice([1, 2, 3]), "frequency": 1} for k in range(n_objects)]
    tree = build_tree(nodes, objects)
    held = [set() for _ in range(n_servers)]
    for k in range(n_objects):
        homes = rng.sample(range(n_servers), rng.randint(1, n_servers))
        for l in homes:
            held[l].add(k)
    for l in range(n_servers):
        if not held[l]:
            held[l].add(rng.randrange(n_objects))
    servers = tuple(ServerSpec(l, rng.choice([4, 6, 10]), frozenset(held[l]), rng.choice([3, 5, 8]))
                    for l in range(n_servers))
    classes = []
    for c in range(n_classes):
        speed = rng.choice([4, 6, 8, 12])
        card = rng.choice([3, 5, 8, 12])
        classes.append(ProcessorClass(c, speed, card, 10 + speed + card + rng.randint(0, 3)))
    platform = PlatformSpec(servers, tuple(classes), rng.choice([2, 4, 6]))
    return Instance(tree, platform, 1.0, Variant())


def random_mapping(instance: Instance, rng: random.Random, max_procs: int = 3) -> Mapping:
    """Random complete mapping with one download per needed object."""
    n = len(instance.tree.operators)
    k = rng.randint(1, max_procs)
    assignment = {i: rng.randrange(k) for i in range(n)}
    purchases = {u: rng.randrange(len(instance.platform.classes)) for u in range(k)}
    downloads = {}
    for u in range(k):
        objs = {o for i, p in assignment.items() if p == u for o in instance.tree.operators[i].leaf_children}
        downloads[u] = frozenset((o, rng.choice(instance.platform.holders(o))) for o in objs)
    return Mapping(assignment, purchases, downloads)


def edge_walk_loads(instance: Instance, mapping: Mapping):
    """Processor card loads and processor-pair link loads by walking every
    tree edge and every download pair."""
    card = {u: 0.0 for u in mapping.purchases}
    link: dict[frozenset, float] = {}
    rho = instance.throughput
    for op in instance.tree.operators:
        for c in op.child_operators:
            a, b = mapping.assignment[op.id], mapping.assignment[c]
            if a != b:
                t = rho * instance.tree.operators[c].output_size
                card[a] += t
                card[b] += t
                link[frozenset((a, b))] = link.get(frozenset((a, b)), 0.0) + t
    for u, pairs in mapping.downloads.items():
        for k, _ in pairs:
            card[u] += instance.tree.objects[k].rate
    return card, link


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def brute_force_cost(instance: Instance, max_procs: int | None = None, distinct_classes: bool = False):
    """Minimum feasible cost by full enumeration of partitions, classes and
    download servers, or None. With ``distinct_classes`` every class is
    bought at most once (existing-platform setting)."""
    n = len(instance.tree.operators)
    classes = range(len(instance.platform.classes))
    best = None
    for part in set_partitions(range(n)):
        if max_procs is not None and len(part) > max_procs:
            continue
        assignment = {i: g for g, block in enumerate(part) for i in block}
        demands = sorted({(g, k) for g, block in enumerate(part) for i in block
                          for k in instance.tree.operators[i].leaf_children})
        choices = [instance.platform.holders(k) for _, k in demands]
        for cls in itertools.product(classes, repeat=len(part)):
            if distinct_classes and len(set(cls)) < len(cls):
                continue
            cost = sum(instance.platform.classes[c].cost for c in cls)
            if best is not None and cost >= best:
                continue
            for servers in itertools.product(*choices):
                downloads = {g: set() for g in range(len(part))}
                for (g, k), l in zip(demands, servers):
                    downloads[g].add((k, l))
                m = Mapping(assignment, dict(enumerate(cls)), {g: frozenset(p) for g, p in downloads.items()})
                if is_feasible(instance, m).feasible:
                    best = cost
                    break
    return best


_SECTION = re.compile(r"^(minimize|maximize|subject to|such that|st|s\.t\.|bounds|binaries|binary|"
                      r"generals|general|end)\s*$", re.IGNORECASE)


def parse_lp(text: str) -> dict:
    """Minimal reader for the LP subset we emit: returns the objective terms,
    constraints as (name, {var: coef}, sense, rhs) and declared binaries."""
    section = None
    chunks: dict[str, list[str]] = {}
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        if _SECTION.match(line):
            section = line.lower()
            chunks.setdefault(section, [])
            continue
        chunks.setdefault(section, []).append(line)

    def terms(expr: str) -> dict[str, float]:
        out = {}
        for sign, coef, var in re.findall(r"([+-]?)\s*([0-9.eE+-]*\d[0-9.eE+-]*|)\s*([A-Za-z_][\w.]*)", expr):
            c = float(coef) if coef else 1.0
            out[var] = out.get(var, 0.0) + (-c if sign == "-" else c)
        return out

    obj_text = " ".join(chunks.get("minimize", []))
    obj_text = obj_text.split(":", 1)[1] if ":" in obj_text else obj_text
    rows = []
    cur = ""
    for line in chunks.get("subject to", []):
        cur = f"{cur} {line}" if cur else line
        m = re.match(r"^\s*([\w.]+)\s*:(.*?)(<=|>=|=)\s*([-+0-9.eE]+)\s*$", cur)
        if m:
            name, expr, sense, rhs = m.groups()
            rows.append((name, terms(expr), sense, float(rhs)))
            cur = ""
    if cur:
        raise ValueError(f"dangling constraint text: {cur!r}")
    binaries = " ".join(chunks.get("binaries", []) + chunks.get("binary", [])).split()
    if "end" not in chunks:
        raise ValueError("missing End")
    return {"objective": terms(obj_text), "rows": rows, "binaries": binaries}


def make_instance(nodes, objects, classes=((1, 100, 1),), servers=None, bwlinkp=100.0, rho=1.0) -> Instance:
    """Hand-built instance; classes are (speed, card, cost) and servers
    (card, held objects, link)."""
    tree = build_tree(nodes, objects)
    if servers is None:
        servers = [(100, range(len(tree.objects)), 100)]
    srv = tuple(ServerSpec(l, bw, frozenset(h), link) for l, (bw, h, link) in enumerate(servers))
    cls = tuple(ProcessorClass(c, s, bw, cost) for c, (s, bw, cost) in enumerate(classes))
    return Instance(tree, PlatformSpec(srv, cls, bwlinkp), rho, Variant())


def replay_ledger(ledger):
    """Re-run the purchase log step by step, checking that no processor is
    sold while hosting an operator; returns the final (purchases, assignment)."""
    purchases, assignment = {}, {}
    for event in ledger.log:
        kind = event[0]
        if kind == "buy":
            _, pid, cls = event
            assert pid not in purchases
            purchases[pid] = cls
        elif kind == "sell":
            _, pid, cls = event
            assert purchases.pop(pid) == cls
            # a reclass is logged as sell+buy of the same id; hosted ops stay
            hosted = [i for i, p in assignment.items() if p == pid]
            assert not hosted or _next_is_rebuy(ledger.log, event)
        elif kind == "assign":
            _, i, pid = event
            assert i not in assignment and pid in purchases
            assignment[i] = pid
        elif kind == "unassign":
            _, i, pid = event
            assert assignment.pop(i) == pid
        else:
            raise AssertionError(event)
    return purchases, assignment


def _next_is_rebuy(log, event):
    idx = next(n for n, e in enumerate(log) if e is event)
    nxt = log[idx + 1] if idx + 1 < len(log) else None
    return nxt is not None and nxt[0] == "buy" and nxt[1] == event[1]
