"""Integer linear program export in CPLEX LP text format.

Variable naming (all binary):

* ``x_i_P``          operator i runs on processor P
* ``d_P_k_l``        processor P downloads object k from server l
* ``y_i_P_j_Q``      operator i on P is the parent of operator j on Q
* ``used_P``         processor P hosts at least one operator

where ``P`` is ``c_u`` (u-th processor of class c) for the constructive
program and just ``c`` for the non-constructive one. With ``prune_y`` (the
default) y variables exist only for (parent, child) operator pairs; the
others are identically zero. Constraints whose left-hand side has no
non-zero term are omitted (their right-hand side is never negative).
The dialect is documented in docs/lp_format.md.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .model import Instance

LINE_WIDTH = 250


class VariantError(ValueError):
    pass


def _num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return format(float(v), ".17g")


@dataclass
class _Writer:
    objective: list[tuple[float, str]] = field(default_factory=list)
    rows: list[tuple[str, list[tuple[float, str]], str, float]] = field(default_factory=list)
    binaries: list[str] = field(default_factory=list)

    def row(self, name, terms, sense, rhs):
        terms = [(c, v) for c, v in terms if c != 0]
        if terms:
            self.rows.append((name, terms, sense, rhs))

    @staticmethod
    def _expr(terms) -> list[str]:
        parts = []
        for pos, (c, v) in enumerate(terms):
            sign = "-" if c < 0 else ("+" if pos else "")
            mag = abs(c)
            body = v if mag == 1 else f"{_num(mag)} {v}"
            parts.append(f"{sign} {body}" if sign else body)
        return parts

    def _wrap(self, head: str, parts: list[str], tail: str) -> list[str]:
        lines, cur = [], head
        for p in parts + [tail]:
            if len(cur) + 1 + len(p) > LINE_WIDTH and cur.strip():
                lines.append(cur)
                cur = "   " + p
            else:
                cur = f"{cur} {p}" if cur else p
        lines.append(cur)
        return lines

    def render(self, title: str) -> str:
        out = [f"\\ {title}", "Minimize"]
        out += self._wrap(" obj:", self._expr(self.objective), "")
        out.append("Subject To")
        for name, terms, sense, rhs in self.rows:
            out += self._wrap(f" {name}:", self._expr(terms), f"{sense} {_num(rhs)}")
        out.append("Binaries")
        line = ""
        for v in self.binaries:
            if len(line) + len(v) + 1 > LINE_WIDTH:
                out.append(line)
                line = ""
            line = f"{line} {v}"
        if line:
            out.append(line)
        out.append("End")
        return "\n".join(s.rstrip() for s in out) + "\n"


def _export(instance: Instance, procs: list[tuple[int, ...]], link_bw, server_link, prune_y: bool,
            title: str) -> str:
    tree, plat = instance.tree, instance.platform
    rho = instance.throughput
    N = range(len(tree.operators))
    O = range(len(tree.objects))
    S = range(len(plat.servers))
    ops = tree.operators
    rate = [o.rate for o in tree.objects]
    tag = {p: "_".join(map(str, p)) for p in procs}
    par = {(op.parent, op.id) for op in ops if op.parent is not None}
    leaf = {(i, k) for i in N for k in ops[i].leaf_set}

    def x(i, p):
        return f"x_{i}_{tag[p]}"

    def d(p, k, l):
        return f"d_{tag[p]}_{k}_{l}"

    def y(i, p, j, q):
        return f"y_{i}_{tag[p]}_{j}_{tag[q]}"

    def used(p):
        return f"used_{tag[p]}"

    if prune_y:
        y_pairs = sorted(par)
    else:
        y_pairs = [(i, j) for i in N for j in N]

    w = _Writer()
    w.objective = [(plat.classes[p[0]].cost, used(p)) for p in procs]

    for i in N:
        w.row(f"assign_{i}", [(1, x(i, p)) for p in procs], "=", 1)
    for p in procs:
        for k in O:
            for l in S:
                holds = 1 if k in plat.servers[l].held_objects else 0
                w.row(f"hold_{tag[p]}_{k}_{l}", [(1, d(p, k, l))], "<=", holds)
                w.row(f"need_{tag[p]}_{k}_{l}",
                      [(1, d(p, k, l))] + [(-1, x(i, p)) for i in N if (i, k) in leaf], "<=", 0)
            w.row(f"once_{tag[p]}_{k}", [(1, d(p, k, l)) for l in S], "<=", 1)
            for i in N:
                if (i, k) in leaf:
                    w.row(f"fetch_{i}_{k}_{tag[p]}", [(1, d(p, k, l)) for l in S] + [(-1, x(i, p))], ">=", 0)

    for i, j in y_pairs:
        is_par = (i, j) in par
        for p in procs:
            for q in procs:
                name = y(i, p, j, q)
                suffix = f"{i}_{tag[p]}_{j}_{tag[q]}"
                if not is_par:
                    w.row(f"ypar_{suffix}", [(1, name)], "<=", 0)
                w.row(f"yx_{suffix}", [(1, name), (-1, x(i, p))], "<=", 0)
                w.row(f"yxc_{suffix}", [(1, name), (-1, x(j, q))], "<=", 0)
                if is_par:
                    w.row(f"yand_{suffix}", [(1, name), (-1, x(i, p)), (-1, x(j, q))], ">=", -1)

    for p in procs:
        w.row(f"usedub_{tag[p]}", [(1, used(p))] + [(-1, x(i, p)) for i in N], "<=", 0)
        for i in N:
            w.row(f"usedlb_{i}_{tag[p]}", [(1, used(p)), (-1, x(i, p))], ">=", 0)

    for p in procs:
        cls = plat.classes[p[0]]
        w.row(f"cpu_{tag[p]}", [(rho * ops[i].compute_demand / cls.speed, x(i, p)) for i in N], "<=", 1)
        terms = [(rate[k], d(p, k, l)) for k in O for l in S]
        for i, j in sorted(par):
            for q in procs:
                if q != p:
                    terms.append((rho * ops[j].output_size, y(i, p, j, q)))
                    terms.append((rho * ops[j].output_size, y(i, q, j, p)))
        w.row(f"card_{tag[p]}", terms, "<=", cls.card_bandwidth)

    for l in S:
        w.row(f"srvcard_{l}", [(rate[k], d(p, k, l)) for p in procs for k in O], "<=",
              plat.servers[l].card_bandwidth)
    for l in S:
        for p in procs:
            w.row(f"srvlink_{l}_{tag[p]}", [(rate[k], d(p, k, l)) for k in O], "<=", server_link(l, p))

    for a, p in enumerate(procs):
        for q in procs[a + 1:]:
            terms = []
            for i, j in sorted(par):
                terms.append((rho * ops[j].output_size, y(i, p, j, q)))
                terms.append((rho * ops[j].output_size, y(i, q, j, p)))
            w.row(f"plink_{tag[p]}_{tag[q]}", terms, "<=", link_bw(p, q))

    w.binaries = ([x(i, p) for i in N for p in procs] + [d(p, k, l) for p in procs for k in O for l in S]
                  + [y(i, p, j, q) for i, j in y_pairs for p in procs for q in procs]
                  + [used(p) for p in procs])
    return w.render(title)


def export_ilp_constr(instance: Instance, prune_y: bool = True) -> str:
    plat = instance.platform
    n = len(instance.tree.operators)
    procs = [(c.id, u) for c in plat.classes for u in range(n)]
    return _export(instance, procs,
                   link_bw=lambda p, q: plat.inter_processor_bandwidth,
                   server_link=lambda l, p: plat.servers[l].link_to_processors,
                   prune_y=prune_y, title="constructive operator placement")


def export_ilp_nonconstr(instance: Instance, prune_y: bool = True) -> str:
    """Program for an existing platform: every class is one processor."""
    if instance.variant.constructive:
        raise VariantError("instance is flagged constructive; use export_ilp_constr")
    plat = instance.platform
    procs = [(c.id,) for c in plat.classes]
    het = instance.variant.heterogeneous_links

    def link_bw(p, q):
        if het and plat.class_links is not None:
            return plat.class_links[p[0]][q[0]]
        return plat.inter_processor_bandwidth

    def server_link(l, p):
        srv = plat.servers[l]
        if het and srv.class_links is not None:
            return srv.class_links[p[0]]
        return srv.link_to_processors

    return _export(instance, procs, link_bw, server_link, prune_y, "non-constructive operator placement")


def expected_counts(instance: Instance, prune_y: bool = True, constructive: bool = True) -> dict[str, int]:
    """Variable counts of the exported program, by family."""
    n = len(instance.tree.operators)
    c = len(instance.platform.classes)
    o = len(instance.tree.objects)
    s = len(instance.platform.servers)
    p = c * n if constructive else c
    pairs = len(instance.tree.edges()) if prune_y else n * n
    return {"x": n * p, "d": p * o * s, "y": pairs * p * p, "used": p}
