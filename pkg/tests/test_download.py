import random

import pytest
from hypothesis import given, settings, strategies as st

from streamplace.constraints import SERVER_CARD, is_feasible, server_loads
from streamplace.download import (
    SelectionFailure, downgrade_all, select_servers_intelligent, select_servers_random,
)
from streamplace.instances import GeneratorConfig, generate, three_partition_instance
from streamplace.model import Mapping
from streamplace.pipeline import solve_heuristic
from streamplace.placement import HeuristicFailure, place
from helpers import desk_instance, make_instance


def unit_objs(n):
    return [{"id": k, "size": 1, "frequency": 1} for k in range(n)]


def test_random_single_holder_always_chosen():
    inst = make_instance([{"id": 0, "leaves": [0, 1]}], unit_objs(2),
                         servers=[(10, [0], 10), (10, [1], 10), (10, [1], 10)])
    m = Mapping({0: 0}, {0: 0})
    for seed in range(20):
        out = select_servers_random(inst, m, seed)
        assert (0, 0) in out.downloads[0]


def test_random_selection_is_seeded():
    inst = generate(GeneratorConfig(max_operators=30, seed=9))
    ledger = place(inst, "random", 9)
    assert select_servers_random(inst, ledger, 4) == select_servers_random(inst, ledger, 4)


def test_random_selection_overload_reports_server_card():
    nodes = [{"id": i, "children": [i + 1] if i < 3 else [], "leaves": [i]} for i in range(4)]
    inst = make_instance(nodes, unit_objs(4), servers=[(3, [0, 1, 2, 3], 10)])
    m = Mapping({i: i for i in range(4)}, {i: 0 for i in range(4)})
    with pytest.raises(SelectionFailure) as exc:
        select_servers_random(inst, m, 0)
    assert exc.value.kind == SERVER_CARD


def test_intelligent_exclusive_objects():
    inst = make_instance([{"id": 0, "children": [1], "leaves": [0]}, {"id": 1, "leaves": [1, 2]}], unit_objs(3),
                         servers=[(10, [0], 10), (10, [1], 10), (10, [2], 10)])
    out = select_servers_intelligent(inst, Mapping({0: 0, 1: 1}, {0: 0, 1: 0}))
    assert out.downloads == {0: frozenset({(0, 0)}), 1: frozenset({(1, 1), (2, 2)})}


def test_intelligent_exclusive_failure_is_early():
    nodes = [{"id": 0, "children": [1], "leaves": [0]}, {"id": 1, "leaves": [0]}]
    inst = make_instance(nodes, unit_objs(1), servers=[(1, [0], 10)])
    with pytest.raises(SelectionFailure) as exc:
        select_servers_intelligent(inst, Mapping({0: 0, 1: 1}, {0: 0, 1: 0}))
    assert exc.value.kind == SERVER_CARD
    assert "exclusive" in str(exc.value)


def test_intelligent_prefers_single_type_servers():
    inst = make_instance([{"id": 0, "leaves": [0, 1]}], unit_objs(2),
                         servers=[(10, [0, 1], 10), (10, [1], 10)])
    out = select_servers_intelligent(inst, Mapping({0: 0}, {0: 0}))
    assert out.downloads[0] == frozenset({(0, 0), (1, 1)})


def test_intelligent_pressure_order():
    # object 1 is wanted by 4 processors, object 0 by 3; both sit on 2 servers,
    # so object 1 has the higher pressure and is routed first despite its index
    leaves = [1, 0, 1, 0, 1, 0, 1]
    nodes = [{"id": i, "children": [i + 1] if i < 6 else [], "leaves": [leaves[i]]} for i in range(7)]
    inst = make_instance(nodes, unit_objs(2), servers=[(4, [0, 1], 1), (3, [0, 1], 1)])
    m = Mapping({0: 0, 1: 0, 2: 1, 3: 1, 4: 2, 5: 2, 6: 3}, {u: 0 for u in range(4)})
    out = select_servers_intelligent(inst, m)
    assert all((1, 0) in out.downloads[u] for u in range(4))
    assert all((0, 1) in out.downloads[u] for u in range(3))


def test_intelligent_on_reduction_proof_mapping():
    a, R = (4, 5, 6, 4, 5, 6), 15
    inst = three_partition_instance(a, R)
    owner = [0 if k < 3 else 1 for k, count in enumerate(a) for _ in range(count)]
    out = select_servers_intelligent(inst, Mapping(dict(enumerate(owner)), {0: 0, 1: 0}))
    for u in (0, 1):
        servers = {l for _, l in out.downloads[u]}
        assert len(out.downloads[u]) == 3 and len(servers) == 3
    assert all(load == 1 for load in server_loads(inst, out).values())
    assert is_feasible(inst, out).feasible


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["comp", "subtree", "object"]))
def test_selection_invariants(seed, heuristic):
    inst = desk_instance(seed, n_ops=random.Random(seed).randint(1, 7), n_servers=3)
    try:
        ledger = place(inst, heuristic, seed)
        out = select_servers_intelligent(inst, ledger)
    except (HeuristicFailure, SelectionFailure):
        return
    for u, pairs in out.downloads.items():
        objs = [k for k, _ in pairs]
        assert len(objs) == len(set(objs))
        for k, l in pairs:
            holders = inst.platform.holders(k)
            assert l in holders
            if len(holders) == 1:
                assert l == holders[0]
    loads = server_loads(inst, out)
    for s in inst.platform.servers:
        assert loads[s.id] <= s.card_bandwidth * (1 + 1e-9) + 1e-9


def test_downgrade_to_base_class():
    inst = generate(GeneratorConfig(max_operators=3, classes=(24, 0), seed=2))
    n = len(inst.tree.operators)
    top = Mapping({i: 0 for i in range(n)}, {0: 0})
    top = select_servers_intelligent(inst, top)
    out = downgrade_all(inst, top)
    assert out.purchases == {0: 1}
    assert top.cost(inst.platform) - out.cost(inst.platform) == 5299 + 5999
    assert out.assignment == top.assignment and out.downloads == top.downloads


def test_downgrade_keeps_exact_fit():
    inst = make_instance([{"id": 0, "leaves": [0, 1], "compute_demand": 4}], unit_objs(2),
                         classes=((4, 2, 1), (8, 8, 5)))
    m = select_servers_intelligent(inst, Mapping({0: 0}, {0: 1}))
    assert downgrade_all(inst, m).purchases == {0: 0}


def test_downgrade_leaves_tight_processor():
    inst = make_instance([{"id": 0, "leaves": [0, 1], "compute_demand": 5}], unit_objs(2),
                         classes=((4, 2, 1), (8, 8, 5)))
    m = select_servers_intelligent(inst, Mapping({0: 0}, {0: 1}))
    assert downgrade_all(inst, m) == m


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_downgrade_idempotent_and_cheaper(seed):
    inst = generate(GeneratorConfig(max_operators=25, alpha=1.3, seed=seed))
    try:
        sol = solve_heuristic(inst, "comp", downgrade=False)
    except (HeuristicFailure, SelectionFailure):
        return
    if not sol.feasible:
        return
    once = downgrade_all(inst, sol.mapping)
    assert downgrade_all(inst, once) == once
    assert once.cost(inst.platform) <= sol.total_cost
    assert once.assignment == sol.mapping.assignment
    assert is_feasible(inst, once).feasible
