import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from scamap.equivalence import equivalent_exhaustive
from scamap.mapper import (
    NoFeasibleCandidateError, SAConfig, decompose, explore_indirect, find_direct, generate_candidates,
    metropolis_accept, objective, simulated_annealing,
)
from scamap.truthtable import TruthTable

from conftest import AOI_CELLS, make_library

XOR = TruthTable(2, 1, (0, 1, 1, 0))
NAND = TruthTable(2, 1, (1, 1, 1, 0))

NAND_CELLS = [
    {"name": "NAND2_X1", "inputs": ["A", "B"], "function": "!(A&B)", "ds": 1, "cap": 1.0, "area": 1.0},
    {"name": "NAND2_X2", "inputs": ["A", "B"], "function": "!(A&B)", "ds": 2, "cap": 1.8, "area": 1.33},
]
# the six-cell library used for the annealing oracle
SIX = AOI_CELLS + NAND_CELLS + [{"name": "INV_X2", "inputs": ["A"], "function": "!A", "ds": 2, "cap": 0.9,
                                 "area": 1.33}]


def cell_counts(comb):
    out = {}
    for c in comb.cells:
        key = c.function
        out[key] = out.get(key, 0) + 1
    return out


def assert_sound(comb, target, max_cells):
    assert comb.num_cells <= max_cells
    assert comb.is_acyclic()
    assert equivalent_exhaustive(comb.table, target)


def test_find_direct_nand():
    lib = make_library(AOI_CELLS + NAND_CELLS)
    assert sorted(c.cells[0].name for c in find_direct(NAND, lib)) == ["NAND2_X1", "NAND2_X2"]


def test_find_direct_multi_output(aoi_lib):
    assert find_direct(TruthTable(2, 3, (0, 1, 2, 3)), aoi_lib) == []


def test_find_direct_xor_absent(aoi_lib):
    assert find_direct(XOR, aoi_lib) == []


def test_find_direct_permutation(lib65):
    # !(a & b) | c with the pins scrambled still finds an OAI/AOI style cell
    t = TruthTable.from_function(3, 1, lambda v: [1 - ((v[1] & v[2]) | v[0])])
    found = find_direct(t, lib65)
    assert found
    for c in found:
        assert c.table == t


def test_decompose_xor():
    dag = decompose(XOR)
    ops = sorted(n[0] for n in dag.nodes)
    assert ops == ["AND", "AND", "NOT", "NOT", "OR"]
    assert dag.table() == XOR


def test_decompose_constant_zero():
    dag = decompose(TruthTable(2, 1, (0, 0, 0, 0)))
    assert dag.table().rows == (0, 0, 0, 0)
    assert {n[0] for n in dag.nodes} == {"NOT", "AND"}
    assert len(dag.nodes) == 2


def test_decompose_half_adder_shares_literals():
    dag = decompose(TruthTable(2, 2, (0b00, 0b10, 0b10, 0b01)))
    assert dag.table().rows == (0b00, 0b10, 0b10, 0b01)
    assert sum(1 for n in dag.nodes if n[0] == "NOT") == 2


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.data())
def test_decompose_reproduces(n, m, data):
    rows = data.draw(st.lists(st.integers(0, (1 << m) - 1), min_size=1 << n, max_size=1 << n))
    t = TruthTable(n, m, tuple(rows))
    assert decompose(t).table() == t


def test_explore_xor_aoi(aoi_lib):
    covers = explore_indirect(decompose(XOR), aoi_lib, 8)
    assert covers
    counts = [cell_counts(c) for c in covers]
    assert {"!A": 2, "A&B": 2, "A|B": 1} in counts
    for c in covers:
        assert_sound(c, XOR, 8)


def test_explore_budget(aoi_lib):
    assert explore_indirect(decompose(XOR), aoi_lib, 3) == []


def test_explore_nand_cover():
    lib = make_library(AOI_CELLS + NAND_CELLS)
    covers = explore_indirect(decompose(XOR), lib, 8)
    assert any(c.num_cells == 4 and all(x.function == "!(A&B)" for x in c.cells) for c in covers)
    for c in covers:
        assert_sound(c, XOR, 8)


def test_sa_zero_iterations_returns_seed(aoi_lib):
    seed = explore_indirect(decompose(XOR), aoi_lib, 8)[0]
    res = simulated_annealing([seed], XOR, aoi_lib, SAConfig(iterations=0))
    assert list(res.combinations) == [seed]


def test_metropolis_equal_move():
    assert metropolis_accept(0.0, 1e-9, 0.999999)
    assert math.exp(0) == 1
    assert not metropolis_accept(10.0, 1.0, 0.5)
    assert metropolis_accept(-1.0, 1.0, 0.99)


def test_sa_no_seed(aoi_lib):
    with pytest.raises(NoFeasibleCandidateError):
        simulated_annealing([], XOR, aoi_lib, SAConfig())


def test_sa_config_validation():
    for bad in ({"initial_temp": 0}, {"cooling_rate": 1.0}, {"cooling_rate": 0}, {"max_cells": 0},
                {"keep_top_k": 0}, {"iterations": -1}):
        with pytest.raises(ValueError):
            SAConfig(**bad)


def _enumerate_covers(cells, target_col, n, max_cells, bound):
    """All cell DAGs (in creation order) costing at most ``bound`` with every non-output node consumed."""
    mask = (1 << (1 << n)) - 1
    base = [sum(((r >> (n - 1 - i)) & 1) << r for r in range(1 << n)) for i in range(n)]
    fns = []
    for c in cells:
        fns.append((c, c.fn))
    results = []

    def rec(sigs, nodes, used, cost):
        if nodes and sigs[-1] == target_col and all(used[n:-1]):
            results.append(list(nodes))
        if len(nodes) == max_cells:
            return
        for cell, fn in fns:
            c = cost + cell.area + cell.cap
            if c > bound:
                continue
            for args in itertools.product(range(len(sigs)), repeat=cell.arity):
                col = fn([sigs[a] for a in args], mask) & mask
                u = list(used) + [False]
                for a in args:
                    u[a] = True
                rec(sigs + [col], nodes + [(cell, args)], u, c)

    rec(base, [], [False] * n, 0.0)
    return results


def test_sa_against_enumeration():
    lib = make_library(SIX)
    cfg = SAConfig(iterations=500, seed=42, max_cells=4, keep_top_k=5)
    seeds = list(find_direct(XOR, lib)) + explore_indirect(decompose(XOR), lib, cfg.max_cells)
    best_seed = min(objective(s, cfg) for s in seeds)
    res = simulated_annealing(seeds, XOR, lib, cfg)
    got = [objective(c, cfg) for c in res.combinations]
    assert got and min(got) <= best_seed
    bound = max(got) + 1e-9
    covers = _enumerate_covers(list(lib.cells), XOR.columns()[0], 2, cfg.max_cells, bound)
    costs = sorted(sum(cfg.w_area * c.area + cfg.w_power * c.cap for c, _ in cov) for cov in covers)
    assert min(got) == pytest.approx(costs[0])
    # no cover cheaper than the worst returned one was missed by more than the list length
    cheaper = sorted(set(round(c, 9) for c in costs))
    assert len(res.combinations) == cfg.keep_top_k
    mine = sorted(set(round(g, 9) for g in got))
    assert mine == cheaper[:len(mine)]
    for c in res.combinations:
        assert_sound(c, XOR, cfg.max_cells)


def test_sa_deterministic(aoi_lib):
    cfg = SAConfig(iterations=300, seed=7)
    seeds = explore_indirect(decompose(XOR), aoi_lib, 8)
    a = simulated_annealing(seeds, XOR, aoi_lib, cfg)
    b = simulated_annealing(seeds, XOR, aoi_lib, cfg)
    assert [c.key for c in a] == [c.key for c in b]


def test_sa_superset_library_not_worse():
    # enlarging the library never raises the best objective on small targets
    small = make_library(AOI_CELLS)
    big = make_library(SIX)
    cfg = SAConfig(iterations=300, seed=3)
    for code in range(16):
        t = TruthTable.from_columns(2, [code])
        a = min(objective(c, cfg) for c in generate_candidates(t, small, cfg))
        b = min(objective(c, cfg) for c in generate_candidates(t, big, cfg))
        assert b <= a + 1e-9


def test_sa_respects_budget_and_distinct(lib65):
    cfg = SAConfig(iterations=400, seed=1, max_cells=6, keep_top_k=5)
    t = TruthTable.from_function(3, 1, lambda v: [v[0] ^ v[1] ^ v[2]])
    res = generate_candidates(t, lib65, cfg)
    keys = [c.key for c in res]
    assert len(keys) == len(set(keys))
    for c in res:
        assert_sound(c, t, cfg.max_cells)


def test_key_ignores_symmetric_pin_order(lib65):
    from scamap.mapper import CandidateCombination, CellNode

    nand = lib65["NAND2_X1"]
    a = CandidateCombination(2, (CellNode(nand, (0, 1)),), (2,))
    b = CandidateCombination(2, (CellNode(nand, (1, 0)),), (2,))
    assert a.key == b.key


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 255), st.integers(0, 1000))
def test_generated_candidates_sound(code, seed):
    lib = make_library(SIX)
    t = TruthTable.from_columns(3, [code])
    cfg = SAConfig(iterations=60, seed=seed, max_cells=20)
    for c in generate_candidates(t, lib, cfg):
        assert_sound(c, t, cfg.max_cells)
