import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scamap.netlist import (
    ArityError, CombinationalCycleError, ConeError, NetlistError, NetlistSyntaxError, UndeclaredNetError,
    block_truth_table, compute_fanout, emit_netlist, evaluate_combinational, extract_truth_table, format_design, parse_netlist,
)
from scamap.truthtable import TruthTable, TruthTableError

from conftest import fixture_design, fixture_text

PRESENT = [0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2]
FIXTURES = ["half_adder", "full_adder", "present_sbox", "aes_sbox", "present_round"]


def one_block(kind, n_in, extra=""):
    wires = "\n".join(f"wire 1 input i{k}" for k in range(n_in))
    ins = ",".join(f"i{k}" for k in range(n_in))
    return f"module m\n{wires}\nwire 1 output y\nblock {kind} b in={ins} out=y\n{extra}end\n"


def test_half_adder_shape(half_adder):
    mod = half_adder.top_module
    assert len(half_adder.blocks) == 2
    assert len(mod.nets) == 4
    assert all(n.width == 1 for n in mod.nets.values())


def test_empty_module():
    d = parse_netlist("module m\nwire 1 input a\nend\n")
    assert d.blocks == []
    assert emit_netlist(d, {}).count("inst") == 0


def test_undeclared_net():
    with pytest.raises(UndeclaredNetError):
        parse_netlist("module m\nwire 1 input a\nwire 1 output y\nblock XOR x in=a,c out=y\nend\n")


def test_syntax_error_reports_position():
    with pytest.raises(NetlistSyntaxError) as exc:
        parse_netlist("module m\nwire 1 input a\nfrobnicate\nend\n")
    assert exc.value.line == 3


def test_arity_mismatch():
    with pytest.raises(ArityError):
        parse_netlist("module m\nwire 2 input a\nwire 1 input b\nwire 2 output y\nblock AND x in=a,b out=y\nend\n")


def test_combinational_cycle():
    src = """module m
wire 1 input a
wire 1 internal p
wire 1 internal q
wire 1 output y
block AND g1 in=a,q out=p
block OR g2 in=p,a out=q
block NOT g3 in=p out=y
end
"""
    with pytest.raises(CombinationalCycleError):
        parse_netlist(src)


def test_register_breaks_cycle():
    src = """module m
wire 1 input a
wire 1 internal p
wire 1 internal q
wire 1 output y
block XOR g1 in=a,q out=p
block DFF r in=p out=q
block NOT g3 in=q out=y
end
"""
    assert len(parse_netlist(src).blocks) == 3


def test_fanout_counts():
    src = """module m
wire 1 input d
wire 1 input e
wire 1 internal u
wire 4 output y
block XOR x0 in=d,e out=y[0]
block XOR x1 in=d,e out=y[1]
block XOR x2 in=e,d out=y[2]
block XOR x3 in=d,e out=y[3]
end
"""
    d = parse_netlist(src)
    assert compute_fanout(d, "d") == 4
    assert compute_fanout(d, "u") == 0
    # an output port counts its own bits
    assert compute_fanout(d, "y") == 4


def test_fanout_shared_operand():
    src = """module mix
wire 1 input data_in0
wire 1 input data_in1
wire 1 input data_in2
wire 1 output o1
wire 1 output o2
block XOR x1 in=data_in0,data_in1 out=o1
block XOR x2 in=data_in0,data_in2 out=o2
end
"""
    assert compute_fanout(parse_netlist(src), "data_in0") == 2


def test_fanout_unknown_net(half_adder):
    with pytest.raises(NetlistError):
        compute_fanout(half_adder, "nope")


@pytest.mark.parametrize("name", FIXTURES)
def test_fanout_sum_invariant(name):
    d = fixture_design(name)
    mod = d.top_module
    pins = sum(len(el.inputs) for el in mod.elements)
    outs = sum(n.width for n in mod.nets.values() if n.direction == "output")
    assert sum(compute_fanout(d, n) for n in mod.nets) == pins + outs


def test_xor_table():
    d = parse_netlist(one_block("XOR", 2))
    assert extract_truth_table(d, [0], 10).rows == (0, 1, 1, 0)


def test_half_adder_cone(half_adder):
    t = extract_truth_table(half_adder, [b.id for b in half_adder.blocks], 10)
    assert t.rows == (0b00, 0b10, 0b10, 0b01)


def test_present_table(present_sbox):
    sbox = next(b for b in present_sbox.blocks if b.kind == "TABLE")
    assert list(extract_truth_table(present_sbox, [sbox.id], 10).rows) == PRESENT


# defining functions, written independently of the evaluator
PRIMS = {
    "AND": (3, lambda v: int(all(v))),
    "OR": (3, lambda v: int(any(v))),
    "XOR": (3, lambda v: sum(v) % 2),
    "NAND": (2, lambda v: 1 - int(all(v))),
    "NOR": (2, lambda v: 1 - int(any(v))),
    "NOT": (1, lambda v: 1 - v[0]),
    "MUX": (3, lambda v: v[2] if v[0] else v[1]),
}


@pytest.mark.parametrize("kind", sorted(PRIMS))
def test_primitive_tables(kind):
    n, f = PRIMS[kind]
    d = parse_netlist(one_block(kind, n))
    want = tuple(f([(r >> (n - 1 - i)) & 1 for i in range(n)]) for r in range(1 << n))
    assert extract_truth_table(d, [0], 10).rows == want


def test_add_ripple():
    src = "module m\nwire 3 input a\nwire 3 input b\nwire 4 output s\nblock ADD add in=a,b out=s\nend\n"
    d = parse_netlist(src)
    mod = d.top_module
    a = np.arange(64) >> 3
    b = np.arange(64) & 7
    values = {("a", i): (a >> i) & 1 == 1 for i in range(3)}
    values.update({("b", i): (b >> i) & 1 == 1 for i in range(3)})
    evaluate_combinational(mod, values)
    s = sum(values[("s", i)].astype(int) << i for i in range(4))
    assert list(s) == list(a + b)


def test_table_kind_single_block():
    d = parse_netlist(one_block("TABLE", 2, "table b 0110\n"))
    assert extract_truth_table(d, [0], 10).rows == (0, 1, 1, 0)


def test_cone_too_wide():
    d = fixture_design("aes_sbox")
    sbox = next(b for b in d.blocks if b.kind == "TABLE")
    with pytest.raises(ConeError):
        extract_truth_table(d, [sbox.id], 4)
    with pytest.raises(ConeError):
        extract_truth_table(d, [sbox.id], 17)


def test_cone_with_register():
    d = fixture_design("present_round")
    reg = next(b for b in d.blocks if b.kind == "DFF")
    with pytest.raises(ConeError):
        extract_truth_table(d, [reg.id], 10)


def test_disconnected_cone():
    d = fixture_design("full_adder")
    by = {b.name: b.id for b in d.blocks}
    with pytest.raises(ConeError):
        extract_truth_table(d, [by["x0"], by["o0"]], 10)


@pytest.mark.parametrize("name", FIXTURES)
def test_canonical_round_trip(name):
    d = fixture_design(name)
    text = format_design(d)
    assert format_design(parse_netlist(text)) == text


def test_parse_does_not_mutate(half_adder):
    before = format_design(half_adder)
    extract_truth_table(half_adder, [0, 1], 10)
    compute_fanout(half_adder, "a")
    assert format_design(half_adder) == before


def test_emit_direct(half_adder, lib65):
    cells = {"XOR": "XOR2_X1", "AND": "AND2_X1"}
    from scamap.mapper import find_direct
    mapping = {}
    for blk in half_adder.blocks:
        combos = find_direct(block_truth_table(blk), lib65)
        mapping[blk.id] = next(c for c in combos if c.cells[0].name == cells[blk.kind])
    text = emit_netlist(half_adder, mapping)
    mapped = parse_netlist(text, lib65)
    assert sorted(i.cell for i in mapped.instances) == ["AND2_X1", "XOR2_X1"]


def test_emit_uncovered(half_adder):
    with pytest.raises(NetlistError):
        emit_netlist(half_adder, {})


def test_truth_table_validation():
    with pytest.raises(TruthTableError):
        TruthTable(2, 1, (0, 1, 1))
    with pytest.raises(TruthTableError):
        TruthTable(1, 1, (0, 2))
    with pytest.raises(TruthTableError):
        TruthTable(17, 1, ())


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.data())
def test_columns_round_trip(n, m, data):
    rows = data.draw(st.lists(st.integers(0, (1 << m) - 1), min_size=1 << n, max_size=1 << n))
    t = TruthTable(n, m, tuple(rows))
    assert TruthTable.from_columns(n, t.columns()) == t


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 15), min_size=16, max_size=16))
def test_table_block_matches_entries(entries):
    hexs = "".join(f"{e:X}" for e in entries)
    src = f"module m\nwire 4 input x\nwire 4 output y\nblock TABLE t in=x out=y\ntable t {hexs}\nend\n"
    d = parse_netlist(src)
    assert list(extract_truth_table(d, [0], 10).rows) == entries


def test_bitblast_names():
    src = "module m\nwire 2 input a\nwire 2 input b\nwire 2 output y\nblock XOR x in=a,b out=y\nend\n"
    assert sorted(b.name for b in parse_netlist(src).blocks) == ["x.0", "x.1"]
