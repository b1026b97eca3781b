"""Equivalence checking: exhaustive truth tables per cone plus DAG isomorphism."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .library import CellLibrary
from .mapper.combination import CandidateCombination
from .netlist import Design, LogicBlock, Module, _pack, _rows_matrix, evaluate_combinational
from .truthtable import MAX_INPUTS, TruthTable


class EquivalenceError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    equivalent: bool
    counterexample: tuple[int, ...] | None = None

    def __bool__(self):
        return self.equivalent


def equivalent_exhaustive(f: TruthTable, g: TruthTable) -> Verdict:
    """Row-by-row comparison; the counterexample is the first differing input row."""
    if f.num_inputs != g.num_inputs or f.num_outputs != g.num_outputs:
        raise EquivalenceError(
            f"shape mismatch: {f.num_inputs}x{f.num_outputs} vs {g.num_inputs}x{g.num_outputs}"
        )
    n = f.num_inputs
    for r, (a, b) in enumerate(zip(f.rows, g.rows)):
        if a != b:
            return Verdict(False, tuple((r >> (n - 1 - i)) & 1 for i in range(n)))
    return Verdict(True)


def _dag_graph(comb: CandidateCombination) -> nx.DiGraph:
    g = nx.DiGraph()
    n = comb.num_inputs
    for i in range(n):
        g.add_node(i, label=("in", i))
    outs = {}
    for k, o in enumerate(comb.outputs):
        outs.setdefault(o, []).append(k)
    for j, node in enumerate(comb.nodes):
        sig = n + j
        g.add_node(sig, label=("cell", node.cell.signature, tuple(outs.get(sig, ()))))
        for pin, src in enumerate(node.inputs):
            g.add_edge(src, sig, pin=None if node.cell.symmetric else pin)
    for i in range(n):
        if i in outs:
            g.nodes[i]["label"] = ("in", i, tuple(outs[i]))
    return g


def isomorphic(a: CandidateCombination, b: CandidateCombination) -> bool:
    """Label-preserving graph isomorphism; labels are cell functions, input positions and pins."""
    if a.num_inputs != b.num_inputs or len(a.nodes) != len(b.nodes) or len(a.outputs) != len(b.outputs):
        return False
    if sorted(c.signature for c in a.cells) != sorted(c.signature for c in b.cells):
        return False
    return nx.is_isomorphic(
        _dag_graph(a), _dag_graph(b),
        node_match=lambda x, y: x["label"] == y["label"],
        edge_match=lambda x, y: x["pin"] == y["pin"],
    )


@dataclass(frozen=True)
class ConeVerdict:
    cone: str
    equivalent: bool
    counterexample: dict[str, int] | None = None
    inputs: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        d = {"cone": self.cone, "equivalent": self.equivalent, "counterexample": self.counterexample,
             "inputs": self.inputs}
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class EquivalenceReport:
    cones: tuple[ConeVerdict, ...] = field(default_factory=tuple)

    @property
    def overall(self) -> bool:
        return all(c.equivalent for c in self.cones)

    def failures(self) -> list[ConeVerdict]:
        return [c for c in self.cones if not c.equivalent]

    def to_dict(self) -> dict:
        return {"overall": self.overall, "num_cones": len(self.cones), "cones": [c.to_dict() for c in self.cones]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        bad = self.failures()
        lines = [f"equivalence: {'PASS' if self.overall else 'FAIL'} ({len(self.cones) - len(bad)}/{len(self.cones)} cones)"]
        for c in bad:
            detail = c.note or f"counterexample {c.counterexample}"
            lines.append(f"  {c.cone}: {detail}")
        return "\n".join(lines)


def _bit_name(bit) -> str:
    return f"{bit[0]}[{bit[1]}]"


def _port_signature(mod: Module):
    return sorted((n.name, n.width, n.direction) for n in mod.nets.values() if n.direction != "internal")


def _register_map(mod: Module, lib: CellLibrary | None) -> dict:
    """Q bit -> D bit of every register in the module."""
    regs = {}
    for el in mod.registers:
        if isinstance(el, LogicBlock):
            for d, q in zip(el.inputs, el.outputs):
                regs[q] = d
        else:
            if len(el.inputs) != 1:
                raise EquivalenceError(f"register {el.name}: only single-input flip-flops are supported")
            if lib is not None:
                cell = lib[el.cell]
                if cell.fn([0b10], 0b11) & 0b11 != 0b10:
                    raise EquivalenceError(f"register {el.name}: cell {el.cell} is not a D flip-flop")
            regs[el.outputs[0]] = el.inputs[0]
    return regs


def _check_instances(mod: Module, lib: CellLibrary):
    for inst in mod.instances:
        if inst.cell not in lib:
            raise EquivalenceError(f"instance {inst.name}: cell {inst.cell!r} not in library {lib.name}")
        cell = lib[inst.cell]
        if tuple(inst.input_pins) != tuple(cell.inputs) or inst.pins[-1][0] != cell.output:
            raise EquivalenceError(f"instance {inst.name}: pins do not match cell {cell.name}")


def _eval_cones(mod: Module, sinks, support, lib) -> dict:
    """Packed columns of every sink over ``support``; sinks sharing a support share one evaluation."""
    size = 1 << len(support)
    values = dict(zip(support, _rows_matrix(len(support))))
    elements = mod.cone_elements(list(sinks))
    evaluate_combinational(mod, values, library=lib, elements=elements, shape=(size,))
    out = {}
    for sink in sinks:
        v = values.get(sink)
        if v is None:
            v = np.zeros(size, bool)
        out[sink] = _pack(np.broadcast_to(v, (size,)))
    return out


def verify_module(orig: Module, mapped: Module, lib: CellLibrary) -> list[ConeVerdict]:
    if _port_signature(orig) != _port_signature(mapped):
        raise EquivalenceError(f"module {orig.name}: port lists differ")
    _check_instances(mapped, lib)
    regs_a = _register_map(orig, None)
    regs_b = _register_map(mapped, lib)
    if set(regs_a) != set(regs_b):
        missing = sorted(_bit_name(b) for b in set(regs_a) ^ set(regs_b))
        raise EquivalenceError(f"module {orig.name}: registers do not correspond by name ({missing[:4]})")
    verdicts = []
    for q, d in sorted(regs_a.items()):
        if regs_b[q] != d:
            verdicts.append(ConeVerdict(f"{orig.name}/reg:{_bit_name(q)}", False, None, 0,
                                        f"register data input {_bit_name(regs_b[q])} != {_bit_name(d)}"))
    sinks = list(dict.fromkeys(orig.port_bits("output") + sorted(set(regs_a.values()))))
    supports = {sink: tuple(sorted(set(orig.support(sink)) | set(mapped.support(sink)))) for sink in sinks}
    groups: dict[tuple, list] = {}
    for sink in sinks:
        if len(supports[sink]) <= MAX_INPUTS:
            groups.setdefault(supports[sink], []).append(sink)
    cols_a, cols_b = {}, {}
    for support, group in groups.items():
        cols_a.update(_eval_cones(orig, group, support, None))
        cols_b.update(_eval_cones(mapped, group, support, lib))
    for sink in sinks:
        cone = f"{orig.name}/{_bit_name(sink)}"
        support = supports[sink]
        k = len(support)
        if k > MAX_INPUTS:
            verdicts.append(ConeVerdict(cone, False, None, k, "unverifiable: more than 16 cone inputs"))
            continue
        ca, cb = cols_a[sink], cols_b[sink]
        if ca == cb:
            verdicts.append(ConeVerdict(cone, True, None, k))
            continue
        diff = ca ^ cb
        r = (diff & -diff).bit_length() - 1
        cex = {_bit_name(b): (r >> (k - 1 - i)) & 1 for i, b in enumerate(support)}
        verdicts.append(ConeVerdict(cone, False, cex, k))
    return verdicts


def verify_design(original: Design, mapped: Design, lib: CellLibrary) -> EquivalenceReport:
    """Compare every port and register cone of every module by exhaustive evaluation."""
    if set(original.modules) != set(mapped.modules):
        raise EquivalenceError("designs contain different modules")
    verdicts = []
    for name, mod in original.modules.items():
        verdicts.extend(verify_module(mod, mapped.modules[name], lib))
    return EquivalenceReport(tuple(verdicts))
