"""Line-based netlist IR: parsing, structural queries, evaluation and emission.

Grammar (``#`` starts a comment)::

    module <name>
      wire <width> <input|output|internal> <name>
      block <kind> <name> in=<ref[,ref...]> out=<ref[,ref...]>
      table <block-name> <hex entries>
      inst <cell> <name> <pin>=<ref> ... <outpin>=<ref>
    end
    top <name>

A ``ref`` is ``net`` (all bits, most significant first) or ``net[i]``.
Multi-bit operators are bit-blasted while parsing; ``ADD`` becomes a ripple
chain of XOR/AND/OR blocks, ``TABLE`` blocks stay whole.  On ``inst`` lines
the last pin is the cell's output pin.
"""
from __future__ import annotations

import graphlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .truthtable import DEFAULT_MAX_INPUTS, MAX_INPUTS, TruthTable

Bit = tuple[str, int]

COMBINATIONAL_KINDS = ("AND", "OR", "XOR", "NOT", "NAND", "NOR", "MUX", "ADD", "TABLE")
SEQUENTIAL_KINDS = ("DFF",)
BLOCK_KINDS = COMBINATIONAL_KINDS + SEQUENTIAL_KINDS
DIRECTIONS = ("input", "output", "internal")


class NetlistError(ValueError):
    pass


class NetlistSyntaxError(NetlistError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class UndeclaredNetError(NetlistError):
    pass


class ArityError(NetlistError):
    pass


class CombinationalCycleError(NetlistError):
    pass


class ConeError(NetlistError):
    pass


@dataclass(frozen=True)
class Net:
    id: int
    name: str
    width: int
    direction: str = "internal"

    def bits(self) -> list[Bit]:
        """Bits most-significant first."""
        return [(self.name, i) for i in reversed(range(self.width))]


@dataclass(frozen=True)
class LogicBlock:
    id: int
    kind: str
    name: str
    inputs: tuple[Bit, ...]
    outputs: tuple[Bit, ...]
    table: tuple[int, ...] | None = None

    @property
    def is_sequential(self) -> bool:
        return self.kind in SEQUENTIAL_KINDS


@dataclass(frozen=True)
class Instance:
    id: int
    cell: str
    name: str
    pins: tuple[tuple[str, Bit], ...]  # output pin last

    @property
    def inputs(self) -> tuple[Bit, ...]:
        return tuple(b for _, b in self.pins[:-1])

    @property
    def input_pins(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.pins[:-1])

    @property
    def outputs(self) -> tuple[Bit, ...]:
        return (self.pins[-1][1],)

    @property
    def cone(self) -> str:
        """Name of the source block this instance was emitted for."""
        return self.name.rsplit("__", 1)[0]


@dataclass(frozen=True)
class Module:
    name: str
    nets: Mapping[str, Net]
    blocks: tuple[LogicBlock, ...] = ()
    instances: tuple[Instance, ...] = ()
    sequential_cells: frozenset = field(default_factory=frozenset)

    def net(self, name: str) -> Net:
        try:
            return self.nets[name]
        except KeyError:
            raise UndeclaredNetError(f"module {self.name}: undeclared net {name!r}") from None

    def ports(self, direction: str) -> list[Net]:
        return [n for n in self.nets.values() if n.direction == direction]

    def port_bits(self, direction: str) -> list[Bit]:
        return [b for n in self.ports(direction) for b in n.bits()]

    @property
    def elements(self) -> tuple:
        return self.blocks + self.instances

    def is_sequential(self, el) -> bool:
        if isinstance(el, LogicBlock):
            return el.is_sequential
        return el.cell in self.sequential_cells

    @cached_property
    def drivers(self) -> dict[Bit, object]:
        out = {}
        for el in self.elements:
            for b in el.outputs:
                out[b] = el
        return out

    @cached_property
    def readers(self) -> dict[Bit, list]:
        out: dict = {}
        for el in self.elements:
            for b in el.inputs:
                out.setdefault(b, []).append(el)
        return out

    @cached_property
    def registers(self) -> tuple:
        return tuple(el for el in self.elements if self.is_sequential(el))

    @cached_property
    def topo_order(self) -> tuple:
        """Combinational elements in evaluation order."""
        comb = [el for el in self.elements if not self.is_sequential(el)]
        drivers = {b: el for el in comb for b in el.outputs}
        ts = graphlib.TopologicalSorter()
        for el in comb:
            preds = {drivers[b].name for b in el.inputs if b in drivers}
            ts.add(el.name, *preds)
        by_name = {el.name: el for el in comb}
        try:
            order = list(ts.static_order())
        except graphlib.CycleError as exc:
            raise CombinationalCycleError(f"module {self.name}: combinational cycle through {exc.args[1]}") from None
        return tuple(by_name[n] for n in order)

    def sources(self) -> list[Bit]:
        """Cone sources: input port bits and register outputs."""
        src = self.port_bits("input")
        for el in self.registers:
            src.extend(el.outputs)
        return src

    def sinks(self) -> list[Bit]:
        """Cone sinks: output port bits and register data inputs."""
        snk = self.port_bits("output")
        for el in self.registers:
            snk.extend(el.inputs)
        return snk

    def support(self, bit: Bit) -> list[Bit]:
        """Sources in the combinational fan-in of ``bit``, sorted."""
        seen = set()
        found = set()
        stack = [bit]
        while stack:
            b = stack.pop()
            if b in seen:
                continue
            seen.add(b)
            el = self.drivers.get(b)
            if el is None or self.is_sequential(el):
                found.add(b)
                continue
            stack.extend(el.inputs)
        return sorted(found)

    def cone_elements(self, bits: Iterable[Bit]) -> list:
        seen = set()
        stack = list(bits)
        keep = set()
        while stack:
            b = stack.pop()
            if b in seen:
                continue
            seen.add(b)
            el = self.drivers.get(b)
            if el is None or self.is_sequential(el):
                continue
            keep.add(el.name)
            stack.extend(el.inputs)
        return [el for el in self.topo_order if el.name in keep]


@dataclass(frozen=True)
class Design:
    modules: Mapping[str, Module]
    top: str

    @property
    def top_module(self) -> Module:
        return self.modules[self.top]

    def module_of_block(self, block_id: int) -> Module:
        for m in self.modules.values():
            for b in m.blocks:
                if b.id == block_id:
                    return m
        raise NetlistError(f"unknown block id {block_id}")

    def block(self, block_id: int) -> LogicBlock:
        for b in self.module_of_block(block_id).blocks:
            if b.id == block_id:
                return b
        raise NetlistError(f"unknown block id {block_id}")

    @property
    def blocks(self) -> list[LogicBlock]:
        return [b for m in self.modules.values() for b in m.blocks]

    @property
    def instances(self) -> list[Instance]:
        return [i for m in self.modules.values() for i in m.instances]

    def find_net(self, net) -> tuple[Module, Net]:
        if isinstance(net, tuple):
            mod = self.modules[net[0]]
            return mod, mod.net(net[1])
        for m in self.modules.values():
            for n in m.nets.values():
                if (isinstance(net, int) and n.id == net) or (isinstance(net, str) and n.name == net and m.name == self.top):
                    return m, n
        raise UndeclaredNetError(f"unknown net {net!r}")


# ---------------------------------------------------------------------------
# parsing

_IDENT = r"[A-Za-z_\\$][A-Za-z0-9_.$\\]*"
_REF = re.compile(rf"^({_IDENT})(?:\[(\d+)\])?$")
_NAME = re.compile(rf"^{_IDENT}$")


def _fmt_bit(bit: Bit, nets: Mapping[str, Net]) -> str:
    name, i = bit
    return name if nets[name].width == 1 else f"{name}[{i}]"


class _ModuleBuilder:
    def __init__(self, name, line, next_ids):
        self.name = name
        self.line = line
        self.nets: dict[str, Net] = {}
        self.blocks: list[LogicBlock] = []
        self.instances: list[Instance] = []
        self.tables: dict[str, tuple[list[int], int, int]] = {}
        self.pending_tables: list[tuple[str, int, int]] = []
        self.ids = next_ids
        self.names: set[str] = set()

    def new_id(self, kind):
        self.ids[kind] += 1
        return self.ids[kind] - 1

    def add_net(self, name, width, direction, line, col):
        if name in self.nets:
            raise NetlistSyntaxError(f"net {name!r} declared twice", line, col)
        self.nets[name] = Net(self.new_id("net"), name, width, direction)

    def internal(self, name, width=1):
        base = name
        k = 0
        while name in self.nets:
            k += 1
            name = f"{base}_{k}"
        self.nets[name] = Net(self.new_id("net"), name, width, "internal")
        return name

    def expand(self, ref, line, col) -> list[Bit]:
        m = _REF.match(ref)
        if m is None:
            raise NetlistSyntaxError(f"malformed net reference {ref!r}", line, col)
        name, idx = m.group(1), m.group(2)
        net = self.nets.get(name)
        if net is None:
            raise UndeclaredNetError(f"line {line}, column {col}: undeclared net {name!r}")
        if idx is None:
            return net.bits()
        i = int(idx)
        if i >= net.width:
            raise NetlistSyntaxError(f"bit {i} out of range for {name}[{net.width}]", line, col)
        return [(name, i)]

    def add_block(self, kind, name, ins, outs, line, col, table=None):
        if name in self.names:
            raise NetlistSyntaxError(f"duplicate element name {name!r}", line, col)
        self.names.add(name)
        self.blocks.append(LogicBlock(self.new_id("block"), kind, name, tuple(ins), tuple(outs), table))

    def bitblast(self, kind, name, operands, outs, line, col):
        """Expand one source line into single-bit blocks."""
        if kind in ("AND", "OR", "XOR", "NAND", "NOR"):
            if len(operands) < 2:
                raise ArityError(f"line {line}: {kind} needs at least 2 operands")
            w = len(operands[0])
            if any(len(o) != w for o in operands) or len(outs) != w:
                raise ArityError(f"line {line}: {kind} operand/output widths differ")
            for k in range(w):
                bname = name if w == 1 else f"{name}.{w - 1 - k}"
                self.add_block(kind, bname, [o[k] for o in operands], [outs[k]], line, col)
        elif kind in ("NOT", "DFF"):
            if len(operands) != 1 or len(operands[0]) != len(outs):
                raise ArityError(f"line {line}: {kind} takes one operand of the output width")
            w = len(outs)
            for k in range(w):
                bname = name if w == 1 else f"{name}.{w - 1 - k}"
                self.add_block(kind, bname, [operands[0][k]], [outs[k]], line, col)
        elif kind == "MUX":
            if len(operands) != 3 or len(operands[0]) != 1:
                raise ArityError(f"line {line}: MUX takes in=<sel>,<a>,<b> with a 1-bit select")
            sel, a, b = operands
            if len(a) != len(b) or len(a) != len(outs):
                raise ArityError(f"line {line}: MUX data/output widths differ")
            w = len(outs)
            for k in range(w):
                bname = name if w == 1 else f"{name}.{w - 1 - k}"
                self.add_block("MUX", bname, [sel[0], a[k], b[k]], [outs[k]], line, col)
        elif kind == "ADD":
            self._bitblast_add(name, operands, outs, line, col)
        elif kind == "TABLE":
            ins = [b for o in operands for b in o]
            if len(ins) > MAX_INPUTS:
                raise ArityError(f"line {line}: TABLE has more than {MAX_INPUTS} inputs")
            if name in self.names:
                raise NetlistSyntaxError(f"duplicate element name {name!r}", line, col)
            self.pending_tables.append((name, line, col))
            self.add_block("TABLE", name, ins, outs, line, col, table=None)
        else:
            raise NetlistSyntaxError(f"unknown block kind {kind!r}", line, col)

    def _bitblast_add(self, name, operands, outs, line, col):
        if len(operands) not in (2, 3):
            raise ArityError(f"line {line}: ADD takes two operands and an optional 1-bit carry-in")
        a, b = operands[0], operands[1]
        cin = operands[2] if len(operands) == 3 else None
        w = len(a)
        if len(b) != w or (cin is not None and len(cin) != 1) or len(outs) not in (w, w + 1):
            raise ArityError(f"line {line}: ADD operand/output widths differ")
        a, b = a[::-1], b[::-1]  # LSB first
        sums = outs[::-1]
        carry = cin[0] if cin else None
        for k in range(w):
            tag = f"{name}.{k}"
            if carry is None:
                self.add_block("XOR", f"{tag}.s", [a[k], b[k]], [sums[k]], line, col)
                if k < w - 1 or len(outs) == w + 1:
                    cout = sums[w] if (k == w - 1) else (self.internal(f"{tag}.c"), 0)
                    self.add_block("AND", f"{tag}.c", [a[k], b[k]], [cout], line, col)
                    carry = cout
            else:
                x = (self.internal(f"{tag}.x"), 0)
                self.add_block("XOR", f"{tag}.x", [a[k], b[k]], [x], line, col)
                self.add_block("XOR", f"{tag}.s", [x, carry], [sums[k]], line, col)
                if k < w - 1 or len(outs) == w + 1:
                    g = (self.internal(f"{tag}.g"), 0)
                    t = (self.internal(f"{tag}.t"), 0)
                    cout = sums[w] if (k == w - 1) else (self.internal(f"{tag}.co"), 0)
                    self.add_block("AND", f"{tag}.g", [a[k], b[k]], [g], line, col)
                    self.add_block("AND", f"{tag}.t", [x, carry], [t], line, col)
                    self.add_block("OR", f"{tag}.co", [g, t], [cout], line, col)
                    carry = cout

    def finish(self, sequential_cells) -> Module:
        blocks = []
        for blk in self.blocks:
            if blk.kind == "TABLE":
                if blk.name not in self.tables:
                    raise NetlistSyntaxError(f"TABLE block {blk.name!r} has no table line", self.line, 1)
                entries, tline, tcol = self.tables[blk.name]
                nin, nout = len(blk.inputs), len(blk.outputs)
                if len(entries) != 1 << nin:
                    raise ArityError(
                        f"line {tline}: table {blk.name} has {len(entries)} entries, expected {1 << nin}"
                    )
                if any(e >= 1 << nout for e in entries):
                    raise ArityError(f"line {tline}: table {blk.name} entry wider than {nout} output bits")
                blk = LogicBlock(blk.id, blk.kind, blk.name, blk.inputs, blk.outputs, tuple(entries))
            blocks.append(blk)
        unknown = set(self.tables) - {b.name for b in blocks if b.kind == "TABLE"}
        if unknown:
            raise NetlistSyntaxError(f"table line for unknown TABLE block(s) {sorted(unknown)}", self.line, 1)
        mod = Module(self.name, dict(self.nets), tuple(blocks), tuple(self.instances), frozenset(sequential_cells))
        _check_module(mod)
        return mod


def _check_module(mod: Module):
    driven: dict[Bit, str] = {}
    for b in mod.port_bits("input"):
        driven[b] = "<input port>"
    for el in mod.elements:
        for b in el.outputs:
            if b in driven:
                raise NetlistError(f"module {mod.name}: bit {b[0]}[{b[1]}] has multiple drivers ({driven[b]}, {el.name})")
            driven[b] = el.name
    mod.topo_order  # raises on combinational cycles


def _split_hex(tokens, nout):
    digits = max(1, (nout + 3) // 4)
    joined = "".join(tokens)
    if len(tokens) > 1 and all(len(t) == digits for t in tokens):
        return [int(t, 16) for t in tokens]
    if len(joined) % digits:
        raise ValueError("entry length does not match output width")
    return [int(joined[i:i + digits], 16) for i in range(0, len(joined), digits)]


def parse_netlist(text: str, library=None) -> Design:
    """Parse IR text.  ``library`` resolves which instance cells are sequential."""
    modules: dict[str, Module] = {}
    order: list[str] = []
    top = None
    cur: _ModuleBuilder | None = None
    ids = {"net": 0, "block": 0, "inst": 0}
    seq_cells = set()
    if library is not None:
        seq_cells = {c.name for c in library.sequential}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        toks = line.split()
        head = toks[0]
        if head == "module":
            if cur is not None:
                raise NetlistSyntaxError("nested module (missing 'end')", lineno, col)
            if len(toks) != 2 or not _NAME.match(toks[1]):
                raise NetlistSyntaxError("expected 'module <name>'", lineno, col)
            if toks[1] in modules:
                raise NetlistSyntaxError(f"module {toks[1]!r} declared twice", lineno, col)
            cur = _ModuleBuilder(toks[1], lineno, ids)
        elif head == "end":
            if cur is None:
                raise NetlistSyntaxError("'end' outside a module", lineno, col)
            modules[cur.name] = cur.finish(seq_cells if library is not None else cur.sequential_guess())
            order.append(cur.name)
            cur = None
        elif head == "top":
            if cur is not None or len(toks) != 2:
                raise NetlistSyntaxError("expected 'top <name>' outside modules", lineno, col)
            top = toks[1]
        elif cur is None:
            raise NetlistSyntaxError(f"{head!r} outside a module", lineno, col)
        elif head == "wire":
            if len(toks) != 4:
                raise NetlistSyntaxError("expected 'wire <width> <dir> <name>'", lineno, col)
            try:
                width = int(toks[1])
            except ValueError:
                raise NetlistSyntaxError(f"bad width {toks[1]!r}", lineno, col + len("wire ")) from None
            if width < 1:
                raise NetlistSyntaxError("wire width must be >= 1", lineno, col)
            if toks[2] not in DIRECTIONS:
                raise NetlistSyntaxError(f"bad direction {toks[2]!r}", lineno, col)
            if not _NAME.match(toks[3]):
                raise NetlistSyntaxError(f"bad net name {toks[3]!r}", lineno, col)
            cur.add_net(toks[3], width, toks[2], lineno, col)
        elif head == "block":
            if len(toks) != 5 or not toks[3].startswith("in=") or not toks[4].startswith("out="):
                raise NetlistSyntaxError("expected 'block <kind> <name> in=... out=...'", lineno, col)
            kind, name = toks[1].upper(), toks[2]
            if kind not in BLOCK_KINDS:
                raise NetlistSyntaxError(f"unknown block kind {toks[1]!r}", lineno, col + len("block "))
            if not _NAME.match(name):
                raise NetlistSyntaxError(f"bad block name {name!r}", lineno, col)
            in_col = line.index(toks[3]) + 1
            operands = [cur.expand(r, lineno, in_col) for r in toks[3][3:].split(",") if r]
            out_col = line.index(toks[4]) + 1
            outs = [b for r in toks[4][4:].split(",") if r for b in cur.expand(r, lineno, out_col)]
            if not operands or not outs:
                raise ArityError(f"line {lineno}: block {name} needs inputs and outputs")
            cur.bitblast(kind, name, operands, outs, lineno, col)
        elif head == "table":
            if len(toks) < 3:
                raise NetlistSyntaxError("expected 'table <name> <hex entries>'", lineno, col)
            name = toks[1]
            blk = next((b for b in cur.blocks if b.name == name and b.kind == "TABLE"), None)
            nout = len(blk.outputs) if blk is not None else None
            if nout is None:
                # table may precede its block: keep the raw digits
                cur.tables[name] = (toks[2:], lineno, col)
                continue
            try:
                entries = _split_hex(toks[2:], nout)
            except ValueError:
                raise NetlistSyntaxError("bad hex entries", lineno, col) from None
            cur.tables[name] = (entries, lineno, col)
        elif head == "inst":
            if len(toks) < 4:
                raise NetlistSyntaxError("expected 'inst <cell> <name> pin=net ...'", lineno, col)
            cell, name = toks[1], toks[2]
            pins = []
            for tok in toks[3:]:
                if "=" not in tok:
                    raise NetlistSyntaxError(f"expected pin=net, got {tok!r}", lineno, line.index(tok) + 1)
                pin, ref = tok.split("=", 1)
                bits = cur.expand(ref, lineno, line.index(tok) + 1)
                if len(bits) != 1:
                    raise ArityError(f"line {lineno}: pin {pin} must connect a single bit")
                pins.append((pin, bits[0]))
            if name in cur.names:
                raise NetlistSyntaxError(f"duplicate element name {name!r}", lineno, col)
            cur.names.add(name)
            cur.instances.append(Instance(cur.new_id("inst"), cell, name, tuple(pins)))
        else:
            raise NetlistSyntaxError(f"unknown statement {head!r}", lineno, col)
        # resolve tables declared before their block
        if cur is not None:
            for tname, entry in list(cur.tables.items()):
                raw_entries = entry[0]
                if raw_entries and isinstance(raw_entries[0], str):
                    blk = next((b for b in cur.blocks if b.name == tname and b.kind == "TABLE"), None)
                    if blk is not None:
                        try:
                            cur.tables[tname] = (_split_hex(raw_entries, len(blk.outputs)), entry[1], entry[2])
                        except ValueError:
                            raise NetlistSyntaxError("bad hex entries", entry[1], entry[2]) from None

    if cur is not None:
        raise NetlistSyntaxError(f"module {cur.name} missing 'end'", cur.line, 1)
    if not modules:
        raise NetlistSyntaxError("no module found", 1, 1)
    if top is None:
        top = order[-1]
    if top not in modules:
        raise NetlistError(f"top module {top!r} does not exist")
    return Design(modules, top)


def _sequential_guess(self):
    # without a library, instances of cells named like flip-flops are registers
    return {i.cell for i in self.instances if re.match(r"^(DFF|SDFF|DFFR|FF)", i.cell, re.I)}


_ModuleBuilder.sequential_guess = _sequential_guess


# ---------------------------------------------------------------------------
# structural queries

def compute_fanout(design: Design, net) -> int:
    """Block/instance input pins plus output-port bits reading ``net``.

    ``net`` is a net id, a top-module net name, or ``(module, name)``.
    """
    mod, n = design.find_net(net)
    bits = set(n.bits())
    count = sum(1 for el in mod.elements for b in el.inputs if b in bits)
    if n.direction == "output":
        count += n.width
    return count


def bit_fanout(mod: Module, bit: Bit) -> int:
    count = len([1 for el in mod.readers.get(bit, ()) for b in el.inputs if b == bit])
    if mod.nets[bit[0]].direction == "output":
        count += 1
    return count


# ---------------------------------------------------------------------------
# evaluation

def _block_eval(blk: LogicBlock, args, mask):
    k = blk.kind
    if k == "AND" or k == "NAND":
        v = args[0]
        for a in args[1:]:
            v = v & a
        return [mask ^ v if k == "NAND" else v]
    if k == "OR" or k == "NOR":
        v = args[0]
        for a in args[1:]:
            v = v | a
        return [mask ^ v if k == "NOR" else v]
    if k == "XOR":
        v = args[0]
        for a in args[1:]:
            v = v ^ a
        return [v]
    if k == "NOT":
        return [mask ^ args[0]]
    if k == "MUX":
        s, a, b = args
        return [(s & b) | ((mask ^ s) & a)]
    if k == "TABLE":
        n = len(args)
        idx = np.zeros(np.shape(args[0]), dtype=np.int64)
        for i, a in enumerate(args):
            idx |= np.asarray(a, dtype=np.int64) << (n - 1 - i)
        words = np.asarray(blk.table, dtype=np.int64)[idx]
        m = len(blk.outputs)
        return [((words >> (m - 1 - j)) & 1).astype(bool) for j in range(m)]
    raise NetlistError(f"cannot evaluate block kind {k}")


def evaluate_combinational(mod: Module, values: dict, library=None, elements=None, shape=None) -> dict:
    """Propagate numpy bool vectors through the combinational logic in place.

    ``values`` maps source bits (inputs, register outputs) to arrays; missing
    bits read as 0.  Returns ``values`` extended with every driven bit.
    """
    if shape is None:
        shape = np.shape(next(iter(values.values()))) if values else (1,)
    zero = np.zeros(shape, bool)
    for el in (mod.topo_order if elements is None else elements):
        args = [values.get(b, zero) for b in el.inputs]
        if isinstance(el, LogicBlock):
            outs = _block_eval(el, args, True)
        else:
            if library is None:
                raise NetlistError("evaluating cell instances requires a library")
            outs = [library[el.cell].fn(args, True)]
        for b, v in zip(el.outputs, outs):
            values[b] = np.broadcast_to(np.asarray(v, dtype=bool), zero.shape)
    return values


def register_next(mod: Module, values: dict, library=None) -> dict:
    """Register output values after one clock edge."""
    zero = None
    nxt = {}
    for el in mod.registers:
        if isinstance(el, LogicBlock):
            for d, q in zip(el.inputs, el.outputs):
                nxt[q] = values.get(d)
        else:
            cell = library[el.cell] if library is not None else None
            args = [values.get(b) for b in el.inputs]
            if cell is not None:
                nxt[el.outputs[0]] = np.asarray(cell.fn(args, True), dtype=bool)
            else:
                nxt[el.outputs[0]] = args[0]
    for q, v in nxt.items():
        if v is None:
            zero = zero if zero is not None else np.zeros_like(next(a for a in values.values()))
            nxt[q] = zero
    return nxt


def _rows_matrix(n):
    r = np.arange(1 << n, dtype=np.int64)
    return [((r >> (n - 1 - i)) & 1).astype(bool) for i in range(n)]


def extract_truth_table(design: Design, block_set: Iterable[int], max_inputs: int = DEFAULT_MAX_INPUTS) -> TruthTable:
    """Exhaustively evaluate the cone formed by ``block_set``.

    Inputs are the boundary bits in order of first use, outputs the bits the
    set drives (those used outside the set or leaving the module when any
    exist), in block order.
    """
    if max_inputs > MAX_INPUTS:
        raise ConeError(f"max_inputs may not exceed {MAX_INPUTS}")
    ids = list(dict.fromkeys(block_set))
    if not ids:
        raise ConeError("empty block set")
    mod = design.module_of_block(ids[0])
    by_id = {b.id: b for b in mod.blocks}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise ConeError(f"blocks {missing} are not in module {mod.name}")
    blocks = [by_id[i] for i in ids]
    if any(b.is_sequential for b in blocks):
        raise ConeError("cone contains state elements; cut at register boundaries")
    driven = {bit for b in blocks for bit in b.outputs}
    inputs: list[Bit] = []
    for b in blocks:
        for bit in b.inputs:
            if bit not in driven and bit not in inputs:
                inputs.append(bit)
    if len(inputs) > max_inputs:
        raise ConeError(f"cone has {len(inputs)} inputs, more than max_inputs={max_inputs}")
    names = {b.name for b in blocks}
    if len(blocks) > 1:
        # connectivity over shared bits
        adj = {b.name: set() for b in blocks}
        for b in blocks:
            for c in blocks:
                if b is not c and set(b.inputs + b.outputs) & set(c.inputs + c.outputs):
                    adj[b.name].add(c.name)
        seen = {blocks[0].name}
        stack = [blocks[0].name]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if seen != names:
            raise ConeError("block set is not connected")
    outs_all = [bit for b in blocks for bit in b.outputs]
    outside = [
        bit for bit in outs_all
        if mod.nets[bit[0]].direction == "output" or any(r.name not in names for r in mod.readers.get(bit, ()))
    ]
    outputs = outside or outs_all
    order = [el for el in mod.topo_order if el.name in names]
    values = dict(zip(inputs, _rows_matrix(len(inputs))))
    evaluate_combinational(mod, values, elements=order, shape=(1 << len(inputs),))
    cols = [_pack(values[bit]) for bit in outputs]
    return TruthTable.from_columns(len(inputs), cols)


def _pack(arr) -> int:
    arr = np.asarray(arr, dtype=bool)
    packed = np.packbits(arr, bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def block_truth_table(block: LogicBlock) -> TruthTable:
    """Function of a single block over its own input pins."""
    n = len(block.inputs)
    if block.is_sequential:
        return TruthTable.from_columns(1, [0b10])
    args = _rows_matrix(n)
    outs = _block_eval(block, args, True)
    return TruthTable.from_columns(n, [_pack(np.broadcast_to(o, (1 << n,))) for o in outs])


# ---------------------------------------------------------------------------
# emission

def _wire_lines(mod: Module) -> list[str]:
    return [f"  wire {n.width} {n.direction} {n.name}" for n in mod.nets.values()]


def format_design(design: Design) -> str:
    """Canonical text of a design (bit-level blocks, instances as parsed)."""
    out = []
    for mod in design.modules.values():
        out.append(f"module {mod.name}")
        out.extend(_wire_lines(mod))
        for blk in mod.blocks:
            ins = ",".join(_fmt_bit(b, mod.nets) for b in blk.inputs)
            outs = ",".join(_fmt_bit(b, mod.nets) for b in blk.outputs)
            out.append(f"  block {blk.kind} {blk.name} in={ins} out={outs}")
            if blk.kind == "TABLE":
                digits = max(1, (len(blk.outputs) + 3) // 4)
                out.append(f"  table {blk.name} " + "".join(f"{e:0{digits}X}" for e in blk.table))
        for inst in mod.instances:
            pins = " ".join(f"{p}={_fmt_bit(b, mod.nets)}" for p, b in inst.pins)
            out.append(f"  inst {inst.cell} {inst.name} {pins}")
        out.append("end")
    out.append(f"top {design.top}")
    return "\n".join(out) + "\n"


def emit_netlist(design: Design, solution) -> str:
    """Write every block as standard-cell instances.

    ``solution`` is a MappingSolution or a mapping ``block id ->
    CandidateCombination`` that must cover every block of the design.
    """
    mapping = solution.full_mapping() if hasattr(solution, "full_mapping") else dict(solution)
    out = []
    for mod in design.modules.values():
        nets = dict(mod.nets)
        lines = []
        used = set(nets)
        for blk in mod.blocks:
            comb = mapping.get(blk.id)
            if comb is None:
                raise NetlistError(f"uncovered block {blk.name} (id {blk.id})")
            if comb.num_inputs != len(blk.inputs) or len(comb.outputs) != len(blk.outputs):
                raise NetlistError(f"combination shape does not match block {blk.name}")
            n = comb.num_inputs
            sig_bits: dict[int, Bit] = {i: blk.inputs[i] for i in range(n)}
            for k, sig in enumerate(comb.outputs):
                if sig < n or sig in sig_bits:
                    raise NetlistError(f"block {blk.name}: output {k} is not driven by its own cell")
                sig_bits[sig] = blk.outputs[k]
            for j in range(len(comb.nodes)):
                sig = n + j
                if sig not in sig_bits:
                    wname = f"{blk.name}__n{j}"
                    while wname in used:
                        wname += "_"
                    used.add(wname)
                    nets[wname] = Net(-1, wname, 1, "internal")
                    sig_bits[sig] = (wname, 0)
            consumed = {s for node in comb.nodes for s in node.inputs} | set(comb.outputs)
            for j, node in enumerate(comb.nodes):
                if n + j not in consumed:
                    raise NetlistError(f"block {blk.name}: dangling candidate internal net from node {j}")
                pins = [f"{p}={_fmt_bit(sig_bits[s], nets)}" for p, s in zip(node.cell.inputs, node.inputs)]
                pins.append(f"{node.cell.output}={_fmt_bit(sig_bits[n + j], nets)}")
                lines.append(f"  inst {node.cell.name} {blk.name}__{j} " + " ".join(pins))
        for inst in mod.instances:
            pins = " ".join(f"{p}={_fmt_bit(b, nets)}" for p, b in inst.pins)
            lines.append(f"  inst {inst.cell} {inst.name} {pins}")
        out.append(f"module {mod.name}")
        out.extend(f"  wire {w.width} {w.direction} {w.name}" for w in nets.values())
        out.extend(lines)
        out.append("end")
    out.append(f"top {design.top}")
    return "\n".join(out) + "\n"
