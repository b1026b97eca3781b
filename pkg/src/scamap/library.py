"""Synthetic standard-cell libraries.

A library is a JSON document listing cells with a boolean function over their
input pins plus the dimensionless scalars used by the mapping cost: driving
strength ``ds``, total input capacitance ``cap`` and ``area``.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

import jsonschema

from .truthtable import MAX_INPUTS, TruthTable, full_mask, input_columns


class LibraryError(ValueError):
    pass


LIBRARY_SCHEMA = {
    "type": "object",
    "required": ["name", "cells"],
    "properties": {
        "name": {"type": "string"},
        "node_label": {"type": "string"},
        "cells": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "inputs", "output", "function", "ds", "cap"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "inputs": {"type": "array", "items": {"type": "string"}},
                    "output": {"type": "string"},
                    "function": {"type": "string"},
                    "ds": {"type": "number"},
                    "cap": {"type": "number"},
                    "area": {"type": "number"},
                    "sequential": {"type": "boolean"},
                },
            },
        },
    },
}

# ---------------------------------------------------------------------------
# boolean expressions: ! & ^ | and parentheses, precedence in that order

_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|([01])|(.))")


def _tokenize(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        ident, const, op = m.groups()
        if ident is not None:
            out.append(("id", ident))
        elif const is not None:
            out.append(("const", int(const)))
        elif op in "!&^|()~":
            out.append(("op", "!" if op == "~" else op))
        else:
            raise LibraryError(f"unexpected character {op!r} in expression {text!r}")
        pos = m.end()
    return out


class _ExprParser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise LibraryError(f"malformed expression {self.text!r}")
        self.i += 1
        return tok

    def parse(self):
        node = self.binary(0)
        if self.i != len(self.toks):
            raise LibraryError(f"trailing tokens in expression {self.text!r}")
        return node

    _LEVELS = ("|", "^", "&")

    def binary(self, level):
        if level == len(self._LEVELS):
            return self.unary()
        op = self._LEVELS[level]
        node = self.binary(level + 1)
        while self.peek() == ("op", op):
            self.take()
            node = (op, node, self.binary(level + 1))
        return node

    def unary(self):
        kind, val = self.peek()
        if (kind, val) == ("op", "!"):
            self.take()
            return ("!", self.unary())
        if (kind, val) == ("op", "("):
            self.take()
            node = self.binary(0)
            self.take(")")
            return node
        if kind == "id":
            self.take()
            return ("pin", val)
        if kind == "const":
            self.take()
            return ("const", val)
        raise LibraryError(f"malformed expression {self.text!r}")


def parse_expression(text: str):
    """Parse a cell function into a small tuple AST."""
    return _ExprParser(text).parse()


def expression_pins(ast) -> set[str]:
    if ast[0] == "pin":
        return {ast[1]}
    if ast[0] == "const":
        return set()
    return set().union(*(expression_pins(a) for a in ast[1:]))


def compile_expression(ast, pins: list[str]) -> Callable:
    """Compile to ``fn(args, mask)``.

    ``args`` holds one value per pin; values may be Python ints used as bit
    vectors (``mask`` = all-ones of the vector width) or numpy bool arrays
    (``mask`` = True).
    """
    index = {p: i for i, p in enumerate(pins)}

    def emit(node):
        tag = node[0]
        if tag == "pin":
            return f"a[{index[node[1]]}]"
        if tag == "const":
            return "m" if node[1] else "(m ^ m)"
        if tag == "!":
            return f"(m ^ {emit(node[1])})"
        return f"({emit(node[1])} {tag} {emit(node[2])})"

    src = f"lambda a, m: {emit(ast)}"
    return eval(compile(src, "<cell-function>", "eval"), {"__builtins__": {}})


# ---------------------------------------------------------------------------

_DRIVE_SUFFIX = re.compile(r"^(.*)_X(\d+(?:P\d+)?)$")


@dataclass(frozen=True)
class StdCell:
    name: str
    inputs: tuple[str, ...]
    output: str
    function: str
    ds: float
    cap: float
    area: float = 0.0
    is_sequential: bool = False

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.ds > 0:
            raise LibraryError(f"cell {self.name}: ds must be > 0, got {self.ds}")
        if not self.cap > 0:
            raise LibraryError(f"cell {self.name}: cap must be > 0, got {self.cap}")
        if self.area < 0:
            raise LibraryError(f"cell {self.name}: area must be >= 0")
        if len(set(self.inputs)) != len(self.inputs):
            raise LibraryError(f"cell {self.name}: duplicate input pins")
        if self.output in self.inputs:
            raise LibraryError(f"cell {self.name}: output pin also declared as input")
        unknown = expression_pins(self.ast) - set(self.inputs)
        if unknown:
            raise LibraryError(f"cell {self.name}: function references unknown pin(s) {sorted(unknown)}")

    @cached_property
    def ast(self):
        return parse_expression(self.function)

    @cached_property
    def fn(self) -> Callable:
        return compile_expression(self.ast, list(self.inputs))

    @property
    def arity(self) -> int:
        return len(self.inputs)

    @property
    def family(self) -> str:
        m = _DRIVE_SUFFIX.match(self.name)
        return m.group(1) if m else self.name

    @cached_property
    def column(self) -> int:
        """Single-output column of the cell function (first pin = MSB)."""
        n = self.arity
        return self.fn(list(input_columns(n)), full_mask(n)) & full_mask(n)

    @cached_property
    def symmetric(self) -> bool:
        """True when every input permutation leaves the function unchanged."""
        n = self.arity
        cols = list(input_columns(n))
        mask = full_mask(n)
        for i in range(n - 1):
            swapped = cols[:i] + [cols[i + 1], cols[i]] + cols[i + 2:]
            if self.fn(swapped, mask) & mask != self.column:
                return False
        return True

    @property
    def signature(self) -> tuple[int, int]:
        return (self.arity, self.column)

    def evaluate(self, args, mask):
        return self.fn(args, mask)


def cell_truth_table(cell: StdCell) -> TruthTable:
    if cell.is_sequential:
        raise LibraryError(f"cell {cell.name} is sequential")
    if cell.arity > MAX_INPUTS:
        raise LibraryError(f"cell {cell.name} has more than {MAX_INPUTS} inputs")
    return TruthTable.from_columns(cell.arity, [cell.column])


def scalar_attributes(cell: StdCell) -> tuple[float, float]:
    return float(cell.ds), float(cell.cap)


# primitive kinds a library must be able to realize, as 2-input columns
_A, _B = input_columns(2)
_M2 = full_mask(2)
REQUIRED_FUNCTIONS = {
    "NOT": _M2 ^ _A,
    "AND": _A & _B,
    "OR": _A | _B,
    "XOR": _A ^ _B,
}


@dataclass(frozen=True)
class CellLibrary:
    name: str
    cells: tuple[StdCell, ...]
    node_label: str = ""
    _by_name: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        by_name = {}
        for c in self.cells:
            if c.name in by_name:
                raise LibraryError(f"duplicate cell name {c.name}")
            by_name[c.name] = c
        object.__setattr__(self, "_by_name", by_name)

    def __getitem__(self, name: str) -> StdCell:
        try:
            return self._by_name[name]
        except KeyError:
            raise LibraryError(f"unknown cell {name!r} in library {self.name}") from None

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def __hash__(self):
        return hash((self.name, self.node_label, len(self.cells)))

    @cached_property
    def combinational(self) -> tuple[StdCell, ...]:
        return tuple(c for c in self.cells if not c.is_sequential)

    @cached_property
    def sequential(self) -> tuple[StdCell, ...]:
        return tuple(c for c in self.cells if c.is_sequential)

    @cached_property
    def max_arity(self) -> int:
        return max((c.arity for c in self.combinational), default=0)

    @cached_property
    def match_index(self) -> dict:
        """(arity, column) -> [(cell, perm)], one entry per cell and function.

        ``perm[k]`` is the cone input wired to cell pin ``k``.
        """
        index: dict = {}
        for cell in self.combinational:
            n = cell.arity
            if n == 0 or n > 6:
                continue
            cols = input_columns(n)
            mask = full_mask(n)
            seen = set()
            for perm in itertools.permutations(range(n)):
                col = cell.fn([cols[p] for p in perm], mask) & mask
                if col in seen:
                    continue
                seen.add(col)
                index.setdefault((n, col), []).append((cell, perm))
        return index

    @cached_property
    def same_function(self) -> dict:
        """signature -> cells sharing that exact pin-ordered function."""
        groups: dict = {}
        for cell in self.combinational:
            groups.setdefault(cell.signature, []).append(cell)
        return groups

    def alternatives(self, cell: StdCell) -> list[StdCell]:
        if cell.is_sequential:
            return [c for c in self.sequential if c.name != cell.name]
        return [c for c in self.same_function.get(cell.signature, []) if c.name != cell.name]

    def smallest(self, cells: Iterable[StdCell]) -> StdCell:
        return min(cells, key=lambda c: (c.area, c.cap, c.ds, c.name))

    def missing_primitives(self) -> list[str]:
        """Primitive kinds the combinational cells cannot realize from two inputs."""
        reach = {_A, _B}
        want = set(REQUIRED_FUNCTIONS.values())
        reps = {}
        for c in self.combinational:
            if 1 <= c.arity <= 4:
                reps.setdefault(c.signature, c)
        changed = True
        while changed and not want <= reach:
            changed = False
            for cell in sorted(reps.values(), key=lambda c: c.arity):
                for args in itertools.product(sorted(reach), repeat=cell.arity):
                    col = cell.fn(list(args), _M2) & _M2
                    if col not in reach:
                        reach.add(col)
                        changed = True
                if want <= reach:
                    break
        return [k for k, v in REQUIRED_FUNCTIONS.items() if v not in reach]

    def validate(self, require_sequential: bool = True):
        missing = self.missing_primitives()
        if require_sequential and not self.sequential:
            missing.append("DFF")
        if missing:
            raise LibraryError(f"library {self.name}: missing primitive coverage for {', '.join(missing)}")
        families: dict = {}
        for c in self.cells:
            if _DRIVE_SUFFIX.match(c.name):
                families.setdefault(c.family, []).append(c)
        for fam, members in families.items():
            if len({(m.signature if not m.is_sequential else "seq") for m in members}) > 1:
                raise LibraryError(f"drive family {fam} mixes different functions")
            members = sorted(members, key=lambda m: m.ds)
            for lo, hi in zip(members, members[1:]):
                if not (hi.ds > lo.ds and hi.cap >= lo.cap):
                    raise LibraryError(
                        f"drive family {fam}: ds must strictly increase and cap must not decrease "
                        f"({lo.name} -> {hi.name})"
                    )
        return self


def _cell_from_dict(d) -> StdCell:
    return StdCell(
        name=d["name"],
        inputs=tuple(d["inputs"]),
        output=d["output"],
        function=d["function"],
        ds=float(d["ds"]),
        cap=float(d["cap"]),
        area=float(d.get("area", 0.0)),
        is_sequential=bool(d.get("sequential", False)),
    )


def parse_library(text: str, require_sequential: bool = True) -> CellLibrary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LibraryError(f"library is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, LIBRARY_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise LibraryError(f"library schema violation: {exc.message}") from exc
    cells = [_cell_from_dict(d) for d in doc["cells"]]
    lib = CellLibrary(name=doc["name"], cells=tuple(cells), node_label=doc.get("node_label", ""))
    return lib.validate(require_sequential=require_sequential)


def library_to_dict(lib: CellLibrary) -> dict:
    return {
        "name": lib.name,
        "node_label": lib.node_label,
        "cells": [
            {
                "name": c.name,
                "inputs": list(c.inputs),
                "output": c.output,
                "function": c.function,
                "ds": c.ds,
                "cap": c.cap,
                "area": c.area,
                "sequential": c.is_sequential,
            }
            for c in lib.cells
        ],
    }


FIXTURE_LIBRARIES = ("fixture-65", "fixture-45", "fixture-15")


def load_library(name_or_path) -> CellLibrary:
    """Load a bundled fixture by name (``fixture-45``) or a JSON file by path."""
    path = Path(name_or_path)
    if path.suffix != ".json" and str(name_or_path) in FIXTURE_LIBRARIES:
        text = resources.files("scamap.data").joinpath("libraries", f"{name_or_path}.json").read_text()
    else:
        text = path.read_text()
    return parse_library(text)
