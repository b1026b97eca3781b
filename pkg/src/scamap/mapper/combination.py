from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property

from ..library import StdCell
from ..truthtable import TruthTable, full_mask, input_columns


@dataclass(frozen=True)
class CellNode:
    cell: StdCell
    inputs: tuple[int, ...]


@dataclass(frozen=True)
class CandidateCombination:
    """A small DAG of library cells realizing one block's function.

    Signals ``0..num_inputs-1`` are the cone inputs, signal ``num_inputs + j``
    is the output of ``nodes[j]``.  Nodes are stored in topological order.
    Sequential cells evaluate as their next-state function.
    """

    num_inputs: int
    nodes: tuple[CellNode, ...]
    outputs: tuple[int, ...]

    @property
    def cells(self) -> list[StdCell]:
        return [n.cell for n in self.nodes]

    @property
    def num_cells(self) -> int:
        return len(self.nodes)

    @cached_property
    def area(self) -> float:
        return float(sum(n.cell.area for n in self.nodes))

    @cached_property
    def total_cap(self) -> float:
        return float(sum(n.cell.cap for n in self.nodes))

    @cached_property
    def consumers(self) -> dict[int, list[int]]:
        cons: dict[int, list[int]] = {}
        for j, node in enumerate(self.nodes):
            for s in node.inputs:
                cons.setdefault(s, []).append(self.num_inputs + j)
        return cons

    def signals(self) -> list[int]:
        n = self.num_inputs
        mask = full_mask(n)
        sigs = list(input_columns(n))
        for node in self.nodes:
            sigs.append(node.cell.fn([sigs[i] for i in node.inputs], mask) & mask)
        return sigs

    @cached_property
    def columns(self) -> tuple[int, ...]:
        sigs = self.signals()
        return tuple(sigs[o] for o in self.outputs)

    @cached_property
    def table(self) -> TruthTable:
        return TruthTable.from_columns(self.num_inputs, self.columns)

    @cached_property
    def key(self) -> tuple:
        """Canonical structural key, blind to node order and to pin order of symmetric cells."""
        n = self.num_inputs
        digest = [str(i).encode() for i in range(n)]
        for node in self.nodes:
            kids = [digest[i] for i in node.inputs]
            if node.cell.symmetric:
                kids.sort()
            digest.append(hashlib.blake2b(b"|".join([node.cell.name.encode(), *kids]), digest_size=16).digest())
        return (n, self.num_cells, tuple(digest[o].hex() if o >= n else digest[o].decode() for o in self.outputs))

    def is_acyclic(self) -> bool:
        return all(all(i < self.num_inputs + j for i in node.inputs) for j, node in enumerate(self.nodes))

    def validate(self):
        n = self.num_inputs
        if not self.is_acyclic():
            raise ValueError("combination nodes are not in topological order")
        for node in self.nodes:
            if len(node.inputs) != node.cell.arity:
                raise ValueError(f"node {node.cell.name} has {len(node.inputs)} inputs, cell needs {node.cell.arity}")
        if any(not 0 <= o < n + len(self.nodes) for o in self.outputs):
            raise ValueError("output refers to an unknown signal")
        return self

    def describe(self) -> list[dict]:
        n = self.num_inputs

        def name(s):
            return f"in{s}" if s < n else f"n{s - n}"

        return [
            {"node": f"n{j}", "cell": node.cell.name, "inputs": [name(s) for s in node.inputs]}
            for j, node in enumerate(self.nodes)
        ]

    def to_dict(self) -> dict:
        n = self.num_inputs
        return {
            "cells": [c.name for c in self.cells],
            "wiring": self.describe(),
            "outputs": [f"in{o}" if o < n else f"n{o - n}" for o in self.outputs],
            "area": self.area,
        }

    def __repr__(self):
        cells = ",".join(c.name for c in self.cells)
        return f"CandidateCombination(inputs={self.num_inputs}, cells=[{cells}], outputs={list(self.outputs)})"


def prune_dead(num_inputs: int, nodes, outputs) -> CandidateCombination:
    """Drop nodes that no output depends on and renumber."""
    n = num_inputs
    live = set()
    stack = [o for o in outputs if o >= n]
    while stack:
        s = stack.pop()
        if s in live:
            continue
        live.add(s)
        stack.extend(i for i in nodes[s - n].inputs if i >= n)
    if len(live) == len(nodes):
        return CandidateCombination(n, tuple(nodes), tuple(outputs))
    remap = {i: i for i in range(n)}
    kept = []
    for j, node in enumerate(nodes):
        if n + j in live:
            remap[n + j] = n + len(kept)
            kept.append(node)
    new_nodes = tuple(CellNode(nd.cell, tuple(remap[i] for i in nd.inputs)) for nd in kept)
    return CandidateCombination(n, new_nodes, tuple(remap[o] for o in outputs))
