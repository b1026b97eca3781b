"""Leakage cost, bipartite construction and Hungarian assignment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mapper.combination import CandidateCombination
from .truthtable import TruthTable
from .vulnerability import VulnerabilityProfile

MODES = ("replicated", "exclusive")


class InfeasibleAssignmentError(RuntimeError):
    pass


@dataclass(frozen=True)
class CostWeights:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        vals = (self.alpha, self.beta, self.gamma)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("cost weights must be finite")
        if any(v < 0 for v in vals):
            raise ValueError("cost weights must be non-negative")
        if all(v == 0 for v in vals):
            raise ValueError("cost weights may not all be zero")

    def scaled(self, k: float) -> "CostWeights":
        return CostWeights(self.alpha * k, self.beta * k, self.gamma * k)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


def mapping_cost(profile: VulnerabilityProfile, comb: CandidateCombination, w: CostWeights) -> float:
    """Sum over the cells of a*SV/DS + b*IO*C + g*F*DS."""
    total = 0.0
    for cell in comb.cells:
        if not cell.ds > 0:
            raise ValueError(f"cell {cell.name} has non-positive drive strength")
        total += w.alpha * profile.SV / cell.ds + w.beta * profile.IO * cell.cap + w.gamma * profile.F * cell.ds
    if not math.isfinite(total):
        raise OverflowError("mapping cost is not finite")
    return total


@dataclass(frozen=True)
class CostMatrix:
    rows: tuple[int, ...]
    cols: tuple[tuple[int, int], ...]  # (owning block id, index within its candidate set)
    entries: np.ndarray
    combinations: tuple[CandidateCombination, ...] = field(default=(), compare=False, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def feasible(self, i: int) -> np.ndarray:
        return np.flatnonzero(np.isfinite(self.entries[i]))


def build_bipartite(blocks, sets, w: CostWeights, min_ds: float | None = None) -> CostMatrix:
    """Rows are blocks, columns every candidate of every set.

    ``blocks`` holds ``(block id, profile, table)`` triples and ``sets`` the
    matching candidate sets.  An edge exists when the candidate realises the
    row's table exactly; with ``min_ds`` set, candidates containing a cell
    weaker than that are dropped as well.
    """
    blocks = list(blocks)
    sets = list(sets)
    if len(blocks) != len(sets):
        raise ValueError("one candidate set per block is required")
    cols, combos = [], []
    for (bid, _, _), cs in zip(blocks, sets):
        for k, comb in enumerate(cs):
            cols.append((bid, k))
            combos.append(comb)
    m = np.full((len(blocks), len(combos)), np.inf)
    for i, (bid, profile, table) in enumerate(blocks):
        want = table.columns() if isinstance(table, TruthTable) else tuple(table)
        nin = table.num_inputs
        for j, comb in enumerate(combos):
            if comb.num_inputs != nin or len(comb.outputs) != len(want) or comb.columns != want:
                continue
            if min_ds is not None and any(c.ds < min_ds for c in comb.cells):
                continue
            m[i, j] = mapping_cost(profile, comb, w)
        if not np.isfinite(m[i]).any():
            raise InfeasibleAssignmentError(f"block {bid} has no feasible candidate")
    return CostMatrix(tuple(b[0] for b in blocks), tuple(cols), m, tuple(combos))


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total: float

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)


def _lsap(a: np.ndarray) -> list[int]:
    """Min-cost assignment of n rows into m >= n columns; returns the column of each row.

    Shortest augmenting paths with row/column potentials, one row at a time,
    vectorised over columns.
    """
    n, m = a.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)  # p[j]: row (1-based) on column j, column 0 is the root
    way = np.zeros(m + 1, dtype=np.int64)
    cost = np.zeros((n + 1, m + 1))
    cost[1:, 1:] = a
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cur = cost[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of = [0] * n
    for j in range(1, m + 1):
        if p[j]:
            col_of[p[j] - 1] = j - 1
    return col_of


def hungarian(m) -> Assignment:
    """Optimal assignment of every row to a distinct column.

    Accepts a CostMatrix or a 2-D array; ``inf`` marks a missing edge.  An
    infinite entry is replaced by a big-M that no feasible total can reach,
    and surplus columns behave like padding rows of a uniform sentinel (ten
    times the largest finite entry), which never changes the optimum of the
    real rows.  A row left on a missing edge makes the problem infeasible.
    """
    entries = m.entries if isinstance(m, CostMatrix) else np.asarray(m, dtype=float)
    if entries.ndim != 2 or entries.shape[0] == 0:
        raise ValueError("cost matrix must be 2-D with at least one row")
    nr, nc = entries.shape
    if np.isnan(entries).any():
        raise ValueError("cost matrix contains NaN")
    finite = np.isfinite(entries)
    for i in range(nr):
        if not finite[i].any():
            raise InfeasibleAssignmentError(f"row {i} has no finite entry")
    if nc < nr:
        raise InfeasibleAssignmentError(f"{nr} rows cannot be matched to {nc} distinct columns")
    top = float(np.abs(entries[finite]).max())
    sentinel = 10.0 * top if top > 0 else 1.0
    big = nc * (sentinel + top) + 1.0
    col_of = _lsap(np.where(finite, entries, big))
    pairs = []
    total = 0.0
    for i in range(nr):
        j = col_of[i]
        if j >= nc or not finite[i, j]:
            raise InfeasibleAssignmentError("no perfect assignment over finite entries exists")
        pairs.append((i, j))
        total += float(entries[i, j])
    return Assignment(tuple(pairs), total)


@dataclass
class MappingSolution:
    assignment: dict[int, CandidateCombination]
    total_cost: float
    mode: str
    costs: dict[int, float] = field(default_factory=dict)
    conventional: dict[int, CandidateCombination] = field(default_factory=dict)
    names: dict[int, str] = field(default_factory=dict)

    def full_mapping(self) -> dict[int, CandidateCombination]:
        out = dict(self.conventional)
        out.update(self.assignment)
        return out

    def to_dict(self) -> dict:
        def entry(bid, comb, cost):
            d = {"block": self.names.get(bid, str(bid)), "cells": [c.name for c in comb.cells],
                 "wiring": comb.describe(), "outputs": comb.to_dict()["outputs"]}
            if cost is not None:
                d["cost"] = cost
            return d

        return {
            "mode": self.mode,
            "total_cost": self.total_cost,
            "vulnerable": {str(b): entry(b, c, self.costs.get(b)) for b, c in sorted(self.assignment.items())},
            "conventional": {str(b): entry(b, c, None) for b, c in sorted(self.conventional.items())},
        }


def solve_mapping(blocks, sets, w: CostWeights, mode: str = "replicated", min_ds: float | None = None) -> MappingSolution:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    blocks = list(blocks)
    cm = build_bipartite(blocks, sets, w, min_ds)
    chosen: dict[int, int] = {}
    if mode == "replicated":
        for i in range(len(cm.rows)):
            row = cm.entries[i]
            chosen[i] = int(np.argmin(row))  # first minimum = lowest index
    else:
        chosen = hungarian(cm).as_dict()
    assignment, costs = {}, {}
    total = 0.0
    for i, j in sorted(chosen.items()):
        bid = cm.rows[i]
        assignment[bid] = cm.combinations[j]
        costs[bid] = float(cm.entries[i, j])
        total += costs[bid]
    return MappingSolution(assignment, total, mode, costs)

