"""Candidate generation: direct matches, primitive decomposition, indirect covers."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from ..library import CellLibrary, StdCell
from ..truthtable import TruthTable, full_mask, input_columns
from .combination import CandidateCombination, CellNode, prune_dead

_A, _B = input_columns(2)
_M2 = full_mask(2)
_M1 = full_mask(1)
_X = input_columns(1)[0]
COL_INV = _M1 ^ _X
COL_BUF = _X
COL_AND = _A & _B
COL_OR = _A | _B
COL_NAND = _M2 ^ COL_AND
COL_NOR = _M2 ^ COL_OR


def find_direct(table: TruthTable, lib: CellLibrary) -> list[CandidateCombination]:
    """Single cells whose function equals ``table`` up to input permutation."""
    if table.num_outputs != 1:
        return []
    n = table.num_inputs
    col = table.columns()[0]
    out = []
    for cell, perm in lib.match_index.get((n, col), []):
        out.append(CandidateCombination(n, (CellNode(cell, tuple(perm)),), (n,)))
    return out


def cell_for(lib: CellLibrary, arity: int, column: int):
    """Smallest-area (cell, perm) realizing ``column``; None if absent."""
    matches = lib.match_index.get((arity, column))
    if not matches:
        return None
    return min(matches, key=lambda cp: (cp[0].area, cp[0].cap, cp[0].ds, cp[0].name))


# ---------------------------------------------------------------------------
# primitive decomposition

@dataclass(frozen=True)
class PrimitiveDAG:
    """AND/OR/NOT network; node ``j`` is signal ``num_inputs + j``."""

    num_inputs: int
    nodes: tuple[tuple, ...]
    outputs: tuple[int, ...]

    def signals(self) -> list[int]:
        n = self.num_inputs
        mask = full_mask(n)
        sigs = list(input_columns(n))
        for node in self.nodes:
            op = node[0]
            if op == "NOT":
                sigs.append(mask ^ sigs[node[1]])
            elif op == "AND":
                sigs.append(sigs[node[1]] & sigs[node[2]])
            else:
                sigs.append(sigs[node[1]] | sigs[node[2]])
        return sigs

    def columns(self) -> tuple[int, ...]:
        sigs = self.signals()
        return tuple(sigs[o] for o in self.outputs)

    def table(self) -> TruthTable:
        return TruthTable.from_columns(self.num_inputs, self.columns())


class _DagBuilder:
    def __init__(self, n):
        self.n = n
        self.nodes: list[tuple] = []
        self.memo: dict[tuple, int] = {}

    def op(self, *node):
        if node[0] in ("AND", "OR") and node[1] > node[2]:
            node = (node[0], node[2], node[1])
        if node in self.memo:
            return self.memo[node]
        sig = self.n + len(self.nodes)
        self.nodes.append(node)
        self.memo[node] = sig
        return sig

    def tree(self, op, sigs):
        sigs = list(sigs)
        while len(sigs) > 1:
            nxt = [self.op(op, sigs[i], sigs[i + 1]) for i in range(0, len(sigs) - 1, 2)]
            if len(sigs) % 2:
                nxt.append(sigs[-1])
            sigs = nxt
        return sigs[0]


def decompose(table: TruthTable) -> PrimitiveDAG:
    """Sum of minterms per output over AND/OR/NOT with shared sub-products.

    Products are built as left-to-right AND chains in input order, so minterms
    that agree on a prefix of literals share that prefix across all outputs.
    A constant output becomes ``x0 & !x0`` (0) or ``x0 | !x0`` (1).
    """
    n = table.num_inputs
    if n < 1:
        raise ValueError("decompose needs at least one input")
    b = _DagBuilder(n)
    neg: dict[int, int] = {}

    def lit(i, val):
        if val:
            return i
        if i not in neg:
            neg[i] = b.op("NOT", i)
        return neg[i]

    outputs = []
    for col in table.columns():
        rows = [r for r in range(1 << n) if (col >> r) & 1]
        if not rows:
            outputs.append(b.op("AND", 0, lit(0, 0)))
            continue
        if len(rows) == 1 << n:
            outputs.append(b.op("OR", 0, lit(0, 0)))
            continue
        products = []
        for r in rows:
            cur = lit(0, (r >> (n - 1)) & 1)
            for i in range(1, n):
                cur = b.op("AND", cur, lit(i, (r >> (n - 1 - i)) & 1))
            products.append(cur)
        outputs.append(b.tree("OR", products))
    return PrimitiveDAG(n, tuple(b.nodes), tuple(outputs))


# ---------------------------------------------------------------------------
# cell-level builder

class _CellBuilder:
    def __init__(self, n):
        self.n = n
        self.nodes: list[CellNode] = []
        self.memo: dict = {}

    def add(self, cell: StdCell, ins) -> int:
        ins = tuple(ins)
        if cell.signature == (1, COL_INV) and ins[0] >= self.n:
            prev = self.nodes[ins[0] - self.n]
            if prev.cell.signature == (1, COL_INV):
                return prev.inputs[0]
        key = (cell.name, ins)
        if key in self.memo:
            return self.memo[key]
        sig = self.n + len(self.nodes)
        self.nodes.append(CellNode(cell, ins))
        self.memo[key] = sig
        return sig

    def place(self, match, ins) -> int:
        cell, perm = match
        return self.add(cell, [ins[p] for p in perm])

    def build(self, outputs) -> CandidateCombination:
        return prune_dead(self.n, self.nodes, tuple(outputs))


def _primitive_templates(lib: CellLibrary, style: str):
    """Return (not_fn, and_fn, or_fn) building cells, or None if unavailable."""
    inv = cell_for(lib, 1, COL_INV)
    and2 = cell_for(lib, 2, COL_AND)
    or2 = cell_for(lib, 2, COL_OR)
    nand2 = cell_for(lib, 2, COL_NAND)
    nor2 = cell_for(lib, 2, COL_NOR)

    def not_fn(b, x):
        if inv:
            return b.place(inv, [x])
        if nand2:
            return b.place(nand2, [x, x])
        return b.place(nor2, [x, x])

    if inv is None and nand2 is None and nor2 is None:
        return None

    def and_direct(b, x, y):
        return b.place(and2, [x, y])

    def and_nand(b, x, y):
        return not_fn(b, b.place(nand2, [x, y]))

    def and_nor(b, x, y):
        return b.place(nor2, [not_fn(b, x), not_fn(b, y)])

    def or_direct(b, x, y):
        return b.place(or2, [x, y])

    def or_nor(b, x, y):
        return not_fn(b, b.place(nor2, [x, y]))

    def or_nand(b, x, y):
        return b.place(nand2, [not_fn(b, x), not_fn(b, y)])

    and_opts = {"direct": and_direct if and2 else None, "nand": and_nand if nand2 else None,
                "nor": and_nor if nor2 else None}
    or_opts = {"direct": or_direct if or2 else None, "nand": or_nand if nand2 else None,
               "nor": or_nor if nor2 else None}
    prefs = {"direct": ("direct", "nand", "nor"), "nand": ("nand", "direct", "nor"), "nor": ("nor", "direct", "nand")}
    and_fn = next((and_opts[k] for k in prefs[style] if and_opts[k]), None)
    or_fn = next((or_opts[k] for k in prefs[style] if or_opts[k]), None)
    if and_fn is None or or_fn is None:
        return None
    if style != "direct" and and_opts[style] is None and or_opts[style] is None:
        return None
    return not_fn, and_fn, or_fn


def cover_primitives(dag: PrimitiveDAG, lib: CellLibrary, style: str = "direct"):
    """Cover every primitive node by its template cells; None if impossible."""
    tmpl = _primitive_templates(lib, style)
    if tmpl is None:
        return None
    not_fn, and_fn, or_fn = tmpl
    b = _CellBuilder(dag.num_inputs)
    sig = list(range(dag.num_inputs))
    for node in dag.nodes:
        if node[0] == "NOT":
            sig.append(not_fn(b, sig[node[1]]))
        elif node[0] == "AND":
            sig.append(and_fn(b, sig[node[1]], sig[node[2]]))
        else:
            sig.append(or_fn(b, sig[node[1]], sig[node[2]]))
    return b.build([sig[o] for o in dag.outputs])


# ---------------------------------------------------------------------------
# cluster rewriting

def consumers(comb: CandidateCombination) -> dict[int, list[int]]:
    cons: dict[int, list[int]] = {}
    n = comb.num_inputs
    for j, node in enumerate(comb.nodes):
        for s in node.inputs:
            cons.setdefault(s, []).append(n + j)
    return cons


def cluster_function(comb: CandidateCombination, cluster: set[int], root: int):
    """(leaves, column over leaves) of a fanout-free cluster rooted at ``root``."""
    n = comb.num_inputs
    members = sorted(cluster)
    leaves = sorted({s for m in members for s in comb.nodes[m - n].inputs if s not in cluster})
    k = len(leaves)
    if k > 6:
        return leaves, None
    mask = full_mask(k)
    vals = dict(zip(leaves, input_columns(k)))
    for m in members:
        node = comb.nodes[m - n]
        vals[m] = node.cell.fn([vals[s] for s in node.inputs], mask) & mask
    return leaves, vals[root]


def replace_cluster(comb: CandidateCombination, cluster: set[int], root: int, leaves, repl: CandidateCombination):
    """Substitute ``repl`` (inputs = ``leaves``) for the cluster computing ``root``."""
    n = comb.num_inputs
    new_nodes: list[CellNode] = []
    remap = {i: i for i in range(n)}
    for j, node in enumerate(comb.nodes):
        sig = n + j
        if sig in cluster and sig != root:
            continue
        if sig == root:
            rmap = {i: remap[leaves[i]] for i in range(len(leaves))}
            for k, rn in enumerate(repl.nodes):
                rmap[repl.num_inputs + k] = n + len(new_nodes)
                new_nodes.append(CellNode(rn.cell, tuple(rmap[x] for x in rn.inputs)))
            remap[root] = rmap[repl.outputs[0]]
            continue
        remap[sig] = n + len(new_nodes)
        new_nodes.append(CellNode(node.cell, tuple(remap[x] for x in node.inputs)))
    return prune_dead(n, new_nodes, tuple(remap[o] for o in comb.outputs))


def outputs_ok(comb: CandidateCombination) -> bool:
    outs = comb.outputs
    return all(o >= comb.num_inputs for o in outs) and len(set(outs)) == len(outs)


def fix_outputs(comb: CandidateCombination, lib: CellLibrary):
    """Give every output its own driving cell (buffer or inverter pair)."""
    if outputs_ok(comb):
        return comb
    buf = cell_for(lib, 1, COL_BUF)
    inv = cell_for(lib, 1, COL_INV)
    if buf is None and inv is None:
        return None
    nodes = list(comb.nodes)
    n = comb.num_inputs
    outs = []
    for o in comb.outputs:
        if o >= n and o not in outs:
            outs.append(o)
            continue
        if buf is not None:
            nodes.append(CellNode(buf[0], (o,)))
        else:
            nodes.append(CellNode(inv[0], (o,)))
            nodes.append(CellNode(inv[0], (n + len(nodes) - 1,)))
        outs.append(n + len(nodes) - 1)
    return CandidateCombination(n, tuple(nodes), tuple(outs))


def fanout_free_clusters(comb: CandidateCombination, root: int, cons, max_size: int = 5, max_leaves: int = 4):
    """All fanout-free clusters rooted at ``root`` up to ``max_size`` nodes."""
    n = comb.num_inputs
    outputs = set(comb.outputs)
    results = []
    seen = set()

    def grow(cluster):
        key = frozenset(cluster)
        if key in seen:
            return
        seen.add(key)
        results.append(set(cluster))
        if len(cluster) >= max_size:
            return
        for m in sorted(cluster):
            for s in comb.nodes[m - n].inputs:
                if s < n or s in cluster or s in outputs:
                    continue
                if all(c in cluster for c in cons.get(s, ())):
                    grow(cluster | {s})

    grow({root})
    out = []
    for cl in results:
        leaves = {s for m in cl for s in comb.nodes[m - n].inputs if s not in cl}
        if len(leaves) <= max_leaves:
            out.append(cl)
    return out


def collapse(comb: CandidateCombination, lib: CellLibrary, max_size: int = 5) -> CandidateCombination:
    """Greedy multi-node pattern merge: fold clusters into single complex cells."""
    n = comb.num_inputs
    max_leaves = min(4, lib.max_arity)
    j = len(comb.nodes) - 1
    cons = consumers(comb)
    while j >= 0:
        root = n + j
        best = None
        for cl in fanout_free_clusters(comb, root, cons, max_size, max_leaves):
            if len(cl) < 2:
                continue
            leaves, col = cluster_function(comb, cl, root)
            if col is None:
                continue
            match = cell_for(lib, len(leaves), col)
            if match is None:
                continue
            score = (len(cl), -match[0].area)
            if best is None or score > best[0]:
                best = (score, cl, leaves, match)
        if best is not None:
            _, cl, leaves, (cell, perm) = best
            repl = CandidateCombination(len(leaves), (CellNode(cell, tuple(perm)),), (len(leaves),))
            comb = replace_cluster(comb, cl, root, leaves, repl)
            cons = consumers(comb)
            j = min(j, len(comb.nodes)) - 1
            continue
        j -= 1
    return comb


# ---------------------------------------------------------------------------
# small-function catalog

@lru_cache(maxsize=32)
def catalog(lib: CellLibrary, max_cells: int = 4, per_function: int = 12) -> dict:
    """Enumerated covers of every 1- and 2-input function.

    Covers use one representative (smallest) cell per distinct function of
    arity <= 2, inputs may be tied.  Keys are ``(num_inputs, column)``; values
    are lists sorted by (cell count, area).
    """
    reps: dict = {}
    for c in lib.combinational:
        if 1 <= c.arity <= 2:
            cur = reps.get(c.signature)
            if cur is None or (c.area, c.cap, c.name) < (cur.area, cur.cap, cur.name):
                reps[c.signature] = c
    reps = sorted(reps.values(), key=lambda c: c.name)
    table: dict = {}
    for k in (1, 2):
        mask = full_mask(k)
        cols = input_columns(k)
        identity = CandidateCombination(k, (), (0,)) if k == 1 else None
        if identity is not None:
            table.setdefault((1, cols[0]), []).append(identity)
        frontier = [((), tuple(cols))]
        kept: dict = {}
        for depth in range(1, max_cells + 1):
            nxt = []
            for gates, sigs in frontier:
                for cell in reps:
                    sym = cell.arity == 2 and (cell.fn([_B, _A], _M2) & _M2) == cell.column
                    idx = range(len(sigs))
                    arg_sets = (itertools.combinations_with_replacement(idx, cell.arity) if sym or cell.arity == 1
                                else itertools.product(idx, repeat=cell.arity))
                    for args in arg_sets:
                        col = cell.fn([sigs[a] for a in args], mask) & mask
                        if col in sigs or col == 0 or col == mask:
                            continue
                        ng = gates + ((cell, args),)
                        used = {a for _, aa in ng for a in aa}
                        if all(k + g in used for g in range(len(ng) - 1)):
                            comb = CandidateCombination(k, tuple(CellNode(c, a) for c, a in ng), (k + len(ng) - 1,))
                            table.setdefault((k, col), []).append(comb)
                        if depth < max_cells:
                            key = frozenset(sigs + (col,))
                            if kept.get(key, 0) < 2:
                                kept[key] = kept.get(key, 0) + 1
                                nxt.append((ng, sigs + (col,)))
            frontier = nxt
    for key, combs in table.items():
        uniq = {}
        for c in combs:
            uniq.setdefault(c.key, c)
        table[key] = sorted(uniq.values(), key=lambda c: (c.num_cells, c.area, c.key))[:per_function]
    return table


def catalog_covers(lib: CellLibrary, k: int, column: int) -> list[CandidateCombination]:
    return catalog(lib).get((k, column), [])


# ---------------------------------------------------------------------------

def _resynthesize_small_clusters(comb: CandidateCombination, lib: CellLibrary) -> CandidateCombination:
    """Replace maximal fanout-free clusters with <= 2 leaves by their cheapest catalog cover."""
    n = comb.num_inputs
    j = len(comb.nodes) - 1
    cons = consumers(comb)
    while j >= 0:
        root = n + j
        best = None
        for cl in fanout_free_clusters(comb, root, cons, max_size=6, max_leaves=2):
            leaves, col = cluster_function(comb, cl, root)
            covers = [c for c in catalog_covers(lib, len(leaves), col) if c.num_cells > 0]
            if covers and covers[0].num_cells < len(cl):
                if best is None or len(cl) - covers[0].num_cells > best[0]:
                    best = (len(cl) - covers[0].num_cells, cl, leaves, covers[0])
        if best is not None:
            _, cl, leaves, repl = best
            comb = replace_cluster(comb, cl, root, leaves, repl)
            cons = consumers(comb)
            j = min(j, len(comb.nodes)) - 1
            continue
        j -= 1
    return comb


def explore_indirect(dag: PrimitiveDAG, lib: CellLibrary, max_cells: int) -> list[CandidateCombination]:
    """Library covers of a primitive DAG within ``max_cells`` cells.

    Covers come from per-primitive templates (direct, NAND-based, NOR-based),
    a greedy complex-cell merge, catalog resynthesis of small clusters, and,
    for single-output functions of at most two inputs, every enumerated
    catalog cover.  Each result is checked exhaustively against the DAG.
    """
    return list(_explore_indirect(dag, lib, max_cells))


@lru_cache(maxsize=128)
def _explore_indirect(dag: PrimitiveDAG, lib: CellLibrary, max_cells: int) -> tuple[CandidateCombination, ...]:
    target = dag.columns()
    raw = []
    for style in ("direct", "nand", "nor"):
        c = cover_primitives(dag, lib, style)
        if c is not None:
            raw.append(c)
    if raw:
        raw.append(collapse(raw[0], lib))
        raw.append(_resynthesize_small_clusters(raw[0], lib))
        raw.append(collapse(raw[-1], lib))
    if dag.num_inputs <= 2 and len(dag.outputs) == 1:
        raw.extend(catalog_covers(lib, dag.num_inputs, target[0]))
    out = []
    seen = set()
    for c in raw:
        c = fix_outputs(c, lib)
        if c is None or c.num_cells > max_cells or c.num_cells == 0:
            continue
        if c.columns != target or c.key in seen:
            continue
        seen.add(c.key)
        out.append(c)
    return tuple(out)
