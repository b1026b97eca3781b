"""Simulated annealing over candidate combinations and the full SCM flow."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np

from ..library import CellLibrary
from ..truthtable import TruthTable
from .candidates import (
    catalog_covers,
    cell_for,
    cluster_function,
    decompose,
    explore_indirect,
    fanout_free_clusters,
    find_direct,
    outputs_ok,
    replace_cluster,
)
from .combination import CandidateCombination, CellNode


class NoFeasibleCandidateError(RuntimeError):
    pass


@dataclass(frozen=True)
class SAConfig:
    initial_temp: float = 10.0
    cooling_rate: float = 0.95
    iterations: int = 1000
    max_cells: int = 8
    keep_top_k: int = 5
    seed: int = 0
    w_area: float = 1.0
    w_power: float = 1.0

    def __post_init__(self):
        if not (self.initial_temp > 0 and math.isfinite(self.initial_temp)):
            raise ValueError("initial_temp must be > 0")
        if not 0 < self.cooling_rate < 1:
            raise ValueError("cooling_rate must be in (0, 1)")
        # iterations = 0 is accepted as the degenerate "return the seeds" schedule
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.max_cells < 1:
            raise ValueError("max_cells must be >= 1")
        if self.keep_top_k < 1:
            raise ValueError("keep_top_k must be >= 1")
        if self.w_area < 0 or self.w_power < 0:
            raise ValueError("objective weights must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CandidateSet:
    target: object
    combinations: tuple[CandidateCombination, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.combinations)

    def __iter__(self):
        return iter(self.combinations)


def objective(comb: CandidateCombination, cfg: SAConfig) -> float:
    return cfg.w_area * comb.area + cfg.w_power * comb.total_cap


class _TopK:
    def __init__(self, k):
        self.k = k
        self.items: dict = {}

    def offer(self, comb, score):
        key = comb.key
        if key in self.items:
            return
        self.items[key] = (score, comb)
        if len(self.items) > self.k * 4:
            self._trim(self.k * 2)

    def _trim(self, k):
        ranked = sorted(self.items.items(), key=lambda kv: (kv[1][0], kv[1][1].num_cells, kv[0]))
        self.items = dict(ranked[:k])

    def cutoff(self) -> float:
        """Score a newcomer must not exceed to enter the top k."""
        if len(self.items) < self.k:
            return math.inf
        return sorted(s for s, _ in self.items.values())[self.k - 1]

    def best(self):
        self._trim(self.k)
        return [c for _, (s, c) in sorted(self.items.items(), key=lambda kv: (kv[1][0], kv[1][1].num_cells, kv[0]))]


def metropolis_accept(delta: float, temp: float, u: float) -> bool:
    """Accept improving and equal moves always, worse ones with probability exp(-delta/T)."""
    return delta <= 0 or u < math.exp(-delta / temp)


def _cell_cost(cells, cfg):
    return sum(cfg.w_area * c.area + cfg.w_power * c.cap for c in cells)


# A move returns (delta, build, dcells) where ``build()`` materialises the
# neighbour, or None when no neighbour exists.  ``delta`` is exact unless it
# is None, in which case the neighbour must be built to score it; ``dcells``
# is the change in cell count before dead-logic pruning (an upper bound).

def _move_substitute(comb, lib, rng, cfg):
    if not comb.nodes:
        return None
    j = int(rng.integers(len(comb.nodes)))
    node = comb.nodes[j]
    alts = [c for c in lib.alternatives(node.cell) if c.name != node.cell.name]
    if not alts:
        return None
    new = alts[int(rng.integers(len(alts)))]

    def build():
        nodes = list(comb.nodes)
        nodes[j] = CellNode(new, node.inputs)
        return CandidateCombination(comb.num_inputs, tuple(nodes), comb.outputs)

    return _cell_cost([new], cfg) - _cell_cost([node.cell], cfg), build, 0


def _pick_cluster(comb, rng, max_size, max_leaves):
    if not comb.nodes:
        return None
    n = comb.num_inputs
    root = n + int(rng.integers(len(comb.nodes)))
    clusters = fanout_free_clusters(comb, root, comb.consumers, max_size, max_leaves)
    if not clusters:
        return None
    cl = clusters[int(rng.integers(len(clusters)))]
    leaves, col = cluster_function(comb, cl, root)
    if col is None:
        return None
    return cl, root, leaves, col


def _rewrite(comb, cl, root, leaves, repl, cfg):
    n = comb.num_inputs
    delta = _cell_cost(repl.cells, cfg) - _cell_cost([comb.nodes[m - n].cell for m in cl], cfg)
    used = {i for node in repl.nodes for i in node.inputs if i < repl.num_inputs}
    used.update(o for o in repl.outputs if o < repl.num_inputs)
    for i, leaf in enumerate(leaves):
        # a dropped internal leaf may leave dead logic behind: score after pruning
        if i not in used and leaf >= n:
            delta = None
            break
    return delta, lambda: replace_cluster(comb, cl, root, leaves, repl), len(repl.nodes) - len(cl)


def _move_resynthesize(comb, lib, rng, cfg):
    picked = _pick_cluster(comb, rng, 4, 2)
    if picked is None:
        return None
    cl, root, leaves, col = picked
    covers = catalog_covers(lib, len(leaves), col)
    if not covers:
        return None
    repl = covers[int(rng.integers(len(covers)))]
    return _rewrite(comb, cl, root, leaves, repl, cfg)


def _move_collapse(comb, lib, rng, cfg):
    picked = _pick_cluster(comb, rng, 5, min(4, lib.max_arity))
    if picked is None:
        return None
    cl, root, leaves, col = picked
    if len(cl) < 2:
        return None
    matches = lib.match_index.get((len(leaves), col))
    if not matches:
        return None
    cell, perm = matches[int(rng.integers(len(matches)))]
    repl = CandidateCombination(len(leaves), (CellNode(cell, tuple(perm)),), (len(leaves),))
    return _rewrite(comb, cl, root, leaves, repl, cfg)


_MOVES = (_move_substitute, _move_resynthesize, _move_collapse)
_MAX_DRAWS = 8


def simulated_annealing(seeds, target: TruthTable, lib: CellLibrary, cfg: SAConfig | None = None) -> CandidateSet:
    """Metropolis search from the best seed; returns the top-k distinct combinations seen.

    Neighbours substitute a cell by a same-function drive variant, rewrite a
    small fanout-free cluster with another catalog cover (adds or removes
    cells) or fold a cluster into one complex cell.  Rewrites preserve the
    cluster function, so feasibility reduces to the cell budget; the returned
    combinations are still checked exhaustively against ``target``.  A final
    pass offers every single drive substitution of each survivor.
    """
    cfg = cfg or SAConfig()
    want = target.columns()
    seeds = [s for s in seeds if s.num_cells <= cfg.max_cells and s.columns == want]
    if not seeds:
        raise NoFeasibleCandidateError("no feasible seed combination within the cell budget")
    top = _TopK(cfg.keep_top_k)
    for s in seeds:
        top.offer(s, objective(s, cfg))
    if cfg.iterations > 0:
        rng = np.random.default_rng(cfg.seed)
        cur = min(seeds, key=lambda s: (objective(s, cfg), s.num_cells, s.key))
        cur_obj = objective(cur, cfg)
        temp = cfg.initial_temp
        for _ in range(cfg.iterations):
            proposal = None
            # redraw moves that have no neighbour or exceed the cell budget
            for _draw in range(_MAX_DRAWS):
                move = _MOVES[int(rng.integers(len(_MOVES)))]
                p = move(cur, lib, rng, cfg)
                if p is not None and cur.num_cells + p[2] <= cfg.max_cells:
                    proposal = p
                    break
            u = rng.random()
            if proposal is not None:
                delta, build, _ = proposal
                cand = None
                if delta is None:
                    cand = build()
                    delta = objective(cand, cfg) - cur_obj
                if metropolis_accept(delta, temp, u):
                    cand = cand or build()
                    if 0 < cand.num_cells <= cfg.max_cells and outputs_ok(cand):
                        cur, cur_obj = cand, objective(cand, cfg)
                        top.offer(cur, cur_obj)
            temp *= cfg.cooling_rate
    # one deterministic pass over the drive variants of every survivor
    for comb in top.best():
        base = objective(comb, cfg)
        for j, node in enumerate(comb.nodes):
            for alt in lib.alternatives(node.cell):
                score = base + _cell_cost([alt], cfg) - _cell_cost([node.cell], cfg)
                if score > top.cutoff():
                    continue
                nodes = list(comb.nodes)
                nodes[j] = CellNode(alt, node.inputs)
                cand = CandidateCombination(comb.num_inputs, tuple(nodes), comb.outputs)
                top.offer(cand, objective(cand, cfg))
    result = [c for c in top.best() if c.columns == want]
    return CandidateSet(target, tuple(result))


def sequential_candidates(lib: CellLibrary) -> list[CandidateCombination]:
    return [CandidateCombination(1, (CellNode(c, (0,)),), (1,)) for c in lib.sequential if c.arity == 1]


@lru_cache(maxsize=256)
def generate_candidates(table: TruthTable, lib: CellLibrary, cfg: SAConfig | None = None,
                        target=None) -> CandidateSet:
    """Direct matches plus indirect covers, refined by annealing."""
    cfg = cfg or SAConfig()
    seeds = list(find_direct(table, lib))
    if table.num_inputs >= 1:
        seeds.extend(explore_indirect(decompose(table), lib, cfg.max_cells))
    if not seeds and table.num_inputs == 0:
        raise NoFeasibleCandidateError("constant blocks have no cone inputs to map")
    found = simulated_annealing(seeds, table, lib, cfg)
    return CandidateSet(target, found.combinations)


def conventional_candidate(table: TruthTable, lib: CellLibrary, cfg: SAConfig | None = None) -> CandidateCombination:
    """Minimum-area cover, the baseline a plain area-driven mapper would pick.

    The search runs with a fixed seed so the baseline does not move when
    only the side-channel-aware run's seed changes.
    """
    cfg = cfg or SAConfig()
    area_cfg = SAConfig(cfg.initial_temp, cfg.cooling_rate, cfg.iterations, cfg.max_cells,
                        cfg.keep_top_k, 0, 1.0, 0.0)
    found = generate_candidates(table, lib, area_cfg)
    return min(found.combinations, key=lambda c: (c.area, c.total_cap, c.num_cells, c.key))


__all__ = [
    "CandidateSet", "NoFeasibleCandidateError", "SAConfig", "conventional_candidate", "generate_candidates",
    "metropolis_accept", "objective", "sequential_candidates", "simulated_annealing", "cell_for",
]
