from .annealing import (
    CandidateSet,
    NoFeasibleCandidateError,
    SAConfig,
    conventional_candidate,
    generate_candidates,
    metropolis_accept,
    objective,
    sequential_candidates,
    simulated_annealing,
)
from .candidates import PrimitiveDAG, decompose, explore_indirect, find_direct
from .combination import CandidateCombination, CellNode

__all__ = [
    "CandidateCombination", "CandidateSet", "CellNode", "NoFeasibleCandidateError", "PrimitiveDAG", "SAConfig",
    "conventional_candidate", "decompose", "explore_indirect", "find_direct", "generate_candidates", "metropolis_accept", "objective",
    "sequential_candidates", "simulated_annealing",
]
