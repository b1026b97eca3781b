"""Side-channel-aware technology mapping onto standard-cell libraries."""
from .assignment import CostWeights, hungarian, mapping_cost, solve_mapping
from .estimators import TVLA, CPAAttack, DPAAttack, TechMapper
from .equivalence import equivalent_exhaustive, verify_design
from .library import load_library, parse_library
from .mapper import SAConfig, generate_candidates, simulated_annealing
from .netlist import emit_netlist, parse_netlist
from .powersim import PowerModel, simulate_traces
from .sca import cpa_attack, dpa_attack, estimate_mutual_information, success_rate, tvla, welch_t
from .truthtable import TruthTable

__version__ = "0.1.0"

__all__ = [
    "CPAAttack", "CostWeights", "DPAAttack", "TVLA", "TechMapper", "PowerModel", "SAConfig", "TruthTable", "cpa_attack", "dpa_attack", "emit_netlist",
    "equivalent_exhaustive", "estimate_mutual_information", "generate_candidates", "hungarian", "load_library",
    "mapping_cost", "parse_library", "parse_netlist", "simulate_traces", "simulated_annealing", "solve_mapping",
    "success_rate", "tvla", "verify_design", "welch_t",
]
