"""Local optima correlation (LOC) analysis and LOC-assisted adaptive operator
selection for local search on the capacitated vehicle routing problem."""

__version__ = "0.1.0"

from .aos import PolicyState, credit, decision_making, make_policy, record_update, select_operator
from .aos_loc import modulate, update_trapped_set
from .cvrp import (
    CVRPFormatError,
    InfeasiblePlan,
    Instance,
    RoutePlan,
    evaluate,
    generate_uniform_instance,
    initial_solution,
    parse_cvrplib,
    read_instance,
    write_cvrplib,
)
from .loc import LocMatrix, TrapMatrix, kendall_similarity, loc_matrix, sample_trap_matrix, trap_vector
from .operators import (
    ALL_OPERATORS,
    CATALOG,
    Move,
    apply_move,
    enumerate_moves,
    improving_step,
    is_trapped,
    move_delta,
)
from .search import SearchConfig, SearchTrace, perturb, run_base, run_loc_assisted
from .stats import wilcoxon_signed_rank
