"""Simple exclusion process on finite connected graphs.

Exact occupation probabilities from the product-form stationary law, an
independent generator-based oracle, and an event-driven simulator.
"""

__version__ = "0.1.0"

from .combinatorics import (
    DEFAULT_CAP,
    CapExceededError,
    StationaryDistribution,
    class_weight,
    enumerate_class,
    enumerate_constrained,
    inclusion_weights,
    members,
    stationary_measure,
    to_mask,
)
from .exact import (
    MonotonicityReport,
    OccupationProfile,
    check_pairwise_monotonicity,
    check_sigma_log_concavity,
    check_sum_rule,
    occupation_probability,
    occupation_profile,
    occupation_ratio,
    path_end_interior_ratio,
    path_profile,
    star_leaf_center_ratio,
    star_profile,
)
from .graph import (
    Graph,
    GraphSpecError,
    LogWeight,
    ValidationReport,
    config_weight,
    cycle_graph,
    grid_graph,
    load_graph,
    parse_graph_spec,
    path_graph,
    star_graph,
    validate,
    vertex_weight,
)
from .oracle import (
    BalanceReport,
    GeneratorMatrix,
    build_generator,
    check_detailed_balance,
    check_irreducibility,
    solve_stationary,
    swap,
    total_variation,
    transition_rate,
)
from .simulator import SimState, SimulationEstimate, init_state, merge, run, run_replicas, step
