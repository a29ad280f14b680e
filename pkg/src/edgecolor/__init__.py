"""Edge coloring with (1+eps)*Delta colors: online algorithm, local
derandomization via potential functions, sequential-local execution,
conflict-graph scheduling, and a LOCAL/CONGEST round simulator."""

from edgecolor.graph import (
    Graph,
    EdgeColoring,
    MatchingPartition,
    UNREACHABLE,
    generate,
    verify_edge_coloring,
    canonical_matchings,
    greedy_edge_coloring,
    graph_to_json,
    graph_from_json,
)
from edgecolor.params import Params
from edgecolor.online import (
    ColoringState,
    init_state,
    classify_arrival,
    sample_color,
    apply_updates,
    greedy_fallback,
    process_edge,
    RandomizedChooser,
)
from edgecolor.potentials import (
    phi,
    PotentialState,
    register_potentials,
    potential_delta,
    choose_color_argmin,
    update_potentials,
    check_invariants,
    DeterministicChooser,
    Outcome,
    BOT,
)
from edgecolor.slocal import run_slocal, audit_locality, lazy_p_reconstruction
from edgecolor.scheduling import (
    ConflictGraph,
    Schedule,
    build_conflict_graph,
    conflict_pairs_bruteforce,
    distance_l_edge_coloring,
    reduce_palette,
    execute_schedule,
    nd_decompose,
    execute_via_nd,
)
from edgecolor.distsim import (
    Network,
    RoundTrace,
    run_rounds,
    compress_ids,
    sinkless_orientation,
    degree_split,
    split_to_max_degree,
    congest_pipeline,
)

__version__ = "0.1.0"
