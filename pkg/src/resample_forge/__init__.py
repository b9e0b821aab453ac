"""Shared-random-tape parallel resampling solver for local colouring constraints.

The pieces, bottom up: digraphs and dependency machinery (graph_core), the
constraint model (rule_engine), distance-sparse vertex partitions
(partitioner), counter-based shared symbol streams (tape), the parallel
resampling loop (mta_runner), witness forests with their recovery, grounding,
restriction, and counting oracles (landscape_lab), the exhaustive finite-tape
solver (derand), generators and file formats (instance_io), and the CLI (cli).
"""

from .derand import (
    DEFAULT_TAPE_CAP,
    DerandBudget,
    ExhaustedError,
    InfeasibleError,
    PassState,
    TapeAttempt,
    decode_tape,
    derand_solve,
    explicit_k,
    explicit_k_log,
    internal_pass,
    run_finite_tape,
    scan_order,
    start_state,
    theoretical_budget,
    threshold_m,
    work_counter,
)
from .graph_core import (
    Digraph,
    VertexOrder,
    ball,
    build_rel,
    check_subexp,
    greedy_mis,
    power_graph,
)
from .instance_io import (
    ExperimentRecord,
    append_results,
    gen_grid_ksat,
    gen_torus_nae,
    load_dimacs,
    load_problem,
    read_results,
    save_problem,
)
from .landscape_lab import (
    FinalisedLandscape,
    GForest,
    GroundingError,
    Landscape,
    build_landscape,
    count_delta_trees,
    enumerate_grounded_forests,
    ground,
    landscape_to_json,
    q_poly,
    q_value_at_rho,
    restrict_landscape,
    restrict_problem,
    stable_radius,
    used_of,
    validate_landscape,
    varcount,
)
from .mta_runner import (
    DEFAULT_MAX_STEPS,
    RunState,
    RunTrace,
    h_infinity,
    initial_colouring,
    run,
    step,
    trace_round_csv,
    trace_to_json,
)
from .partitioner import (
    SparsePartition,
    is_pi_unique,
    is_r_sparse,
    singleton_partition,
    sparse_partition,
)
from .rule_engine import (
    ColouringProblem,
    LocalRule,
    MalformedProblemError,
    bad_set,
    check_condition,
    condition_report,
    is_violated,
    lll_margin,
    res,
    satisfies,
)
from .tape import (
    ConsumptionReport,
    FiniteTape,
    RandomTape,
    TapeDepleted,
    mix64,
    symbols_consumed,
    used_unused,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DEFAULT_MAX_STEPS",
    "DEFAULT_TAPE_CAP",
    "ColouringProblem",
    "ConsumptionReport",
    "DerandBudget",
    "Digraph",
    "ExhaustedError",
    "ExperimentRecord",
    "FinalisedLandscape",
    "FiniteTape",
    "GForest",
    "GroundingError",
    "InfeasibleError",
    "Landscape",
    "LocalRule",
    "MalformedProblemError",
    "PassState",
    "RandomTape",
    "RunState",
    "RunTrace",
    "SparsePartition",
    "TapeAttempt",
    "TapeDepleted",
    "VertexOrder",
    "append_results",
    "bad_set",
    "ball",
    "build_landscape",
    "build_rel",
    "check_condition",
    "check_subexp",
    "condition_report",
    "count_delta_trees",
    "decode_tape",
    "derand_solve",
    "enumerate_grounded_forests",
    "explicit_k",
    "explicit_k_log",
    "gen_grid_ksat",
    "gen_torus_nae",
    "greedy_mis",
    "ground",
    "h_infinity",
    "initial_colouring",
    "internal_pass",
    "is_pi_unique",
    "is_r_sparse",
    "is_violated",
    "landscape_to_json",
    "lll_margin",
    "load_dimacs",
    "load_problem",
    "mix64",
    "power_graph",
    "q_poly",
    "q_value_at_rho",
    "read_results",
    "res",
    "restrict_landscape",
    "restrict_problem",
    "run",
    "run_finite_tape",
    "satisfies",
    "save_problem",
    "scan_order",
    "singleton_partition",
    "sparse_partition",
    "stable_radius",
    "start_state",
    "step",
    "symbols_consumed",
    "theoretical_budget",
    "threshold_m",
    "trace_round_csv",
    "trace_to_json",
    "used_of",
    "used_unused",
    "validate_landscape",
    "varcount",
    "work_counter",
]
