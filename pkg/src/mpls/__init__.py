"""Weighted matroid parity by sliding local search.

Solver, exact baselines, and verifiable structural diagnostics for
weighted matroid k-parity and weighted k-matroid intersection.
"""

from .exact import (
    BRANCH_AND_BOUND,
    SUBSET_ENUM,
    ExactResult,
    SizeLimitExceeded,
    TraceMismatch,
    brute_force_intersection,
    brute_force_optimum,
    verify_local_optimum,
    verify_tail_bound,
)
from .exchange import (
    ConflictTrace,
    ExchangeCertificate,
    K4Witness,
    build_conflict_trace,
    estimate_near_marker_probability,
    find_rota_exchange,
    k4_non_composability_witness,
    near_marker_bound,
    refine_laminar,
    verify_conflict_trace,
    verify_k4_witness,
)
from .generators import (
    FAMILIES,
    GeneratorError,
    build_doc,
    generate,
)
from .instance import (
    InstanceError,
    ParityInstance,
    RawParityInstance,
    Solution,
    from_matroid_intersection,
    make_disjoint,
    vertex_costs,
)
from .matroids import (
    FreeMatroid,
    GraphicMatroid,
    GroundSetError,
    LinearMatroid,
    MatroidAxiomError,
    MatroidOracle,
    PartitionMatroid,
    UniformMatroid,
    check_matroid_axioms,
    contract,
    disjoint_union,
    relabel,
    restrict,
    with_coloops,
)
from .serialization import (
    FormatError,
    InstanceDoc,
    ResultRecord,
    format_fraction,
    instance_signature,
    load_instance,
    load_instance_doc,
    parse_fraction,
    save_instance,
)
from .solver import (
    BEST_GAIN,
    FIRST_LEX,
    DegenerateInstanceError,
    IntervalScheme,
    SolverTrace,
    SwapMove,
    best_of_runs,
    compute_markers,
    find_improving_swap,
    greedy,
    interval_local_search,
    scale_weights,
    sliding_local_search,
    trace_from_json_obj,
    trace_to_json_obj,
)

__version__ = "0.1.0"
