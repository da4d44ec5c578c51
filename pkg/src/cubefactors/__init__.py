"""Randomised 1-factorisations of the hypercube and tools for checking them."""

from .code import (
    CodeContext,
    adjacent_codeword,
    build_context,
    code_size,
    codewords_in_ball,
    codewords_near,
    enumerate_code,
    in_code,
    phi,
)
from .construct import (
    ConstructionParams,
    Factorisation,
    OverlapError,
    RandomTape,
    SwapPlan,
    apply_explicit,
    build_explicit,
    directional,
    implicit_factorisation,
    load_factorisation,
    plan_summary,
    random_greedy_factorisation,
    sample_plan,
    save_factorisation,
    touched_edge_count,
)
from .cube import (
    CubeSpace,
    Edge,
    ball,
    basis_vertex,
    edge_at,
    explicit_cap,
    flip,
    hamming_distance,
    make_space,
    parse_vertex,
    small_cube_id,
    vertex_text,
)
from .analyze import (
    ComponentReport,
    SubsetSpec,
    TfContext,
    TfLabel,
    ValidationReport,
    bfs_components,
    code_intersection,
    code_intersections,
    connectivity_profile,
    decomposition_of,
    is_connected,
    min_connecting_prefix,
    psi_criterion,
    r_of,
    r_scan,
    small_cube_connectivity,
    tf_class_sizes,
    tf_connectivity,
    tf_context,
    tf_label,
    union_components,
    untouched_parallel_paths,
    untouched_path_histogram,
    validate,
)

__version__ = "0.1.0"
