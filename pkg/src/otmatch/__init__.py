"""Graph matching and QAP solving via Frank-Wolfe with LAP or OT step directions."""

from .core import (
    DS_TOL,
    as_doubly_stochastic,
    as_permutation,
    as_square_matrix,
    barycenter,
    compose_permutations,
    edge_disagreements,
    invert_permutation,
    match_ratio,
    pass_to_ranks,
    permutation_matrix,
    permute_matrix,
    qap_objective,
)
from .lap import LapSolution, lap_tie_set, solve_lap
from .matcher import (
    MatchOptions,
    MatchResult,
    SeedSet,
    exact_line_search,
    frank_wolfe_match,
    gradient,
    random_doubly_stochastic,
    randomized_blend_init,
    seeded_match,
)
from .qaplib import (
    QapInstance,
    bundled_instance_names,
    format_qaplib_dat,
    load_bundled_instance,
    load_instance,
    parse_qaplib_dat,
    parse_qaplib_sln,
    relative_accuracy,
)
from .samplers import SbmSpec, sample_er_pair, sample_sbm_pair, shuffle_pair
from .sinkhorn import SinkhornParams, SinkhornResult, lot, sinkhorn_knopp

__version__ = "0.1.0"

__all__ = [
    "DS_TOL",
    "LapSolution",
    "MatchOptions",
    "MatchResult",
    "QapInstance",
    "SbmSpec",
    "SeedSet",
    "SinkhornParams",
    "SinkhornResult",
    "as_doubly_stochastic",
    "as_permutation",
    "as_square_matrix",
    "barycenter",
    "bundled_instance_names",
    "compose_permutations",
    "edge_disagreements",
    "exact_line_search",
    "format_qaplib_dat",
    "frank_wolfe_match",
    "gradient",
    "invert_permutation",
    "lap_tie_set",
    "load_bundled_instance",
    "load_instance",
    "lot",
    "match_ratio",
    "pass_to_ranks",
    "parse_qaplib_dat",
    "parse_qaplib_sln",
    "permutation_matrix",
    "permute_matrix",
    "qap_objective",
    "random_doubly_stochastic",
    "randomized_blend_init",
    "relative_accuracy",
    "sample_er_pair",
    "sample_sbm_pair",
    "seeded_match",
    "shuffle_pair",
    "sinkhorn_knopp",
    "solve_lap",
]
