"""Anonymous decompositions of batched graphs."""

from anonbandits.decomp.decomposers import (
    ClusterTooSmall,
    alpha_factor,
    arm_blocks,
    block_weights,
    greedy_decompose,
    lp_decompose,
    random_decompose,
    size_bound,
)
from anonbandits.decomp.graph import (
    BatchedGraph,
    Decomposition,
    Shortfall,
    ValidityReport,
    informative_counts,
    validate_decomposition,
)
from anonbandits.decomp.polytope import (
    ABSTAIN,
    NotInPolytope,
    PolytopePoint,
    caratheodory_decompose,
    check_membership,
    is_integral_vertex,
    reconstruct,
)

__all__ = [
    "ABSTAIN",
    "BatchedGraph",
    "ClusterTooSmall",
    "Decomposition",
    "NotInPolytope",
    "PolytopePoint",
    "Shortfall",
    "ValidityReport",
    "alpha_factor",
    "arm_blocks",
    "block_weights",
    "caratheodory_decompose",
    "check_membership",
    "greedy_decompose",
    "informative_counts",
    "is_integral_vertex",
    "lp_decompose",
    "random_decompose",
    "reconstruct",
    "size_bound",
    "validate_decomposition",
]
