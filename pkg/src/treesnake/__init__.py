"""Monte Carlo toolkit for critical random trees and tree-indexed walks.

Samplers for uniform plane trees, radius-truncated balls of the critical
tree conditioned to survive, and lattice snakes over them, plus an
estimation engine whose experiments are reproducible bit for bit from
(master seed, configuration) regardless of worker count.
"""

__version__ = "0.1.0"

from .errors import BudgetExceededError, InvariantViolation, UsageError
from .offspring import (
    OffspringLaw,
    finite_support,
    geometric_half,
    law_by_name,
    poisson_one,
    sample_offspring,
    sample_size_biased,
)
from .planetree import (
    PlaneTree,
    enumerate_plane_trees,
    marked_graph_key,
    reroot_one_step,
    rerooted_with_first_child,
    sample_uniform_plane_tree,
)
from .kesten import (
    AugmentedTree,
    KestenBall,
    ball_size,
    boundary_size,
    root_degree_weight,
    sample_augmented,
    sample_gw_truncated,
    sample_kesten_ball,
    sample_volume_stats,
)
from .rng import RngStream, derive_stream
from .snake import (
    SnakeEmbedding,
    assign_and_embed,
    boundary_hit_zero,
    max_displacement,
    prefix_excluded_scope,
    range_size,
    return_count,
    two_snake_intersection,
)

__all__ = [
    "BudgetExceededError",
    "InvariantViolation",
    "UsageError",
    "OffspringLaw",
    "finite_support",
    "geometric_half",
    "law_by_name",
    "poisson_one",
    "sample_offspring",
    "sample_size_biased",
    "PlaneTree",
    "enumerate_plane_trees",
    "marked_graph_key",
    "reroot_one_step",
    "rerooted_with_first_child",
    "sample_uniform_plane_tree",
    "AugmentedTree",
    "KestenBall",
    "ball_size",
    "boundary_size",
    "root_degree_weight",
    "sample_augmented",
    "sample_gw_truncated",
    "sample_kesten_ball",
    "sample_volume_stats",
    "RngStream",
    "derive_stream",
    "SnakeEmbedding",
    "assign_and_embed",
    "boundary_hit_zero",
    "max_displacement",
    "prefix_excluded_scope",
    "range_size",
    "return_count",
    "two_snake_intersection",
]
