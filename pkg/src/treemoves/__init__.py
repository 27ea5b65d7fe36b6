"""Leaf-labelled binary trees, rearrangement moves and agreement forests."""

from .tree import (
    BinaryTree,
    CanonicalForm,
    NewickError,
    TreeError,
    canonicalize,
    caterpillar,
    count_trees,
    enumerate_trees,
    is_isomorphic,
    parse_newick,
    random_tree,
    restrict,
    to_newick,
)
from .moves import (
    MoveError,
    MoveRecord,
    Op,
    apply_move,
    apply_spr,
    apply_tbr,
    classify_move,
    enumerate_moves,
    invert_move,
    neighbors,
    tbr_as_two_sprs,
)
from .forest import (
    ForestCertificate,
    ForestError,
    LabelPartition,
    SearchTooLarge,
    forest_to_moves,
    min_forest_bruteforce,
    moves_to_forest,
    validate_forest,
)
from .constructions import (
    ConstructionError,
    LowerBoundCertificate,
    PermutationFamily,
    SubtreeDecomposition,
    adversarial_labeling,
    caterpillar_pair,
    cut_edge,
    decompose,
    deletion_lower_bound,
    ordering_family,
    super_pair_forest,
    token_forest,
)
from .search import (
    DistanceResult,
    SearchLimitError,
    distance_matrix,
    eccentricity_table,
    exact_distance,
    expectation_experiment,
    scaling_experiment,
)

__version__ = "0.1.0"
