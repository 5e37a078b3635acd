"""Classical simulation of quantum-walk tree size estimation and its uses.

The package builds edge-space walk operators for layered graphs, simulates
phase estimation on them at the level of outcome distributions, and uses the
result for edge-count estimation, backtracking search and AND-OR formula
evaluation on trees that are only known through local queries.
"""

from .errors import DomainError, NumericError, ParameterError, PropertyViolation, QwalkError
from .graph_model import (
    ExplorableHandle,
    GraphFile,
    LayeredDag,
    PathSpec,
    QueryLedger,
    binarize,
    complete_binary_tree,
    dfs_order,
    even_odd_partition,
    path_graph,
    random_formula,
    random_layered_dag,
    random_tree,
    single_vertex,
)
from .walk_operators import build_gram, build_reflections, path_restricted_reflections
from .phase_estimation import MinPhaseConfig, QpeConfig, Spectrum, estimate_min_phase, estimate_phase_once
from .size_estimator import SizeEstimate, delta_correct, estimate_dag_size, estimate_tree_vertices
from .backtracking import MarkPredicate, detect_marked, generate_path, search
from .andor_eval import KnownEvaluatorModel, heavy_subtree, is_heavy_subtree, unknown_evaluate

__version__ = "0.1.0"

__all__ = [
    "QwalkError",
    "DomainError",
    "ParameterError",
    "NumericError",
    "PropertyViolation",
    "LayeredDag",
    "ExplorableHandle",
    "GraphFile",
    "PathSpec",
    "QueryLedger",
    "binarize",
    "complete_binary_tree",
    "dfs_order",
    "even_odd_partition",
    "path_graph",
    "random_formula",
    "random_layered_dag",
    "random_tree",
    "single_vertex",
    "build_gram",
    "build_reflections",
    "path_restricted_reflections",
    "Spectrum",
    "QpeConfig",
    "MinPhaseConfig",
    "estimate_phase_once",
    "estimate_min_phase",
    "SizeEstimate",
    "estimate_dag_size",
    "estimate_tree_vertices",
    "delta_correct",
    "MarkPredicate",
    "detect_marked",
    "generate_path",
    "search",
    "KnownEvaluatorModel",
    "heavy_subtree",
    "is_heavy_subtree",
    "unknown_evaluate",
    "__version__",
]
