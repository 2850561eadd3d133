"""scaletree: generative clustering on distance matrices via latent graphs.

Clusters are modeled as hidden neighbor graphs whose edge lengths follow
per-class scale distributions against an explicit background noise model;
MAP inference reduces to per-class minimum spanning trees.  A spectral
baseline, brute-force oracles, synthetic benchmarks and a CLI round out the
toolkit.
"""

from .affinity import AffinityMatrix, PointSet, distance_matrix, kernel_affinity, normalize
from .bench import GeneratorSpec, MetricReport, adjusted_rand, best_perm_accuracy, generate
from .graph import Edge, EdgeSet, is_connected, minimum_spanning_tree, split_heaviest
from .latent_graph import (
    FitConfig,
    FitResult,
    LikelihoodModel,
    NeighborGraph,
    PriorKind,
    calibrate_background,
    clamp_labels,
    edge_weight,
    fit,
    log_joint,
    log_lik_entry,
    map_graph_given_labels,
    update_params,
)
from .spectral import kmeans, latent_feature_map, row_normalize, spectral_cluster, top_eigen

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix", "PointSet", "distance_matrix", "kernel_affinity", "normalize",
    "Edge", "EdgeSet", "is_connected", "minimum_spanning_tree", "split_heaviest",
    "FitConfig", "FitResult", "LikelihoodModel", "NeighborGraph", "PriorKind",
    "calibrate_background", "clamp_labels", "edge_weight", "fit", "log_joint",
    "log_lik_entry", "map_graph_given_labels", "update_params",
    "kmeans", "latent_feature_map", "row_normalize", "spectral_cluster", "top_eigen",
    "GeneratorSpec", "MetricReport", "adjusted_rand", "best_perm_accuracy", "generate",
    "__version__",
]
