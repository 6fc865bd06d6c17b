"""Feature screening from averaged VIP ranks."""

from .clustering import TwoClusters, ahc_two_cluster, gmm_two_cluster, kmeans_two_cluster
from .pan import SelectionResult, chain_seeds, run_pan, select_from_vips
from .ranks import RankReport, rank_distribution_check, rank_matrix, rank_vips

__all__ = [
    "RankReport",
    "SelectionResult",
    "TwoClusters",
    "ahc_two_cluster",
    "chain_seeds",
    "gmm_two_cluster",
    "kmeans_two_cluster",
    "rank_distribution_check",
    "rank_matrix",
    "rank_vips",
    "run_pan",
    "select_from_vips",
]
