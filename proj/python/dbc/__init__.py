"""Dispersion-based agglomerative clustering.

Thin wrapper over the C++ core: pairwise distances, the dispersion merge
criterion with its incremental proximity updates, the alternating
train/cluster loop, and retrieval metrics.
"""

from dbc._core import (
    ConfigError,
    DataError,
    alternate,
    cluster,
    generate_synthetic,
    normalize_rows,
    pairwise_distances,
    partition_scores,
    retrieval_metrics,
)

__all__ = [
    "ConfigError",
    "DataError",
    "alternate",
    "cluster",
    "generate_synthetic",
    "normalize_rows",
    "pairwise_distances",
    "partition_scores",
    "retrieval_metrics",
]
