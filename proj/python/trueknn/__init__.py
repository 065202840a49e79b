"""Exact multi-round k-nearest-neighbor search over a sphere BVH."""

from ._trueknn import (
    Bvh,
    DataError,
    DegenerateDataset,
    Error,
    InvalidArgument,
    InvalidInput,
    KnnResult,
    MaxRoundsExceeded,
    PointSet,
    TraversalCounters,
    baseline_fixed_radius,
    exact_knn,
    gen_clustered,
    gen_uniform,
    load_csv,
    matches_oracle,
    max_knn_distance,
    percentile_knn_distance,
    sample_start_radius,
    true_knn,
    true_knn_bounded,
)

__all__ = [
    "Bvh",
    "DataError",
    "DegenerateDataset",
    "Error",
    "InvalidArgument",
    "InvalidInput",
    "KnnResult",
    "MaxRoundsExceeded",
    "PointSet",
    "TraversalCounters",
    "baseline_fixed_radius",
    "exact_knn",
    "gen_clustered",
    "gen_uniform",
    "load_csv",
    "matches_oracle",
    "max_knn_distance",
    "percentile_knn_distance",
    "sample_start_radius",
    "true_knn",
    "true_knn_bounded",
]
