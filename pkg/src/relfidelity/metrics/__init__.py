from .bootstrap import BootstrapError, BootstrapSpec, bootstrap_separability
from .distance import (
    CATEGORICAL_KINDS,
    SUPPORT,
    categorical_distance,
    discretize,
    mmd,
    pcd,
    pcd_details,
    wasserstein1,
)
from .results import MetricResult
from .statistical import cardinality_shape_similarity, chi2_two_sample, kolmogorov_sf, ks_two_sample

__all__ = [
    "CATEGORICAL_KINDS",
    "SUPPORT",
    "BootstrapError",
    "BootstrapSpec",
    "MetricResult",
    "bootstrap_separability",
    "cardinality_shape_similarity",
    "categorical_distance",
    "chi2_two_sample",
    "discretize",
    "kolmogorov_sf",
    "ks_two_sample",
    "mmd",
    "pcd",
    "pcd_details",
    "wasserstein1",
]
