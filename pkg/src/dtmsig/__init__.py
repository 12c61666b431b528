"""Distance-to-Measure signatures, their kernel density estimates, and shape discrimination."""

__version__ = "0.1.0"

from .analysis import (
    Dendrogram,
    DistanceMatrix,
    LabeledDensities,
    average_linkage,
    cut_dendrogram,
    holdout_experiment,
    knn_classify,
    pairwise_l1,
)
from .dtm import (
    DtmSignature,
    QuadraticDtm,
    analytic_density,
    analytic_dtm,
    dtm_signature,
    empirical_dtm_at,
    quadratic_dtm_from_cloud,
)
from .geometry import NeighborIndex, PointCloud, build_index, knn_query, load_cloud, sorted_sq_distances
from .kde import (
    BIWEIGHT,
    GAUSSIAN,
    Bandwidth,
    DensityEstimate,
    Kernel,
    bandwidth_select,
    kde_at,
    kde_estimate,
    kernel_eval,
    kernel_l2,
    l1_distance,
)
from .synth import (
    AnalyticSpace,
    ChromatinParams,
    RngSeed,
    add_gaussian_noise,
    sample_shape,
    sample_space,
    simulate_chromatin,
)
from .validate import CltExperiment, CltResult, ks_statistic, run_clt_experiment, two_sample_ks


__all__ = [
    "add_gaussian_noise",
    "analytic_density",
    "analytic_dtm",
    "AnalyticSpace",
    "average_linkage",
    "Bandwidth",
    "bandwidth_select",
    "BIWEIGHT",
    "build_index",
    "ChromatinParams",
    "CltExperiment",
    "CltResult",
    "cut_dendrogram",
    "Dendrogram",
    "DensityEstimate",
    "DistanceMatrix",
    "dtm_signature",
    "DtmSignature",
    "empirical_dtm_at",
    "GAUSSIAN",
    "holdout_experiment",
    "kde_at",
    "kde_estimate",
    "Kernel",
    "kernel_eval",
    "kernel_l2",
    "knn_classify",
    "knn_query",
    "ks_statistic",
    "l1_distance",
    "LabeledDensities",
    "load_cloud",
    "NeighborIndex",
    "pairwise_l1",
    "PointCloud",
    "quadratic_dtm_from_cloud",
    "QuadraticDtm",
    "RngSeed",
    "run_clt_experiment",
    "sample_shape",
    "sample_space",
    "simulate_chromatin",
    "sorted_sq_distances",
    "two_sample_ks",
]
