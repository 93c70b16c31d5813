"""Correlation-network clustering and portfolio simulation."""

from ._core import (
    InputError,
    NumericalError,
    average_linkage,
    f_upper_tail,
    fit_split_weights,
    hct_clusters,
    levene_test,
    minimum_spanning_tree,
    mst_clusters,
    neighbornet_ordering,
    nn_clusters,
    pearson_correlation,
    period_returns,
    sharpe_ratio,
    simulate,
    ultrametric_distance,
)

__all__ = [
    "InputError",
    "NumericalError",
    "average_linkage",
    "f_upper_tail",
    "fit_split_weights",
    "hct_clusters",
    "levene_test",
    "minimum_spanning_tree",
    "mst_clusters",
    "neighbornet_ordering",
    "nn_clusters",
    "pearson_correlation",
    "period_returns",
    "sharpe_ratio",
    "simulate",
    "ultrametric_distance",
]
