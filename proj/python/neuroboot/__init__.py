"""Weighted bootstrap sub-averaging for ERP decoding (C++ core)."""

from ._core import (
    EpochSet,
    Error,
    augment,
    cluster_permutation,
    decode_window,
    draw_counts,
    fdr_bh,
    generate_subject,
    paired_t,
    preprocess,
    quality,
    run_experiment,
    standard_config,
    sub_average,
    topic_weights,
    weight_vector,
)

__all__ = [
    "EpochSet",
    "Error",
    "augment",
    "cluster_permutation",
    "decode_window",
    "draw_counts",
    "fdr_bh",
    "generate_subject",
    "paired_t",
    "preprocess",
    "quality",
    "run_experiment",
    "standard_config",
    "sub_average",
    "topic_weights",
    "weight_vector",
]
