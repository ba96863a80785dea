"""Topological features and minimal-pair scoring for Transformer attention maps."""

from ._core import (
    h0_barcode,
    h0_mean,
    h0_sum,
    h1_barcode,
    head_features,
    mcc,
    read_container,
    rtd,
    run_cli,
    symmetrize_distance,
    write_container,
)

__all__ = [
    "h0_barcode",
    "h0_mean",
    "h0_sum",
    "h1_barcode",
    "head_features",
    "mcc",
    "read_container",
    "rtd",
    "run_cli",
    "symmetrize_distance",
    "write_container",
]
