"""Scalar calibration and quality metrics.

All binned metrics are returned as fractions in [0, 1].
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from calim.binning import (
    EQUAL_WIDTH,
    BinEdges,
    ReliabilityTable,
    classwise_reliability_table,
    make_edges,
    reliability_table,
)
from calim.data_model import MetricsReport, PredictionSet, top_label
from calim.errors import AllBinsEmpty

DEFAULT_METRIC_BINS = 15
LOG_EPS = 1e-12


def accuracy(ps: PredictionSet) -> float:
    return float(np.mean(top_label(ps).pred == ps.labels))


def ece(table: ReliabilityTable) -> float:
    """Expected calibration error: bin-weighted mean of |A_m - C_m|."""
    mask = table.nonempty
    return float(np.sum(table.weights[mask] * table.gaps[mask]))


def mce(table: ReliabilityTable) -> float:
    """Maximum calibration error over non-empty bins."""
    mask = table.nonempty
    if not mask.any():
        raise AllBinsEmpty("no non-empty bins")
    return float(np.max(table.gaps[mask]))


def cwece(ps: PredictionSet, edges: Union[BinEdges, Sequence[BinEdges]]) -> float:
    """Classwise ECE, averaged over the ``K`` one-vs-rest tables.

    ``edges`` is either one partition shared by every class or a sequence
    with one partition per class.
    """
    per_class = [edges] * ps.K if isinstance(edges, BinEdges) else list(edges)
    if len(per_class) != ps.K:
        raise ValueError(f"got {len(per_class)} partitions for {ps.K} classes")
    total = sum(ece(classwise_reliability_table(ps, e, j)) for j, e in enumerate(per_class))
    return float(total / ps.K)


def nll(ps: PredictionSet) -> float:
    true_conf = ps.probs[np.arange(ps.n), ps.labels]
    return float(-np.mean(np.log(np.maximum(true_conf, LOG_EPS))))


def brier(ps: PredictionSet) -> float:
    return float(np.mean(np.sum((ps.probs - ps.onehot) ** 2, axis=1)))


def report(ps: PredictionSet, n_bins: int = DEFAULT_METRIC_BINS, scheme: str = EQUAL_WIDTH) -> MetricsReport:
    """Compute all six metrics under one binning configuration.

    With equal-frequency binning the top-label partition is built from the
    top-label confidences and each class gets its own partition built from
    that class's column.
    """
    conf = top_label(ps).conf
    edges = make_edges(conf, n_bins, scheme)
    table = reliability_table(ps, edges)
    if scheme == EQUAL_WIDTH:
        cw_edges = edges
    else:
        cw_edges = [make_edges(ps.probs[:, j], n_bins, scheme) for j in range(ps.K)]
    return MetricsReport(
        accuracy=accuracy(ps),
        ece=ece(table),
        mce=mce(table),
        cwece=cwece(ps, cw_edges),
        nll=nll(ps),
        brier=brier(ps),
        n_bins=int(n_bins),
        scheme=scheme,
    )
