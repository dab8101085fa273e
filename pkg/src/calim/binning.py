"""Confidence binning and per-bin reliability statistics.

Bin ``m`` (0-based here) covers ``[edges[m], edges[m+1])``; the last bin is
closed on the right so that a confidence of exactly 1 is counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from calim.data_model import PredictionSet, top_label
from calim.errors import ClassOutOfRange, InvalidBinCount, OutOfRange

EQUAL_WIDTH = "equal-width"
EQUAL_FREQUENCY = "equal-frequency"
SCHEMES = (EQUAL_WIDTH, EQUAL_FREQUENCY)


@dataclass(frozen=True, eq=False)
class BinEdges:
    edges: np.ndarray
    scheme: str = EQUAL_WIDTH

    @property
    def M(self) -> int:
        return len(self.edges) - 1

    @property
    def lower(self) -> np.ndarray:
        return self.edges[:-1]

    @property
    def upper(self) -> np.ndarray:
        return self.edges[1:]

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def assign(self, p: np.ndarray) -> np.ndarray:
        """Vectorized bin lookup; no range check."""
        idx = np.searchsorted(self.edges, p, side="right") - 1
        return np.clip(idx, 0, self.M - 1)


def _check_M(M) -> int:
    if isinstance(M, bool) or int(M) != M or M < 1:
        raise InvalidBinCount(f"bin count must be a positive integer, got {M!r}")
    return int(M)


def equal_width_edges(M: int) -> BinEdges:
    M = _check_M(M)
    edges = np.arange(M + 1, dtype=float) / M
    return BinEdges(edges=edges, scheme=EQUAL_WIDTH)


def equal_frequency_edges(confidences, M: int) -> BinEdges:
    """Edges that put (roughly) the same number of samples in every bin.

    The cut after the ``c = round(i * n / M)`` smallest confidences is placed
    halfway between the ``c``-th and ``(c+1)``-th order statistics. A cut
    that falls between two equal values cannot separate anything and is
    dropped, so the returned ``M`` may be smaller than requested.
    """
    M = _check_M(M)
    s = np.sort(np.asarray(confidences, dtype=float).ravel())
    n = s.size
    if n < 1:
        raise InvalidBinCount("equal-frequency binning needs at least one sample")
    cuts = []
    for i in range(1, M):
        c = int(round(i * n / M))
        if c < 1 or c > n - 1:
            continue
        lo, hi = s[c - 1], s[c]
        if lo == hi:
            continue
        cut = 0.5 * (lo + hi)
        if 0.0 < cut < 1.0 and (not cuts or cut > cuts[-1]):
            cuts.append(cut)
    edges = np.array([0.0, *cuts, 1.0])
    return BinEdges(edges=edges, scheme=EQUAL_FREQUENCY)


def make_edges(confidences, M: int, scheme: str = EQUAL_WIDTH) -> BinEdges:
    if scheme == EQUAL_WIDTH:
        return equal_width_edges(M)
    if scheme == EQUAL_FREQUENCY:
        return equal_frequency_edges(confidences, M)
    raise ValueError(f"unknown binning scheme {scheme!r}; expected one of {SCHEMES}")


def assign_bin(p: float, edges: BinEdges) -> int:
    """Return the 0-based index of the bin containing ``p``."""
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"confidence {p!r} outside [0, 1]")
    return int(edges.assign(np.asarray(p)))


@dataclass(frozen=True, eq=False)
class ReliabilityTable:
    """Per-bin counts, accuracies and mean confidences.

    ``accuracy`` and ``confidence`` hold NaN for empty bins.
    """

    edges: BinEdges
    counts: np.ndarray
    accuracy: np.ndarray
    confidence: np.ndarray
    n: int
    mode: str = "top-label"
    cls: Optional[int] = None

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def nonempty(self) -> np.ndarray:
        return self.counts > 0

    @property
    def gaps(self) -> np.ndarray:
        """|accuracy - confidence| per bin, NaN where empty."""
        return np.abs(self.accuracy - self.confidence)


def _table(conf, hits, edges: BinEdges, mode: str, cls=None) -> ReliabilityTable:
    idx = edges.assign(conf)
    counts = np.bincount(idx, minlength=edges.M)
    hit_sum = np.bincount(idx, weights=hits, minlength=edges.M)
    conf_sum = np.bincount(idx, weights=conf, minlength=edges.M)
    with np.errstate(invalid="ignore", divide="ignore"):
        acc = np.where(counts > 0, hit_sum / counts, np.nan)
        mean_conf = np.where(counts > 0, conf_sum / counts, np.nan)
    return ReliabilityTable(
        edges=edges,
        counts=counts,
        accuracy=acc,
        confidence=mean_conf,
        n=int(conf.size),
        mode=mode,
        cls=cls,
    )


def reliability_table(ps: PredictionSet, edges: BinEdges) -> ReliabilityTable:
    view = top_label(ps)
    hits = (view.pred == ps.labels).astype(float)
    return _table(view.conf, hits, edges, "top-label")


def classwise_reliability_table(ps: PredictionSet, edges: BinEdges, j: int) -> ReliabilityTable:
    """One-vs-rest table for class ``j`` (0-based): all samples binned by ``a_ij``."""
    if not 0 <= j < ps.K:
        raise ClassOutOfRange(f"class {j} not in [0, {ps.K})")
    conf = ps.probs[:, j]
    hits = (ps.labels == j).astype(float)
    return _table(conf, hits, edges, "classwise", cls=int(j))
