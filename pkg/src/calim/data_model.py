"""Core value types: prediction sets, top-label views and metric reports.

Labels are 0-based everywhere in the Python API. The CSV layer converts
from and to the 1-based labels used in prediction files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from calim.errors import (
    DimensionMismatch,
    InconsistentInput,
    LabelOutOfRange,
    NonFinite,
    NotNormalized,
    TooFewClasses,
)

PROB_ATOL = 1e-6
SOFTMAX_ATOL = 1e-9


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable under large logits."""
    z = np.asarray(z, dtype=float)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=a.dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Classifier outputs on ``n`` objects with ``K`` classes.

    Build instances through :func:`validate`; the constructor does not check
    invariants.

    Attributes
    ----------
    probs : ndarray, shape (n, K)
        Confidence vectors, each row a probability distribution.
    labels : ndarray of int, shape (n,)
        True classes, 0-based.
    logits : ndarray, shape (n, K), optional
        Pre-softmax scores, when available.
    """

    probs: np.ndarray
    labels: np.ndarray
    logits: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def K(self) -> int:
        return self.probs.shape[1]

    @property
    def onehot(self) -> np.ndarray:
        out = np.zeros_like(self.probs)
        out[np.arange(self.n), self.labels] = 1.0
        return out


@dataclass(frozen=True, eq=False)
class TopLabelView:
    pred: np.ndarray
    conf: np.ndarray


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    ece: float
    mce: float
    cwece: float
    nll: float
    brier: float
    n_bins: int
    scheme: str

    METRICS = ("accuracy", "ece", "mce", "cwece", "nll", "brier")

    def as_dict(self) -> dict:
        out = {name: getattr(self, name) for name in self.METRICS}
        out["bins"] = self.n_bins
        out["scheme"] = self.scheme
        return out


def _as_matrix(raw, name: str) -> np.ndarray:
    if isinstance(raw, np.ndarray):
        arr = raw.astype(float, copy=False)
    else:
        rows = list(raw)
        if rows and len({len(r) for r in rows}) > 1:
            raise DimensionMismatch(f"{name} has ragged rows")
        arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-d matrix, got {arr.ndim}-d")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains non-finite entries")
    return arr


def validate(logits=None, probs=None, labels=None) -> PredictionSet:
    """Check raw arrays and build a :class:`PredictionSet`.

    Parameters
    ----------
    logits, probs : array_like, shape (n, K), optional
        At least one must be given. When only logits are given the
        probabilities are their softmax. When both are given they must agree.
    labels : array_like of int, shape (n,)
        0-based class indices.

    Raises
    ------
    DimensionMismatch, LabelOutOfRange, NonFinite, NotNormalized, TooFewClasses
    """
    if logits is None and probs is None:
        raise DimensionMismatch("need logits or probabilities")
    if labels is None:
        raise DimensionMismatch("labels are required")

    z = _as_matrix(logits, "logits") if logits is not None else None
    p = _as_matrix(probs, "probs") if probs is not None else None
    ref = z if z is not None else p
    n, K = ref.shape
    if p is not None and z is not None and p.shape != z.shape:
        raise DimensionMismatch(f"logits shape {z.shape} != probs shape {p.shape}")
    if K < 2:
        raise TooFewClasses(f"need at least 2 classes, got {K}")
    if n < 1:
        raise DimensionMismatch("need at least one sample")

    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != n:
        raise DimensionMismatch(f"{y.size} labels for {n} rows")
    if not np.all(np.isfinite(y.astype(float))):
        raise NonFinite("labels contain non-finite entries")
    if np.any(y != np.round(y)):
        raise LabelOutOfRange("labels must be integers")
    y = y.astype(np.int64)
    bad = np.flatnonzero((y < 0) | (y >= K))
    if bad.size:
        raise LabelOutOfRange(f"row {bad[0]}: label {y[bad[0]]} not in [0, {K})")

    if p is not None:
        if np.any(p < 0) or np.any(p > 1):
            i = int(np.flatnonzero(((p < 0) | (p > 1)).any(axis=1))[0])
            raise NotNormalized(f"row {i}: probability outside [0, 1]")
        sums = p.sum(axis=1)
        off = np.flatnonzero(np.abs(sums - 1.0) > PROB_ATOL)
        if off.size:
            i = int(off[0])
            raise NotNormalized(f"row {i}: probabilities sum to {sums[i]!r}")
        p = p / sums[:, None]
        if z is not None and np.max(np.abs(softmax(z) - p)) > PROB_ATOL:
            raise InconsistentInput("probabilities do not match softmax(logits)")
    if z is not None:
        p = softmax(z)

    return PredictionSet(
        probs=_frozen(p),
        labels=_frozen(y),
        logits=_frozen(z) if z is not None else None,
    )


def top_label(ps: PredictionSet) -> TopLabelView:
    # np.argmax returns the first maximum, i.e. the lowest class index on ties.
    pred = np.argmax(ps.probs, axis=1)
    conf = ps.probs[np.arange(ps.n), pred]
    return TopLabelView(pred=pred, conf=conf)
