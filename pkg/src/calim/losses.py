"""Training-time calibration losses and the information quantities behind them.

These work on single probability vectors and use natural logarithms.
"""

from __future__ import annotations

import numpy as np

from calim.errors import AlphaOutOfRange, LengthMismatch, NegativeGamma

LOG_EPS = 1e-12


def _pair(y, a):
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    if y.shape != a.shape:
        raise LengthMismatch(f"length {y.shape} vs {a.shape}")
    return y, a


def _log(a):
    return np.log(np.maximum(a, LOG_EPS))


def cross_entropy(y, a) -> float:
    y, a = _pair(y, a)
    return float(-np.sum(y * _log(a)))


def entropy(a) -> float:
    a = np.asarray(a, dtype=float)
    nz = a > 0
    return float(-np.sum(a[nz] * np.log(a[nz])))


def kl_divergence(y, a) -> float:
    """KL(y || a), with 0 log 0 = 0 and ``a`` clamped like in cross_entropy."""
    y, a = _pair(y, a)
    nz = y > 0
    return float(np.sum(y[nz] * (np.log(y[nz]) - _log(a[nz]))))


def smooth_labels(y, alpha: float, K: int | None = None) -> np.ndarray:
    """Mix a one-hot target with the uniform distribution: (1 - alpha) y + alpha / K."""
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha={alpha!r} not in [0, 1]")
    y = np.asarray(y, dtype=float)
    K = y.size if K is None else K
    if y.size != K:
        raise LengthMismatch(f"target has {y.size} entries, K={K}")
    return (1.0 - alpha) * y + alpha / K


def focal_loss(a, j: int, gamma: float) -> float:
    """-(1 - a_j)^gamma * log a_j for an object of class ``j``."""
    if gamma < 0:
        raise NegativeGamma(f"gamma={gamma!r} must be >= 0")
    aj = float(np.asarray(a, dtype=float)[j])
    return float(-((1.0 - aj) ** gamma) * _log(aj))
