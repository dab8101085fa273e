"""Post-hoc calibration maps: histogram binning, isotonic regression and the
linear-in-logit family (temperature, vector and matrix scaling).

Maps are fitted on a held-out calibration set and applied to new prediction
sets with :func:`apply_map`. Multiclass histogram binning and isotonic
regression are one-vs-rest: one binary map per class, then the calibrated
row is renormalized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np

from calim import metrics
from calim.binning import EQUAL_WIDTH, SCHEMES, BinEdges, make_edges
from calim.data_model import PredictionSet, softmax, validate
from calim.errors import (
    ClassCountMismatch,
    EmptyInput,
    MapFormatError,
    NonFinite,
    NonPositiveWeight,
)
from calim.optim import gradient_descent

DEFAULT_HISTOGRAM_BINS = 20
FORMAT_VERSION = 1
LOG_EPS = 1e-12
LOG_T_BOUND = math.log(100.0)

LINEAR_MODES = ("temperature", "vector", "vector-bias", "matrix-bias")
NONPARAMETRIC_METHODS = ("histogram", "isotonic")
METHODS = NONPARAMETRIC_METHODS + LINEAR_MODES


# ---------------------------------------------------------------------------
# Map types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HistogramMap:
    """Piecewise-constant map per class: ``theta[j][m]`` on bin ``m`` of ``edges[j]``."""

    edges: List[BinEdges]
    theta: List[np.ndarray]
    method: str = field(default="histogram", init=False)

    @property
    def K(self) -> int:
        return len(self.theta)

    def evaluate(self, j: int, p) -> np.ndarray:
        return self.theta[j][self.edges[j].assign(np.asarray(p, dtype=float))]


@dataclass(frozen=True, eq=False)
class IsotonicMap:
    """Nondecreasing step map per class.

    Class ``j`` takes value ``levels[j][m]`` on
    ``[breakpoints[j][m], breakpoints[j][m+1])``, last interval closed.
    """

    breakpoints: List[np.ndarray]
    levels: List[np.ndarray]
    method: str = field(default="isotonic", init=False)

    @property
    def K(self) -> int:
        return len(self.levels)

    def evaluate(self, j: int, p) -> np.ndarray:
        bp = self.breakpoints[j]
        idx = np.clip(np.searchsorted(bp, p, side="right") - 1, 0, len(bp) - 2)
        return self.levels[j][idx]


@dataclass(frozen=True, eq=False)
class LinearLogitMap:
    """``softmax(W z + b)``.

    For ``temperature`` mode ``W`` is the scalar ``1/T`` and ``T`` is stored
    separately; for the vector modes ``W`` holds the diagonal; for
    ``matrix-bias`` it is a full ``K x K`` matrix.
    """

    mode: str
    W: np.ndarray
    b: np.ndarray
    T: float | None = None

    @property
    def method(self) -> str:
        return self.mode

    @property
    def K(self) -> int:
        return self.b.shape[0]

    @property
    def temperature(self) -> float:
        if self.mode != "temperature":
            raise AttributeError(f"{self.mode} map has no temperature")
        return self.T

    def transform(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.mode == "temperature":
            return z / self.T
        if self.mode in ("vector", "vector-bias"):
            return z * self.W + self.b
        return z @ self.W.T + self.b


CalibrationMap = Union[HistogramMap, IsotonicMap, LinearLogitMap]


@dataclass
class FitReport:
    method: str
    initial_nll: float
    final_nll: float
    iterations: int = 0
    converged: bool = True
    grad_norm: float = 0.0
    params: dict = field(default_factory=dict)

    def summary(self) -> str:
        status = "converged" if self.converged else "NOT converged"
        parts = [
            f"method={self.method}",
            f"nll {self.initial_nll:.6f} -> {self.final_nll:.6f}",
            f"iterations={self.iterations}",
            status,
        ]
        parts += [f"{k}={v}" for k, v in self.params.items()]
        return ", ".join(parts)


# ---------------------------------------------------------------------------
# Pool-adjacent-violators
# ---------------------------------------------------------------------------


def pava(values, weights=None) -> np.ndarray:
    """Weighted least-squares isotonic (nondecreasing) fit.

    Parameters
    ----------
    values : array_like, shape (m,)
    weights : array_like, shape (m,), optional
        Strictly positive; unit weights when omitted.

    Returns
    -------
    ndarray, shape (m,)
        The minimizer of ``sum w_i (theta_i - v_i)^2`` over nondecreasing
        ``theta``. Pooled blocks take their weighted mean.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInput("pava needs at least one value")
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != v.shape:
        raise ValueError(f"{w.size} weights for {v.size} values")
    if np.any(~(w > 0)):
        raise NonPositiveWeight("pava weights must be > 0")

    # Stack of blocks: (weighted mean, total weight, length).
    means: list[float] = []
    wts: list[float] = []
    lens: list[int] = []
    for vi, wi in zip(v.tolist(), w.tolist()):
        means.append(vi)
        wts.append(wi)
        lens.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, l2 = means.pop(), wts.pop(), lens.pop()
            wsum = wts[-1] + w2
            means[-1] = (means[-1] * wts[-1] + m2 * w2) / wsum
            wts[-1] = wsum
            lens[-1] += l2
    return np.repeat(np.array(means), lens)


# ---------------------------------------------------------------------------
# Non-parametric fits
# ---------------------------------------------------------------------------


def fit_histogram_binning(
    calib: PredictionSet, n_bins: int = DEFAULT_HISTOGRAM_BINS, scheme: str = EQUAL_WIDTH
) -> HistogramMap:
    """One-vs-rest histogram binning.

    For each class the column ``a_ij`` is binned and every bin gets the
    fraction of its members whose label is ``j``. Empty bins fall back to the
    bin midpoint.
    """
    all_edges, all_theta = [], []
    for j in range(calib.K):
        conf = calib.probs[:, j]
        hits = (calib.labels == j).astype(float)
        edges = make_edges(conf, n_bins, scheme)
        idx = edges.assign(conf)
        counts = np.bincount(idx, minlength=edges.M)
        pos = np.bincount(idx, weights=hits, minlength=edges.M)
        with np.errstate(invalid="ignore", divide="ignore"):
            theta = np.where(counts > 0, pos / counts, edges.midpoints())
        all_edges.append(edges)
        all_theta.append(theta)
    return HistogramMap(edges=all_edges, theta=all_theta)


def _isotonic_1d(x: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    ux, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=t, minlength=ux.size)
    fitted = pava(sums / counts, counts)

    # Collapse runs of equal fitted levels into blocks.
    change = np.flatnonzero(np.diff(fitted) != 0) + 1
    starts = np.concatenate(([0], change))
    levels = fitted[starts]
    inner = 0.5 * (ux[change - 1] + ux[change])
    breakpoints = np.concatenate(([0.0], inner, [1.0]))
    return breakpoints, np.clip(levels, 0.0, 1.0)


def fit_isotonic(calib: PredictionSet) -> IsotonicMap:
    """One-vs-rest isotonic regression on the 0/1 class indicators.

    Samples sharing a confidence value are pooled before PAVA. Level changes
    are placed halfway between neighbouring distinct confidences and the map
    is constant outside the observed range.
    """
    bps, lvls = [], []
    for j in range(calib.K):
        bp, lv = _isotonic_1d(calib.probs[:, j], (calib.labels == j).astype(float))
        bps.append(bp)
        lvls.append(lv)
    return IsotonicMap(breakpoints=bps, levels=lvls)


def apply_nonparametric(cmap: Union[HistogramMap, IsotonicMap], ps: PredictionSet) -> PredictionSet:
    if cmap.K != ps.K:
        raise ClassCountMismatch(f"map has {cmap.K} classes, predictions have {ps.K}")
    q = np.column_stack([cmap.evaluate(j, ps.probs[:, j]) for j in range(ps.K)])
    sums = q.sum(axis=1, keepdims=True)
    degenerate = sums[:, 0] < 1e-12
    out = np.where(degenerate[:, None], 1.0 / ps.K, q / np.where(degenerate[:, None], 1.0, sums))
    return validate(probs=out, labels=ps.labels)


# ---------------------------------------------------------------------------
# Linear-in-logit family
# ---------------------------------------------------------------------------


def _check_mode(mode: str) -> None:
    if mode not in LINEAR_MODES:
        raise ValueError(f"unknown scaling mode {mode!r}; expected one of {LINEAR_MODES}")


def initial_params(mode: str, K: int) -> np.ndarray:
    _check_mode(mode)
    if mode == "temperature":
        return np.zeros(1)
    if mode == "vector":
        return np.ones(K)
    if mode == "vector-bias":
        return np.concatenate([np.ones(K), np.zeros(K)])
    return np.concatenate([np.eye(K).ravel(), np.zeros(K)])


def params_to_map(params: np.ndarray, mode: str, K: int) -> LinearLogitMap:
    _check_mode(mode)
    params = np.asarray(params, dtype=float)
    b = np.zeros(K)
    if mode == "temperature":
        T = math.exp(float(params[0]))
        return LinearLogitMap(mode=mode, W=np.array(1.0 / T), b=b, T=T)
    if mode == "vector":
        return LinearLogitMap(mode=mode, W=params[:K].copy(), b=b)
    if mode == "vector-bias":
        return LinearLogitMap(mode=mode, W=params[:K].copy(), b=params[K:].copy())
    return LinearLogitMap(mode=mode, W=params[: K * K].reshape(K, K).copy(), b=params[K * K :].copy())


def scale_logits(z, cmap: LinearLogitMap) -> np.ndarray:
    """Calibrated probabilities ``softmax(W z + b)`` for one or more logit rows."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise NonFinite("logits contain non-finite entries")
    return softmax(cmap.transform(z))


def _log_softmax(u: np.ndarray) -> np.ndarray:
    shifted = u - u.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def nll_objective_grad(params, logits, labels, mode: str) -> Tuple[float, np.ndarray]:
    """Mean NLL of ``softmax(W z + b)`` and its gradient w.r.t. the free parameters.

    Parameter layout by mode: ``temperature`` -> ``[log T]``; ``vector`` ->
    ``v``; ``vector-bias`` -> ``[v, b]``; ``matrix-bias`` -> ``[W.ravel(), b]``.
    """
    _check_mode(mode)
    z = np.asarray(logits, dtype=float)
    y = np.asarray(labels)
    n, K = z.shape
    p = np.asarray(params, dtype=float)
    rows = np.arange(n)

    if mode == "temperature":
        u = z * math.exp(-p[0])
    elif mode == "vector":
        u = z * p[:K]
    elif mode == "vector-bias":
        u = z * p[:K] + p[K:]
    else:
        u = z @ p[: K * K].reshape(K, K).T + p[K * K :]

    logp = _log_softmax(u)
    value = -float(np.mean(logp[rows, y]))
    G = np.exp(logp)
    G[rows, y] -= 1.0
    G /= n  # dNLL/du

    if mode == "temperature":
        grad = np.array([-float(np.sum(G * u))])
    elif mode == "vector":
        grad = np.sum(G * z, axis=0)
    elif mode == "vector-bias":
        grad = np.concatenate([np.sum(G * z, axis=0), G.sum(axis=0)])
    else:
        grad = np.concatenate([(G.T @ z).ravel(), G.sum(axis=0)])
    return value, grad


def logits_or_fallback(ps: PredictionSet) -> np.ndarray:
    """Logits if present, else clamped log-probabilities (softmax recovers probs)."""
    if ps.logits is not None:
        return np.asarray(ps.logits)
    return np.log(np.maximum(ps.probs, LOG_EPS))


def fit_linear_scaling(
    calib: PredictionSet, mode: str = "temperature", *, gtol: float = 1e-7, max_iter: int = 10_000
) -> Tuple[LinearLogitMap, FitReport]:
    """Fit one of the linear-in-logit maps by minimizing calibration-set NLL.

    Starts from the identity map (T=1, v=1, W=I, b=0). Temperature is
    optimized as ``log T`` and kept within ``[1/100, 100]``.
    """
    _check_mode(mode)
    z = logits_or_fallback(calib)
    y = calib.labels
    K = calib.K
    project = None
    if mode == "temperature":
        project = lambda x: np.clip(x, -LOG_T_BOUND, LOG_T_BOUND)  # noqa: E731

    res = gradient_descent(
        lambda x: nll_objective_grad(x, z, y, mode),
        initial_params(mode, K),
        project=project,
        gtol=gtol,
        max_iter=max_iter,
    )
    cmap = params_to_map(res.x, mode, K)
    summary = {"T": cmap.T} if mode == "temperature" else {"n_params": int(res.x.size)}
    report = FitReport(
        method=mode,
        initial_nll=res.fun0,
        final_nll=res.fun,
        iterations=res.iterations,
        converged=res.converged,
        grad_norm=res.grad_norm,
        params=summary,
    )
    return cmap, report


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def apply_map(cmap: CalibrationMap, ps: PredictionSet) -> PredictionSet:
    """Apply a fitted map. Linear maps keep the transformed logits."""
    if isinstance(cmap, LinearLogitMap):
        if cmap.K != ps.K:
            raise ClassCountMismatch(f"map has {cmap.K} classes, predictions have {ps.K}")
        u = cmap.transform(logits_or_fallback(ps))
        if not np.all(np.isfinite(u)):
            raise NonFinite("calibrated logits are not finite")
        return validate(logits=u, labels=ps.labels)
    return apply_nonparametric(cmap, ps)


def fit(
    method: str, calib: PredictionSet, *, n_bins: int = DEFAULT_HISTOGRAM_BINS, scheme: str = EQUAL_WIDTH
) -> Tuple[CalibrationMap, FitReport]:
    """Fit any supported method and report calibration-set NLL before and after."""
    if method in LINEAR_MODES:
        return fit_linear_scaling(calib, method)
    if method == "histogram":
        cmap = fit_histogram_binning(calib, n_bins, scheme)
        params = {"bins": int(n_bins), "scheme": scheme}
    elif method == "isotonic":
        cmap = fit_isotonic(calib)
        params = {"steps": max(len(lv) for lv in cmap.levels)}
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    after = apply_map(cmap, calib)
    report = FitReport(
        method=method,
        initial_nll=metrics.nll(calib),
        final_nll=metrics.nll(after),
        params=params,
    )
    return cmap, report


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _floats(a) -> list:
    return [float(x) for x in np.asarray(a, dtype=float).ravel()]


def map_to_dict(cmap: CalibrationMap) -> dict:
    if isinstance(cmap, HistogramMap):
        params = {
            "scheme": cmap.edges[0].scheme,
            "classes": [
                {"edges": _floats(e.edges), "theta": _floats(t)} for e, t in zip(cmap.edges, cmap.theta)
            ],
        }
    elif isinstance(cmap, IsotonicMap):
        params = {
            "classes": [
                {"breakpoints": _floats(bp), "levels": _floats(lv)}
                for bp, lv in zip(cmap.breakpoints, cmap.levels)
            ]
        }
    elif isinstance(cmap, LinearLogitMap):
        params = {"b": _floats(cmap.b)}
        if cmap.mode == "temperature":
            params["T"] = float(cmap.T)
        elif cmap.mode == "matrix-bias":
            params["W"] = [_floats(row) for row in cmap.W]
        else:
            params["W"] = _floats(cmap.W)
    else:
        raise TypeError(f"not a calibration map: {type(cmap).__name__}")
    return {"version": FORMAT_VERSION, "method": cmap.method, "K": cmap.K, "params": params}


def map_from_dict(doc: dict) -> CalibrationMap:
    try:
        version = doc["version"]
        method = doc["method"]
        K = int(doc["K"])
        params = doc["params"]
    except (KeyError, TypeError) as exc:
        raise MapFormatError(f"malformed calibration map: {exc}") from None
    if version != FORMAT_VERSION:
        raise MapFormatError(f"unsupported map version {version!r}")
    try:
        if method == "histogram":
            scheme = params.get("scheme", EQUAL_WIDTH)
            if scheme not in SCHEMES:
                raise MapFormatError(f"unknown scheme {scheme!r}")
            cls = params["classes"]
            cmap = HistogramMap(
                edges=[BinEdges(np.array(c["edges"], dtype=float), scheme) for c in cls],
                theta=[np.array(c["theta"], dtype=float) for c in cls],
            )
        elif method == "isotonic":
            cls = params["classes"]
            cmap = IsotonicMap(
                breakpoints=[np.array(c["breakpoints"], dtype=float) for c in cls],
                levels=[np.array(c["levels"], dtype=float) for c in cls],
            )
        elif method in LINEAR_MODES:
            b = np.array(params["b"], dtype=float)
            if method == "temperature":
                T = float(params["T"])
                if not T > 0:
                    raise MapFormatError("temperature must be positive")
                cmap = LinearLogitMap(mode=method, W=np.array(1.0 / T), b=b, T=T)
            else:
                cmap = LinearLogitMap(mode=method, W=np.array(params["W"], dtype=float), b=b)
        else:
            raise MapFormatError(f"unknown method {method!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MapFormatError):
            raise
        raise MapFormatError(f"malformed {method} parameters: {exc}") from None
    if cmap.K != K:
        raise MapFormatError(f"map declares K={K} but parameters have {cmap.K} classes")
    return cmap


def dumps_map(cmap: CalibrationMap) -> str:
    return json.dumps(map_to_dict(cmap), indent=2) + "\n"


def loads_map(text: str) -> CalibrationMap:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapFormatError(f"calibration map is not valid JSON: {exc}") from None
    return map_from_dict(doc)
