"""Fit several calibration methods on one set and score them on another."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from calim.binning import EQUAL_WIDTH
from calim.calibrators import DEFAULT_HISTOGRAM_BINS, METHODS, FitReport, apply_map, fit
from calim.data_model import MetricsReport, PredictionSet
from calim.errors import ClassCountMismatch
from calim.metrics import DEFAULT_METRIC_BINS, report

UNCALIBRATED = "uncalibrated"
ALL_METHODS = (UNCALIBRATED,) + METHODS

COLUMN_TITLES = {
    UNCALIBRATED: "Before calibration",
    "histogram": "Hist-binning",
    "isotonic": "Isotonic",
    "temperature": "T-scaling",
    "vector": "V-scaling",
    "vector-bias": "V-scaling-b",
    "matrix-bias": "M-scaling-b",
}

# Higher is better only for accuracy.
HIGHER_IS_BETTER = {"accuracy"}


@dataclass
class Comparison:
    methods: List[str]
    reports: Dict[str, MetricsReport]
    fits: Dict[str, FitReport] = field(default_factory=dict)

    def best(self) -> Dict[str, str]:
        out = {}
        for name in MetricsReport.METRICS:
            values = {m: getattr(self.reports[m], name) for m in self.methods}
            pick = max if name in HIGHER_IS_BETTER else min
            out[name] = pick(values, key=values.get)
        return out

    def as_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "metrics": {m: self.reports[m].as_dict() for m in self.methods},
            "best": self.best(),
            "fits": {
                m: {
                    "initial_nll": r.initial_nll,
                    "final_nll": r.final_nll,
                    "iterations": r.iterations,
                    "converged": r.converged,
                }
                for m, r in self.fits.items()
            },
        }


def compare(
    calib: PredictionSet,
    test: PredictionSet,
    methods: Sequence[str] = ALL_METHODS,
    *,
    histogram_bins: int = DEFAULT_HISTOGRAM_BINS,
    metric_bins: int = DEFAULT_METRIC_BINS,
    scheme: str = EQUAL_WIDTH,
) -> Comparison:
    if calib.K != test.K:
        raise ClassCountMismatch(f"calibration set has {calib.K} classes, test set has {test.K}")
    unknown = [m for m in methods if m not in ALL_METHODS]
    if unknown:
        raise ValueError(f"unknown method(s) {unknown}; expected a subset of {list(ALL_METHODS)}")

    reports, fits = {}, {}
    for method in methods:
        if method == UNCALIBRATED:
            reports[method] = report(test, metric_bins, scheme)
            continue
        cmap, fit_report = fit(method, calib, n_bins=histogram_bins, scheme=scheme)
        fits[method] = fit_report
        reports[method] = report(apply_map(cmap, test), metric_bins, scheme)
    return Comparison(methods=list(methods), reports=reports, fits=fits)
