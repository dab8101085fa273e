"""Confidence calibration toolkit: metrics, post-hoc calibration maps, diagrams."""

from calim.binning import (
    BinEdges,
    ReliabilityTable,
    assign_bin,
    classwise_reliability_table,
    equal_frequency_edges,
    equal_width_edges,
    make_edges,
    reliability_table,
)
from calim.calibrators import (
    CalibrationMap,
    FitReport,
    HistogramMap,
    IsotonicMap,
    LinearLogitMap,
    apply_map,
    fit_histogram_binning,
    fit_isotonic,
    fit_linear_scaling,
    pava,
    scale_logits,
)
from calim.data_model import MetricsReport, PredictionSet, TopLabelView, softmax, top_label, validate
from calim.errors import CalibrationError
from calim.metrics import accuracy, brier, cwece, ece, mce, nll, report

__all__ = [
    "BinEdges",
    "CalibrationError",
    "CalibrationMap",
    "FitReport",
    "HistogramMap",
    "IsotonicMap",
    "LinearLogitMap",
    "MetricsReport",
    "PredictionSet",
    "ReliabilityTable",
    "TopLabelView",
    "accuracy",
    "apply_map",
    "assign_bin",
    "brier",
    "classwise_reliability_table",
    "cwece",
    "ece",
    "equal_frequency_edges",
    "equal_width_edges",
    "fit_histogram_binning",
    "fit_isotonic",
    "fit_linear_scaling",
    "make_edges",
    "mce",
    "nll",
    "pava",
    "reliability_table",
    "report",
    "scale_logits",
    "softmax",
    "top_label",
    "validate",
]

__version__ = "0.1.0"
