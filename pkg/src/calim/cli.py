"""Command-line interface.

Exit codes: 0 on success (a non-converged fit is only a warning), 2 on any
input or validation error.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from calim import calibrators, io, svg, synthetic
from calim.binning import (
    SCHEMES,
    classwise_reliability_table,
    make_edges,
    reliability_table,
)
from calim.compare import ALL_METHODS, COLUMN_TITLES, compare
from calim.data_model import MetricsReport, top_label
from calim.errors import CalibrationError, ClassOutOfRange
from calim.metrics import DEFAULT_METRIC_BINS, report

DEFAULT_DIAGRAM_BINS = 10
SEED_ENV = "CALIM_SEED"

EXIT_OK = 0
EXIT_INPUT = 2

PERCENT_METRICS = {"ece", "mce", "cwece", "accuracy"}
LABELS = {
    "accuracy": "Accuracy, %",
    "ece": "ECE, %",
    "mce": "MCE, %",
    "cwece": "cwECE, %",
    "nll": "NLL",
    "brier": "Brier",
}


class UsageError(Exception):
    pass


def _fmt(name: str, value: float) -> str:
    if name in PERCENT_METRICS:
        return f"{100 * value:.2f}"
    return f"{value:.4f}"


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def format_report(rep: MetricsReport) -> str:
    lines = [f"bins={rep.n_bins} scheme={rep.scheme}"]
    for name in MetricsReport.METRICS:
        lines.append(f"{LABELS[name]:<14}{_fmt(name, getattr(rep, name)):>10}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_metrics(args) -> int:
    ps = io.read_predictions(args.input)
    rep = report(ps, args.bins, args.scheme)
    if args.json:
        sys.stdout.write(io.dumps_json(rep.as_dict()))
    else:
        sys.stdout.write(format_report(rep))
    return EXIT_OK


def cmd_fit(args) -> int:
    ps = io.read_predictions(args.input)
    if args.method in calibrators.LINEAR_MODES and ps.logits is None:
        print("note: no logits in input; using log-probabilities", file=sys.stderr)
    cmap, fit_report = calibrators.fit(args.method, ps, n_bins=args.bins, scheme=args.scheme)
    _write_text(args.out, calibrators.dumps_map(cmap))
    print(fit_report.summary(), file=sys.stdout if args.out not in (None, "-") else sys.stderr)
    if not fit_report.converged:
        print(
            f"warning: {args.method} fit did not converge "
            f"(gradient norm {fit_report.grad_norm:.3g} after {fit_report.iterations} iterations); map written",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_apply(args) -> int:
    with open(args.map, encoding="utf-8") as fh:
        cmap = calibrators.loads_map(fh.read())
    ps = io.read_predictions(args.input)
    out = calibrators.apply_map(cmap, ps)
    text = io.write_predictions(out, include_logits=out.logits is not None, include_probs=True)
    _write_text(args.out, text)
    return EXIT_OK


def _parse_classwise(value: str, K: int) -> list[int]:
    if value == "all":
        return list(range(K))
    try:
        j = int(value)
    except ValueError:
        raise UsageError(f"--classwise expects a class number or 'all', got {value!r}") from None
    if not 1 <= j <= K:
        raise ClassOutOfRange(f"class {j} not in 1..{K}")
    return [j - 1]


def cmd_reliability(args) -> int:
    ps = io.read_predictions(args.input)
    if args.classwise is None:
        edges = make_edges(top_label(ps).conf, args.bins, args.scheme)
        docs = [io.diagram_document(reliability_table(ps, edges))]
    else:
        docs = []
        for j in _parse_classwise(args.classwise, ps.K):
            edges = make_edges(ps.probs[:, j], args.bins, args.scheme)
            docs.append(io.diagram_document(classwise_reliability_table(ps, edges, j)))
    payload = docs[0] if len(docs) == 1 and args.classwise != "all" else docs
    _write_text(args.out, io.dumps_json(payload))
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svg.render(docs))
    return EXIT_OK


def format_comparison(result) -> str:
    best = result.best()
    titles = [COLUMN_TITLES[m] for m in result.methods]
    width = max(12, *(len(t) + 2 for t in titles))
    lines = [f"{'':<14}" + "".join(f"{t:>{width}}" for t in titles)]
    for name in MetricsReport.METRICS:
        cells = []
        for m in result.methods:
            cell = _fmt(name, getattr(result.reports[m], name))
            if best[name] == m:
                cell = "*" + cell
            cells.append(f"{cell:>{width}}")
        lines.append(f"{LABELS[name]:<14}" + "".join(cells))
    lines.append("* best in row")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    calib = io.read_predictions(args.calib)
    test = io.read_predictions(args.test)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()] if args.methods else list(ALL_METHODS)
    result = compare(
        calib,
        test,
        methods,
        histogram_bins=args.hist_bins,
        metric_bins=args.bins,
        scheme=args.scheme,
    )
    for m, r in result.fits.items():
        if not r.converged:
            print(f"warning: {m} fit did not converge", file=sys.stderr)
    if args.json:
        sys.stdout.write(io.dumps_json(result.as_dict()))
    else:
        sys.stdout.write(format_comparison(result))
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
        else:
            seed = 0
    cfg = synthetic.SynthConfig(n=args.n, K=args.classes, sigma=args.sigma, distort=args.distort, seed=seed)
    ps = synthetic.generate(cfg)
    _write_text(args.out, io.write_predictions(ps))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="calim", description="Measure and correct classifier confidence calibration.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("metrics", help="accuracy, ECE, MCE, cwECE, NLL and Brier score")
    p.add_argument("--input", required=True)
    p.add_argument("--bins", type=_positive_int, default=DEFAULT_METRIC_BINS)
    p.add_argument("--scheme", choices=SCHEMES, default="equal-width")
    p.add_argument("--json", action="store_true", help="print raw fractions as JSON")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("fit", help="fit a calibration map on a calibration set")
    p.add_argument("--method", required=True, choices=calibrators.METHODS)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="map file ('-' for stdout)")
    p.add_argument("--bins", type=_positive_int, default=calibrators.DEFAULT_HISTOGRAM_BINS,
                   help="histogram binning only")
    p.add_argument("--scheme", choices=SCHEMES, default="equal-width", help="histogram binning only")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("apply", help="apply a fitted map to predictions")
    p.add_argument("--map", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output CSV ('-' for stdout)")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("reliability", help="reliability diagram data and optional SVG")
    p.add_argument("--input", required=True)
    p.add_argument("--bins", type=_positive_int, default=DEFAULT_DIAGRAM_BINS)
    p.add_argument("--scheme", choices=SCHEMES, default="equal-width")
    p.add_argument("--classwise", metavar="J|all", help="1-based class, or 'all'")
    p.add_argument("--out", help="diagram JSON (default stdout)")
    p.add_argument("--svg", metavar="PATH")
    p.set_defaults(func=cmd_reliability)

    p = sub.add_parser("compare", help="compare calibration methods on a test set")
    p.add_argument("--calib", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(ALL_METHODS)}")
    p.add_argument("--bins", type=_positive_int, default=DEFAULT_METRIC_BINS, help="metric bins")
    p.add_argument("--hist-bins", type=_positive_int, default=calibrators.DEFAULT_HISTOGRAM_BINS)
    p.add_argument("--scheme", choices=SCHEMES, default="equal-width")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="generate a synthetic predictions file")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--distort", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV}, else 0")
    p.add_argument("--out", required=True, help="output CSV ('-' for stdout)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CalibrationError, UsageError, OSError, ValueError) as exc:
        print(f"calim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
