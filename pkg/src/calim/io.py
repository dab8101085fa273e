"""Prediction CSV files and reliability-diagram documents.

Prediction files carry a header of ``logit_0..logit_{K-1}`` and/or
``prob_0..prob_{K-1}`` columns followed by a 1-based ``label`` column.
Floats are written with ``repr`` so a write/read cycle is value-exact.
"""

from __future__ import annotations

import csv
import io
import json
import re
from typing import Optional, TextIO

import numpy as np

from calim.binning import ReliabilityTable
from calim.data_model import PredictionSet, validate
from calim.errors import CalibrationError
from calim.metrics import ece, mce


class ParseError(CalibrationError):
    """A prediction file could not be parsed; message names row and column."""


_COL = re.compile(r"^(logit|prob)_(\d+)$")


def _parse_header(header: list[str]) -> tuple[list[int], list[int], int]:
    if not header or header[-1].strip() != "label":
        raise ParseError("row 1: last column must be 'label'")
    families: dict[str, list[int]] = {"logit": [], "prob": []}
    for col, name in enumerate(header[:-1], start=1):
        m = _COL.match(name.strip())
        if not m:
            raise ParseError(f"row 1, column {col}: unexpected column name {name!r}")
        families[m.group(1)].append(col - 1)
    for fam, cols in families.items():
        expected = [f"{fam}_{k}" for k in range(len(cols))]
        got = [header[c].strip() for c in cols]
        if got != expected:
            raise ParseError(f"row 1: {fam} columns must be {', '.join(expected)} in order")
    logit_cols, prob_cols = families["logit"], families["prob"]
    if not logit_cols and not prob_cols:
        raise ParseError("row 1: no logit_* or prob_* columns")
    if logit_cols and prob_cols and len(logit_cols) != len(prob_cols):
        raise ParseError("row 1: logit_* and prob_* column counts differ")
    return logit_cols, prob_cols, len(header) - 1


def read_predictions(source) -> PredictionSet:
    """Parse a predictions CSV from a path or text stream."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return _read(fh)
    return _read(source)


def _read(fh: TextIO) -> PredictionSet:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("row 1: file is empty") from None
    logit_cols, prob_cols, label_col = _parse_header(header)
    width = len(header)

    values: list[list[float]] = []
    labels: list[int] = []
    for rownum, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"row {rownum}: expected {width} columns, got {len(row)}")
        parsed = []
        for col, cell in enumerate(row[:-1], start=1):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(f"row {rownum}, column {col}: not a number: {cell!r}") from None
        cell = row[-1].strip()
        if not re.fullmatch(r"[+-]?\d+", cell):
            raise ParseError(f"row {rownum}, column {label_col + 1}: label must be an integer, got {cell!r}")
        values.append(parsed)
        labels.append(int(cell))
    if not values:
        raise ParseError("file has no data rows")

    arr = np.array(values, dtype=float)
    K = len(logit_cols) or len(prob_cols)
    y = np.array(labels, dtype=np.int64)
    bad = np.flatnonzero((y < 1) | (y > K))
    if bad.size:
        i = int(bad[0])
        raise ParseError(f"row {i + 2}, column {label_col + 1}: label {y[i]} not in 1..{K}")
    nonfinite = np.argwhere(~np.isfinite(arr))
    if nonfinite.size:
        r, c = nonfinite[0]
        raise ParseError(f"row {r + 2}, column {c + 1}: non-finite value")

    logits = arr[:, logit_cols] if logit_cols else None
    probs = arr[:, prob_cols] if prob_cols else None
    try:
        return validate(logits=logits, probs=probs, labels=y - 1)
    except CalibrationError as exc:
        msg = str(exc)
        m = re.match(r"row (\d+): (.*)", msg)
        if m:
            msg = f"row {int(m.group(1)) + 2}: {m.group(2)}"
        raise ParseError(msg) from None


def write_predictions(ps: PredictionSet, dest=None, *, include_logits: Optional[bool] = None,
                      include_probs: Optional[bool] = None) -> Optional[str]:
    """Write ``ps`` as CSV to a path or stream; returns the text when ``dest`` is None.

    By default logits are written when present and probabilities only when
    there are no logits.
    """
    has_logits = ps.logits is not None
    if include_logits is None:
        include_logits = has_logits
    if include_probs is None:
        include_probs = not has_logits
    if include_logits and not has_logits:
        raise ValueError("prediction set has no logits to write")
    if not (include_logits or include_probs):
        raise ValueError("nothing to write")

    buf = io.StringIO()
    header = []
    if include_logits:
        header += [f"logit_{k}" for k in range(ps.K)]
    if include_probs:
        header += [f"prob_{k}" for k in range(ps.K)]
    header.append("label")
    buf.write(",".join(header) + "\n")
    for i in range(ps.n):
        cells = []
        if include_logits:
            cells += [repr(float(v)) for v in ps.logits[i]]
        if include_probs:
            cells += [repr(float(v)) for v in ps.probs[i]]
        cells.append(str(int(ps.labels[i]) + 1))
        buf.write(",".join(cells) + "\n")
    text = buf.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return None


def diagram_document(table: ReliabilityTable) -> dict:
    """Serializable reliability-diagram document for one table.

    Empty bins carry no accuracy/confidence keys. The class index is 1-based.
    """
    bins = []
    for m in range(table.edges.M):
        entry = {
            "lower": float(table.edges.lower[m]),
            "upper": float(table.edges.upper[m]),
            "count": int(table.counts[m]),
            "weight": float(table.counts[m] / table.n),
        }
        if table.counts[m] > 0:
            entry["accuracy"] = float(table.accuracy[m])
            entry["confidence"] = float(table.confidence[m])
        bins.append(entry)
    doc = {"mode": table.mode}
    if table.cls is not None:
        doc["class"] = table.cls + 1
    doc.update(
        {
            "M": table.edges.M,
            "scheme": table.edges.scheme,
            "n": table.n,
            "ece": ece(table),
            "mce": mce(table),
            "bins": bins,
        }
    )
    return doc


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"
