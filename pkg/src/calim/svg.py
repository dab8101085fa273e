"""Minimal SVG rendering of reliability diagrams.

Each panel draws, per bin, a blue bar for accuracy next to a red bar for mean
confidence, the diagonal of perfect calibration, and the bin weight as a grey
strip under the axis.
"""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

PANEL_W = 320
PANEL_H = 340
PLOT = 240
MARGIN_L = 50
MARGIN_T = 30
WEIGHT_H = 30

ACC_COLOR = "#3b6fd4"
CONF_COLOR = "#d43b3b"


def _f(x: float) -> str:
    return f"{x:.2f}"


def _panel(doc: dict, ox: float, oy: float) -> list[str]:
    x0, y0 = ox + MARGIN_L, oy + MARGIN_T
    out = []

    def px(v):
        return x0 + v * PLOT

    def py(v):
        return y0 + (1.0 - v) * PLOT

    title = "top-label" if doc["mode"] == "top-label" else f"class {doc['class']}"
    out.append(
        f'<text x="{_f(x0)}" y="{_f(oy + 18)}" font-size="13">'
        f"{escape(title)}  ECE={100 * doc['ece']:.2f}%  MCE={100 * doc['mce']:.2f}%</text>"
    )
    out.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{PLOT}" height="{PLOT}" fill="none" stroke="#000"/>')

    for b in doc["bins"]:
        lo, hi = b["lower"], b["upper"]
        width = (hi - lo) * PLOT
        half = width / 2.0
        if "accuracy" in b:
            for offset, value, color in ((0.0, b["accuracy"], ACC_COLOR), (half, b["confidence"], CONF_COLOR)):
                out.append(
                    f'<rect x="{_f(px(lo) + offset)}" y="{_f(py(value))}" width="{_f(half)}" '
                    f'height="{_f(value * PLOT)}" fill="{color}" fill-opacity="0.8"/>'
                )
        wh = b["weight"] * WEIGHT_H
        out.append(
            f'<rect x="{_f(px(lo))}" y="{_f(y0 + PLOT + 8 + WEIGHT_H - wh)}" width="{_f(width)}" '
            f'height="{_f(wh)}" fill="#888"/>'
        )

    out.append(
        f'<line x1="{_f(px(0))}" y1="{_f(py(0))}" x2="{_f(px(1))}" y2="{_f(py(1))}" '
        'stroke="#444" stroke-dasharray="4,3"/>'
    )
    for v in (0.0, 0.5, 1.0):
        out.append(f'<text x="{_f(px(v) - 8)}" y="{_f(y0 + PLOT + WEIGHT_H + 24)}" font-size="10">{v:.1f}</text>')
        out.append(f'<text x="{_f(x0 - 26)}" y="{_f(py(v) + 4)}" font-size="10">{v:.1f}</text>')
    out.append(f'<text x="{_f(x0 - 44)}" y="{_f(y0 + PLOT + 8 + WEIGHT_H)}" font-size="9">weight</text>')
    return out


def render(docs: Sequence[dict], columns: int = 4) -> str:
    """Render one panel per diagram document, ``columns`` panels per row."""
    docs = list(docs)
    cols = min(columns, len(docs))
    rows = (len(docs) + cols - 1) // cols
    w, h = cols * PANEL_W, rows * PANEL_H + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="#fff"/>',
    ]
    for i, doc in enumerate(docs):
        parts += _panel(doc, (i % cols) * PANEL_W, (i // cols) * PANEL_H)
    ly = h - 8
    parts.append(f'<rect x="10" y="{ly - 9}" width="10" height="10" fill="{ACC_COLOR}"/>')
    parts.append(f'<text x="24" y="{ly}" font-size="11">accuracy</text>')
    parts.append(f'<rect x="90" y="{ly - 9}" width="10" height="10" fill="{CONF_COLOR}"/>')
    parts.append(f'<text x="104" y="{ly}" font-size="11">confidence</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
