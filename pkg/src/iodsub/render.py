"""Top view of the labeled octahedron faces as SVG.

The four northern faces project onto the diamond ``|x| + |y| <= 1``.
Rejected triangles are white, unresolved ones blue, accepted ones red;
known solutions are red dots and computed solutions black rings.
"""
from __future__ import annotations

from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .pplane import Label, Triangle, to_octahedron

SIZE = 600
MARGIN = 12

FILL = {
    Label.REJECT: "#ffffff",
    Label.UNRESOLVED: "#6baed6",
    Label.PASS: "#6baed6",
    Label.ACCEPT: "#de2d26",
}


def _xy(p) -> tuple[float, float]:
    half = (SIZE - 2 * MARGIN) / 2
    return MARGIN + (1.0 + p[0]) * half, MARGIN + (1.0 - p[1]) * half


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def render_svg(leaves: Iterable[tuple[Triangle, Label]], solutions: Sequence = (),
               known_solutions: Sequence = (), title: str = "") -> str:
    """SVG document for labeled leaf triangles; the output depends only on
    the inputs and their order."""
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append('<g stroke="#000000" stroke-width="0.3" stroke-linejoin="round">')
    for t, label in leaves:
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (_xy(v) for v in t.vertex_array()))
        out.append(f'<polygon class="{label.value}" fill="{FILL[label]}" points="{pts}"/>')
    out.append("</g>")
    for w in solutions:
        x, y = _xy(to_octahedron(np.asarray(w, dtype=float)))
        out.append(f'<circle class="solution" cx="{_fmt(x)}" cy="{_fmt(y)}" r="5" '
                   'fill="none" stroke="#000000" stroke-width="1.2"/>')
    for w in known_solutions:
        x, y = _xy(to_octahedron(np.asarray(w, dtype=float)))
        out.append(f'<circle class="known" cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="#ff0000"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_result(result, title: str = "") -> str:
    leaves = [(n.triangle, n.label) for n in result.triangulation.nodes if not n.children]
    return render_svg(leaves, [s.w for s in result.distinct_solutions()],
                      result.scenario.known_solutions, title)
