"""Reading order for OCR word boxes.

Words are first split into horizontal bands at vertical gaps taller than a
text line (this separates a full-width headline from the columns below it),
then each band is cut into columns wherever the x-extents leave a gap wider
than one glyph cell.  Columns are read left to right, top to bottom.
"""
from __future__ import annotations

from statistics import median
from typing import Sequence

from .raster import Box

__all__ = ["order_words", "reading_order", "paragraphs", "lines"]

_CELL_ASPECT = 6 / 8  # glyph cell width over cell height


def _box(w) -> Box:
    return w.box if hasattr(w, "box") else w[1]


def _text(w) -> str:
    return w.text if hasattr(w, "text") else w[0]


def _split_runs(items, lo, hi, gap):
    """Group items whose [lo, hi) intervals chain together with gaps <= ``gap``."""
    items = sorted(items, key=lo)
    groups: list[list] = []
    reach = None
    for it in items:
        if reach is None or lo(it) - reach > gap:
            groups.append([it])
            reach = hi(it)
        else:
            groups[-1].append(it)
            reach = max(reach, hi(it))
    return groups


def _columns(words) -> list[list]:
    if not words:
        return []
    line_h = median(_box(w).height for w in words)
    bands = _split_runs(words, lambda w: _box(w).y0, lambda w: _box(w).y1, line_h)
    cols = []
    for band in bands:
        cell_w = _CELL_ASPECT * median(_box(w).height for w in band)
        cols.extend(_split_runs(band, lambda w: _box(w).x0, lambda w: _box(w).x1, cell_w))
    return cols


def _lines(column) -> list[list]:
    line_h = median(_box(w).height for w in column)
    out: list[list] = []
    for w in sorted(column, key=lambda w: (_box(w).y0, _box(w).x0)):
        if out and _box(w).y0 - _box(out[-1][0]).y0 <= line_h / 2:
            out[-1].append(w)
        else:
            out.append([w])
    return [sorted(line, key=lambda w: _box(w).x0) for line in out]


def lines(words: Sequence) -> list[list]:
    """Words grouped into text lines, in reading order."""
    return [line for col in _columns(list(words)) for line in _lines(col)]


def paragraphs(words: Sequence) -> list[list[str]]:
    """Token paragraphs: runs of lines without a gap above half a line height.

    A column or band change always starts a new paragraph.
    """
    out: list[list[str]] = []
    for col in _columns(list(words)):
        prev = None
        for line in _lines(col):
            top = min(_box(w).y0 for w in line)
            height = median(_box(w).height for w in line)
            if prev is None or top - prev > height / 2:
                out.append([])
            out[-1].extend(_text(w) for w in line)
            prev = max(_box(w).y1 for w in line)
    return out


def order_words(words: Sequence) -> list:
    """The input items (``(token, box)`` pairs or objects with ``.box``) in reading order."""
    return [w for line in lines(words) for w in line]


def reading_order(words: Sequence) -> list[str]:
    return [_text(w) for w in order_words(words)]
