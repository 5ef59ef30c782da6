"""Metadata-driven OCR that degrades words by how much of each glyph cell is visible."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..raster import BinaryMask, Box
from ..reading import order_words
from .font import CELL_H, CELL_W
from .page import PageRecord

VERBATIM_AT = 0.8
DROP_AT = 0.2
SUBSTITUTE = "#"


class OcrToken(NamedTuple):
    text: str
    box: Box


def _summed_area(mask: np.ndarray) -> np.ndarray:
    sat = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    sat[1:, 1:] = mask.astype(np.int64).cumsum(0).cumsum(1)
    return sat


def _char_cells(words) -> tuple[np.ndarray, np.ndarray]:
    """Cell rectangles ``(n_chars, 4)`` of every character and per-word offsets."""
    lens = np.array([len(w.text) for w in words], dtype=np.intp)
    if lens.size == 0:
        return np.zeros((0, 4), dtype=np.intp), np.zeros(1, dtype=np.intp)
    geo = np.array([(w.box.x0, w.box.y0, w.font_scale) for w in words], dtype=np.intp)
    offsets = np.concatenate([[0], np.cumsum(lens)])
    word_of = np.repeat(np.arange(lens.size), lens)
    index = np.arange(offsets[-1]) - offsets[word_of]
    scale = geo[word_of, 2]
    x0 = geo[word_of, 0] + CELL_W * scale * index
    y0 = geo[word_of, 1]
    cells = np.stack([x0, y0, x0 + CELL_W * scale, y0 + CELL_H * scale], axis=1)
    return cells, offsets


def cell_visibility(page: PageRecord, visible: BinaryMask) -> list[np.ndarray]:
    """Visible fraction of every character cell, one array per page word."""
    if (visible.width, visible.height) != (page.width, page.height):
        raise ValueError(f"dimension mismatch: mask {visible.width}x{visible.height} "
                         f"vs page {page.width}x{page.height}")
    return _visibility(page.words, visible)


def _visibility(words, visible: BinaryMask) -> list[np.ndarray]:
    cells, offsets = _char_cells(words)
    bbox = visible.bbox()
    if bbox is None or cells.size == 0:
        return [np.zeros(b - a) for a, b in zip(offsets[:-1], offsets[1:])]
    # summed-area table over the mask's bounding box only; cells are clipped to it
    sat = _summed_area(visible.data[bbox.slices()])
    x0, x1 = (np.clip(c - bbox.x0, 0, bbox.width) for c in (cells[:, 0], cells[:, 2]))
    y0, y1 = (np.clip(c - bbox.y0, 0, bbox.height) for c in (cells[:, 1], cells[:, 3]))
    sums = sat[y1, x1] - sat[y0, x1] - sat[y1, x0] + sat[y0, x0]
    cell_area = (cells[:, 2] - cells[:, 0]) * (cells[:, 3] - cells[:, 1])
    frac = sums / cell_area
    return [frac[a:b] for a, b in zip(offsets[:-1], offsets[1:])]


def degrade(text: str, fractions: np.ndarray) -> str:
    chars = []
    for ch, f in zip(text, fractions):
        if f >= VERBATIM_AT:
            chars.append(ch)
        elif f > DROP_AT:
            chars.append(SUBSTITUTE)
    return "".join(chars)


def oracle_ocr(page: PageRecord, visible: BinaryMask) -> list[OcrToken]:
    """Read the words of ``page`` through the ``visible`` mask.

    A character whose cell is at least 80% visible is read verbatim, one
    between 20% and 80% visible is read as ``#``, and anything less is lost.
    Words that lose every character are omitted.  Tokens come back in
    reading order.
    """
    if (visible.width, visible.height) != (page.width, page.height):
        raise ValueError(f"dimension mismatch: mask {visible.width}x{visible.height} "
                         f"vs page {page.width}x{page.height}")
    bbox = visible.bbox()
    if bbox is None:
        return []
    words = [w for w in page.words if w.box.intersection_area(bbox) > 0]
    tokens = []
    for w, frac in zip(words, _visibility(words, visible)):
        if not frac.any():
            continue
        text = degrade(w.text, frac)
        if text:
            tokens.append(OcrToken(text, w.box))
    return order_words(tokens)
