"""Fixed 5x7 bitmap font.

Each character occupies a cell of ``6*scale x 8*scale`` pixels: the glyph is
drawn in the top-left ``5*scale x 7*scale`` corner and the remaining column
and row are spacing.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GLYPH_W = 5
GLYPH_H = 7
CELL_W = GLYPH_W + 1
CELL_H = GLYPH_H + 1

_ROWS = {
    "A": ("01110", "10001", "10001", "11111", "10001", "10001", "10001"),
    "B": ("11110", "10001", "10001", "11110", "10001", "10001", "11110"),
    "C": ("01110", "10001", "10000", "10000", "10000", "10001", "01110"),
    "D": ("11100", "10010", "10001", "10001", "10001", "10010", "11100"),
    "E": ("11111", "10000", "10000", "11110", "10000", "10000", "11111"),
    "F": ("11111", "10000", "10000", "11110", "10000", "10000", "10000"),
    "G": ("01110", "10001", "10000", "10111", "10001", "10001", "01111"),
    "H": ("10001", "10001", "10001", "11111", "10001", "10001", "10001"),
    "I": ("01110", "00100", "00100", "00100", "00100", "00100", "01110"),
    "J": ("00111", "00010", "00010", "00010", "00010", "10010", "01100"),
    "K": ("10001", "10010", "10100", "11000", "10100", "10010", "10001"),
    "L": ("10000", "10000", "10000", "10000", "10000", "10000", "11111"),
    "M": ("10001", "11011", "10101", "10101", "10001", "10001", "10001"),
    "N": ("10001", "10001", "11001", "10101", "10011", "10001", "10001"),
    "O": ("01110", "10001", "10001", "10001", "10001", "10001", "01110"),
    "P": ("11110", "10001", "10001", "11110", "10000", "10000", "10000"),
    "Q": ("01110", "10001", "10001", "10001", "10101", "10010", "01101"),
    "R": ("11110", "10001", "10001", "11110", "10100", "10010", "10001"),
    "S": ("01111", "10000", "10000", "01110", "00001", "00001", "11110"),
    "T": ("11111", "00100", "00100", "00100", "00100", "00100", "00100"),
    "U": ("10001", "10001", "10001", "10001", "10001", "10001", "01110"),
    "V": ("10001", "10001", "10001", "10001", "10001", "01010", "00100"),
    "W": ("10001", "10001", "10001", "10101", "10101", "10101", "01010"),
    "X": ("10001", "10001", "01010", "00100", "01010", "10001", "10001"),
    "Y": ("10001", "10001", "01010", "00100", "00100", "00100", "00100"),
    "Z": ("11111", "00001", "00010", "00100", "01000", "10000", "11111"),
    "0": ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    "1": ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    "2": ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    "3": ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    "4": ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    "5": ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    "6": ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    "7": ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    "8": ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    "9": ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
    " ": ("00000",) * 7,
    ".": ("00000", "00000", "00000", "00000", "00000", "01100", "01100"),
    ",": ("00000", "00000", "00000", "00000", "01100", "00100", "01000"),
}

ALPHABET = frozenset(_ROWS)


@dataclass(frozen=True)
class Glyph:
    character: str
    bitmap: np.ndarray  # (7, 5) bool


@lru_cache(maxsize=None)
def glyph(ch: str) -> Glyph:
    try:
        rows = _ROWS[ch]
    except KeyError:
        raise ValueError(f"unsupported character {ch!r}") from None
    bitmap = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
    bitmap.setflags(write=False)
    return Glyph(ch, bitmap)


@lru_cache(maxsize=None)
def _scaled(ch: str, scale: int) -> np.ndarray:
    out = np.kron(glyph(ch).bitmap, np.ones((scale, scale), dtype=bool))
    out.setflags(write=False)
    return out


def text_size(text: str, scale: int) -> tuple[int, int]:
    """Pixel ``(width, height)`` of a rendered string, spacing included."""
    return CELL_W * scale * len(text), CELL_H * scale


def render_text(canvas: np.ndarray, text: str, x: int, y: int, scale: int, ink: int = 0) -> None:
    """Stamp ``text`` onto a uint8 canvas with its top-left cell corner at (x, y)."""
    step = CELL_W * scale
    for i, ch in enumerate(text):
        bm = _scaled(ch, scale)
        x0 = x + i * step
        region = canvas[y:y + bm.shape[0], x0:x0 + bm.shape[1]]
        region[bm] = ink
