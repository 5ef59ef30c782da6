"""Box tightening and headline detection from OCR word boxes.

A detected article box is snapped to the words it mostly contains, and the
words inside an article are split into headline and body by glyph height.
"""
from __future__ import annotations

from dataclasses import dataclass
from statistics import median
from typing import Sequence

from .raster import Box
from .synthcorpus.page import ElementAnnotation, WordBox

__all__ = [
    "RefineConfig",
    "EmptyRefinementError",
    "qualifying_words",
    "refine_box",
    "classify_headline",
    "RegionLabel",
    "label_regions",
]


@dataclass(frozen=True)
class RefineConfig:
    """``containment_threshold``: share of a word box that must fall inside the
    detection; ``headline_ratio``: height multiple over the article median
    that marks a headline word."""

    containment_threshold: float = 0.5
    headline_ratio: float = 1.5

    def __post_init__(self):
        if not 0.0 < self.containment_threshold <= 1.0:
            raise ValueError("containment_threshold must be in (0, 1]")
        if not self.headline_ratio > 0.0:
            raise ValueError("headline_ratio must be > 0")


class EmptyRefinementError(ValueError):
    """No word box qualifies for the detected box."""


def qualifying_words(predicted: Box, words: Sequence[WordBox],
                     cfg: RefineConfig = RefineConfig()) -> list[WordBox]:
    """Words whose intersection with ``predicted`` covers enough of their own area."""
    return [w for w in words
            if predicted.intersection_area(w.box) >= cfg.containment_threshold * w.box.area]


def refine_box(predicted: Box, words: Sequence[WordBox], cfg: RefineConfig = RefineConfig()) -> Box:
    """Bounding rectangle of the words that ``predicted`` mostly contains.

    Raises :class:`EmptyRefinementError` when no word qualifies; callers keep
    the original box in that case.
    """
    hits = qualifying_words(predicted, words, cfg)
    if not hits:
        raise EmptyRefinementError(f"no word box qualifies inside {predicted}")
    return Box.bounding(w.box for w in hits)


def classify_headline(words: Sequence, cfg: RefineConfig = RefineConfig()) -> tuple[list, list]:
    """Split one article's words into ``(headline, body)``.

    Any items with a ``.box`` attribute work (word boxes or OCR tokens).

    Tall words (height at least ``headline_ratio`` times the median) are
    headline candidates.  Walking the words top to bottom, only the first
    unbroken run of tall words is kept as the headline; tall words further
    down stay in the body.
    """
    words = list(words)
    if not words:
        return [], []
    cutoff = cfg.headline_ratio * median(w.box.height for w in words)
    ordered = sorted(words, key=lambda w: (w.box.y0, w.box.x0))
    headline_ids = set()
    started = False
    for w in ordered:
        tall = w.box.height >= cutoff
        if tall:
            headline_ids.add(id(w))
            started = True
        elif started:
            # a short word below the first tall word ends the headline band,
            # unless it shares a text line with a tall word above it
            if any(id(o) in headline_ids and o.box.y1 > w.box.y0 for o in ordered):
                continue
            break
    headline = [w for w in words if id(w) in headline_ids]
    body = [w for w in words if id(w) not in headline_ids]
    return headline, body


@dataclass(frozen=True)
class RegionLabel:
    """Output of :func:`label_regions` for one detection."""

    article: ElementAnnotation
    headline: ElementAnnotation | None
    score: float
    refined: bool


def label_regions(detected: Sequence[tuple[Box, float]], words: Sequence[WordBox],
                  cfg: RefineConfig = RefineConfig()) -> list[RegionLabel]:
    """Refine every detection and split its words into headline and body.

    Detections with no qualifying words keep their box and come back with
    ``refined=False`` and no headline.
    """
    out = []
    for i, (box, score) in enumerate(detected):
        art_id = f"a{i}"
        try:
            region = refine_box(box, words, cfg)
        except EmptyRefinementError:
            out.append(RegionLabel(ElementAnnotation("article", (box,), art_id), None,
                                   float(score), False))
            continue
        inside = qualifying_words(box, words, cfg)
        head, _ = classify_headline(inside, cfg)
        head_ann = None
        if head:
            head_ann = ElementAnnotation("headline", (Box.bounding(w.box for w in head),),
                                         f"{art_id}.headline", art_id)
        out.append(RegionLabel(ElementAnnotation("article", (region,), art_id), head_ann,
                               float(score), True))
    return out
