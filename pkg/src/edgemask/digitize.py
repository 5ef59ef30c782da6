"""Turn per-article instance masks into an accessible newspaper document.

For each article the headline words are found by glyph height, headline and
illustration areas are painted white, the remaining text is read with the
oracle OCR and split into paragraphs, and the headline is read separately.
Articles are then collated in reading order and emitted as Markdown or HTML
with a table of contents.
"""
from __future__ import annotations

import html
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .raster import BinaryMask, Box, PixelGrid
from .reading import paragraphs, reading_order
from .refine import RefineConfig, classify_headline
from .synthcorpus.ocr import oracle_ocr
from .synthcorpus.page import PageRecord

__all__ = [
    "DigitizeConfig",
    "ArticleDoc",
    "NewsDoc",
    "reading_order",
    "detect_solid_blocks",
    "extract_article",
    "digitize_page",
    "assemble",
    "emit",
    "TEMPLATE_VERSION",
]

TEMPLATE_VERSION = 1
EMPTY_ARTICLE = "empty-article"
EMPTY_HEADLINE = "empty-headline"
MIN_BLOCK = 32


@dataclass(frozen=True)
class DigitizeConfig:
    """``illustrations`` selects where figure areas come from: ``"detect"``
    finds solid gray blocks in the raster, ``"annotations"`` uses the page's
    illustration annotations."""

    refine: RefineConfig = RefineConfig()
    illustrations: str = "detect"
    column_tolerance: int = 16

    def __post_init__(self):
        if self.illustrations not in ("detect", "annotations"):
            raise ValueError(f"unknown illustration source {self.illustrations!r}")


@dataclass(frozen=True)
class ArticleDoc:
    id: str
    headline: str
    body: tuple[str, ...]
    page_index: int = 0
    order_index: int = 0
    anchor: tuple[int, int] = (0, 0)  # (x0, y0) of the instance region
    flags: frozenset = frozenset()

    @property
    def empty(self) -> bool:
        return EMPTY_ARTICLE in self.flags

    def text(self) -> str:
        return "\n".join(self.body)


@dataclass(frozen=True)
class NewsDoc:
    masthead: str
    date: str
    articles: tuple[ArticleDoc, ...] = field(default_factory=tuple)

    def toc(self) -> list[str]:
        return [_title(a) for a in self.articles]


def _title(article: ArticleDoc) -> str:
    return article.headline or f"[Untitled article {article.order_index + 1}]"


def detect_solid_blocks(grid: PixelGrid, min_size: int = MIN_BLOCK) -> list[Box]:
    """Axis-aligned rectangles of one uniform non-white, non-black intensity.

    Black is excluded because text and rules are drawn in full ink.
    """
    data = grid.data
    out = []
    for value in np.unique(data):
        if value in (0, 255):
            continue
        same = data == value
        labels, _ = ndimage.label(same)
        for i, sl in enumerate(ndimage.find_objects(labels), 1):
            box = Box(sl[1].start, sl[0].start, sl[1].stop, sl[0].stop)
            if box.width >= min_size and box.height >= min_size and (labels[sl] == i).all():
                out.append(box)
    return sorted(out)


def _illustrations(page: PageRecord, cfg: DigitizeConfig) -> list[Box]:
    if cfg.illustrations == "annotations":
        return [r for a in page.annotations if a.category == "illustration" for r in a.rects]
    return detect_solid_blocks(page.grid)


def extract_article(page: PageRecord, instance: BinaryMask, cfg: DigitizeConfig = DigitizeConfig(),
                    article_id: str = "", page_index: int = 0) -> ArticleDoc:
    """Read one article through its instance mask."""
    if (instance.width, instance.height) != (page.width, page.height):
        raise ValueError("instance mask does not match the page size")
    bbox = instance.bbox()
    if bbox is None:
        return ArticleDoc(article_id, "", (), page_index, flags=frozenset({EMPTY_ARTICLE, EMPTY_HEADLINE}))
    anchor = (bbox.x0, bbox.y0)
    visible = oracle_ocr(page, instance)
    head_words, _ = classify_headline(visible, cfg.refine)
    blocked = [w.box for w in head_words]
    blocked += [b for b in _illustrations(page, cfg) if b.intersection_area(bbox) > 0]
    body_area = instance & ~BinaryMask.from_boxes(page.width, page.height, blocked)
    body = tuple(" ".join(p) for p in paragraphs(oracle_ocr(page, body_area)))

    headline = ""
    if head_words:
        region = BinaryMask.from_boxes(page.width, page.height,
                                       [Box.bounding(w.box for w in head_words)])
        headline = " ".join(t.text for t in oracle_ocr(page, region & instance))
    flags = set()
    if not headline:
        flags.add(EMPTY_HEADLINE)
    if not body:
        flags.add(EMPTY_ARTICLE)
    return ArticleDoc(article_id, headline, body, page_index, anchor=anchor, flags=frozenset(flags))


def digitize_page(page: PageRecord, instances: Sequence[tuple[str, BinaryMask]],
                  cfg: DigitizeConfig = DigitizeConfig(), page_index: int = 0) -> list[ArticleDoc]:
    return [extract_article(page, mask, cfg, aid, page_index) for aid, mask in instances]


def _column_major(articles: list[ArticleDoc], tolerance: int) -> list[ArticleDoc]:
    ordered: list[ArticleDoc] = []
    by_x = sorted(articles, key=lambda a: (a.anchor[0], a.anchor[1]))
    columns: list[list[ArticleDoc]] = []
    for a in by_x:
        if columns and a.anchor[0] - columns[-1][0].anchor[0] <= tolerance:
            columns[-1].append(a)
        else:
            columns.append([a])
    for col in columns:
        ordered.extend(sorted(col, key=lambda a: (a.anchor[1], a.anchor[0])))
    return ordered


def assemble(masthead: str, date: str, articles: Sequence[ArticleDoc],
             column_tolerance: int = 16) -> NewsDoc:
    """Collate articles page by page, column-major by their top-left anchors."""
    ordered = []
    for page_index in sorted({a.page_index for a in articles}):
        on_page = [a for a in articles if a.page_index == page_index]
        ordered.extend(_column_major(on_page, column_tolerance))
    ordered = [ArticleDoc(a.id, a.headline, a.body, a.page_index, i, a.anchor, a.flags)
               for i, a in enumerate(ordered)]
    return NewsDoc(masthead, date, tuple(ordered))


def _anchor_id(article: ArticleDoc) -> str:
    return f"article-{article.order_index + 1}"


def _emit_markdown(doc: NewsDoc) -> str:
    lines = [f"<!-- edgemask template v{TEMPLATE_VERSION} -->", f"# {doc.masthead}", "",
             f"*{doc.date}*", "", "## Contents", ""]
    for a in doc.articles:
        lines.append(f"{a.order_index + 1}. [{_title(a)}](#{_anchor_id(a)})")
    for a in doc.articles:
        lines += ["", f'<a id="{_anchor_id(a)}"></a>', "", f"## {_title(a)}"]
        for para in a.body:
            lines += ["", para]
    return "\n".join(lines) + "\n"


def _emit_html(doc: NewsDoc) -> str:
    e = html.escape
    out = [
        "<!DOCTYPE html>",
        f"<!-- edgemask template v{TEMPLATE_VERSION} -->",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{e(doc.masthead)}, {e(doc.date)}</title>",
        "</head>",
        "<body>",
        "<header>",
        f"<h1>{e(doc.masthead)}</h1>",
        f'<p><time datetime="{e(doc.date)}">{e(doc.date)}</time></p>',
        "</header>",
        '<nav aria-label="Contents">',
        "<h2>Contents</h2>",
        "<ol>",
    ]
    for a in doc.articles:
        out.append(f'<li><a href="#{_anchor_id(a)}">{e(_title(a))}</a></li>')
    out += ["</ol>", "</nav>", "<main>"]
    for a in doc.articles:
        out.append(f'<section id="{_anchor_id(a)}">')
        out.append(f"<h2>{e(_title(a))}</h2>")
        out.extend(f"<p>{e(p)}</p>" for p in a.body)
        out.append("</section>")
    out += ["</main>", "</body>", "</html>"]
    return "\n".join(out) + "\n"


def emit(doc: NewsDoc, fmt: str = "html") -> str:
    """Render ``doc`` as ``"html"`` or ``"md"`` (``"markdown"`` is accepted too)."""
    if fmt == "html":
        return _emit_html(doc)
    if fmt in ("md", "markdown"):
        return _emit_markdown(doc)
    raise ValueError(f"unknown format {fmt!r}")
