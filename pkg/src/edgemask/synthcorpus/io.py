"""On-disk corpus: ``pages/<id>.pgm`` rasters plus ``pages/<id>.ann`` JSON annotations.

Annotation document (UTF-8 JSON, keys sorted)::

    {
      "schema_version": 1,
      "page_id": "page_0000",
      "masthead": "CITY GAZETTE",
      "date": "2021-04-09",
      "seed": 1234,
      "width": 720, "height": 960,
      "elements": [{"id": "a0", "category": "article", "parent": null,
                    "rects": [[x0, y0, x1, y1], ...]}, ...],
      "words": [{"text": "CITY", "box": [x0, y0, x1, y1], "font_scale": 1,
                 "article_id": "a0", "role": "body"}, ...],
      "article_texts": {"a0": {"headline": "...", "body": "para 1\\npara 2"}}
    }

Rectangles are half-open ``[x0, y0, x1, y1]`` pixel boxes.
"""
from __future__ import annotations

import json
from pathlib import Path

from ..raster import Box, read_pgm, write_pgm
from .page import ArticleText, ElementAnnotation, PageRecord, WordBox

SCHEMA_VERSION = 1


class SchemaVersionError(ValueError):
    pass


def page_to_dict(page: PageRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "page_id": page.page_id,
        "masthead": page.masthead,
        "date": page.date,
        "seed": page.seed,
        "width": page.width,
        "height": page.height,
        "elements": [
            {"id": a.id, "category": a.category, "parent": a.parent,
             "rects": [r.as_list() for r in a.rects]}
            for a in page.annotations
        ],
        "words": [
            {"text": w.text, "box": w.box.as_list(), "font_scale": w.font_scale,
             "article_id": w.article_id, "role": w.role}
            for w in page.words
        ],
        "article_texts": {k: {"headline": v.headline, "body": v.body}
                          for k, v in page.article_texts.items()},
    }


def page_from_dict(doc: dict, grid) -> PageRecord:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported annotation schema_version {version!r} "
                                 f"(expected {SCHEMA_VERSION})")
    try:
        if (grid.width, grid.height) != (doc["width"], doc["height"]):
            raise ValueError(f"raster is {grid.width}x{grid.height}, "
                             f"annotation says {doc['width']}x{doc['height']}")
        annotations = tuple(
            ElementAnnotation(e["category"], tuple(Box(*r) for r in e["rects"]), e["id"], e["parent"])
            for e in doc["elements"])
        words = tuple(WordBox(w["text"], Box(*w["box"]), w["font_scale"], w["article_id"], w["role"])
                      for w in doc["words"])
        texts = {k: ArticleText(v["headline"], v["body"]) for k, v in doc["article_texts"].items()}
        return PageRecord(grid, annotations, words, texts, doc["masthead"], doc["date"],
                          doc["seed"], doc["page_id"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed annotation document: {exc!r}") from exc


def save_page(page: PageRecord, pages_dir: str | Path) -> None:
    pages_dir = Path(pages_dir)
    pages_dir.mkdir(parents=True, exist_ok=True)
    write_pgm(pages_dir / f"{page.page_id}.pgm", page.grid)
    text = json.dumps(page_to_dict(page), sort_keys=True, separators=(",", ":"))
    (pages_dir / f"{page.page_id}.ann").write_text(text + "\n", encoding="utf-8")


def load_page(pages_dir: str | Path, page_id: str) -> PageRecord:
    pages_dir = Path(pages_dir)
    ann = pages_dir / f"{page_id}.ann"
    try:
        doc = json.loads(ann.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{ann}: malformed annotation file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{ann}: annotation must be a JSON object")
    try:
        return page_from_dict(doc, read_pgm(pages_dir / f"{page_id}.pgm"))
    except ValueError as exc:
        raise type(exc)(f"{ann}: {exc}") from exc


def save_corpus(records, path: str | Path) -> None:
    """Write ``records`` under ``path/pages``."""
    pages_dir = Path(path) / "pages"
    pages_dir.mkdir(parents=True, exist_ok=True)
    for page in records:
        save_page(page, pages_dir)


def corpus_page_ids(path: str | Path) -> list[str]:
    pages_dir = Path(path) / "pages"
    if not pages_dir.is_dir():
        raise FileNotFoundError(f"no corpus at {path} (missing {pages_dir})")
    return sorted(p.stem for p in pages_dir.glob("*.ann"))


def load_corpus(path: str | Path) -> list[PageRecord]:
    pages_dir = Path(path) / "pages"
    return [load_page(pages_dir, pid) for pid in corpus_page_ids(path)]
