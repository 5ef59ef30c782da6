"""Synthetic newspaper corpus: page generator, oracle OCR and on-disk format."""
from .font import ALPHABET, Glyph, glyph
from .io import SchemaVersionError, load_corpus, load_page, save_corpus, save_page
from .ocr import OcrToken, oracle_ocr
from .page import (
    ArticleText,
    ElementAnnotation,
    InfeasibleLayout,
    LayoutSpec,
    PageRecord,
    WordBox,
    generate_page,
)

__all__ = [
    "ALPHABET", "Glyph", "glyph",
    "ArticleText", "ElementAnnotation", "InfeasibleLayout", "LayoutSpec", "PageRecord",
    "WordBox", "generate_page", "generate_corpus",
    "OcrToken", "oracle_ocr",
    "SchemaVersionError", "load_corpus", "load_page", "save_corpus", "save_page",
]


def generate_corpus(pages: int, seed: int, **layout) -> list[PageRecord]:
    """Generate ``pages`` pages whose layouts are drawn from ``seed``.

    Column and article counts vary per page; ``layout`` overrides any other
    :class:`LayoutSpec` field.
    """
    import numpy as np

    rng = np.random.default_rng(seed)
    out = []
    for i in range(pages):
        columns = int(rng.integers(2, 6))
        lo, hi = {2: (3, 6), 3: (4, 8), 4: (5, 10), 5: (6, 12)}[columns]
        params = dict(columns=columns, articles=int(rng.integers(lo, hi + 1)),
                      illustration_prob=0.3, seed=int(rng.integers(0, 2**31 - 1)))
        params.update(layout)
        out.append(generate_page(LayoutSpec(**params), page_id=f"page_{i:04d}"))
    return out
