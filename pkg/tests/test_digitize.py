from html.parser import HTMLParser

import numpy as np
import pytest

from edgemask.digitize import (
    EMPTY_ARTICLE,
    EMPTY_HEADLINE,
    TEMPLATE_VERSION,
    ArticleDoc,
    DigitizeConfig,
    NewsDoc,
    assemble,
    detect_solid_blocks,
    digitize_page,
    emit,
    extract_article,
)
from edgemask.raster import BinaryMask, Box, PixelGrid
from edgemask.reading import paragraphs, reading_order
from edgemask.synthcorpus import LayoutSpec, generate_corpus, generate_page

GT = DigitizeConfig(illustrations="annotations")


def gt_instances(page):
    return [(a.id, page.region_mask(a.id)) for a in page.articles()]


class Outline(HTMLParser):
    """Collects nav anchors, section ids, h2 texts and paragraph texts."""

    def __init__(self):
        super().__init__()
        self.stack, self.hrefs, self.ids, self.h2, self.paras, self.tags = [], [], [], [], [], []

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        self.tags.append(tag)
        if tag == "a" and "nav" in self.stack:
            self.hrefs.append(attrs["href"])
        if "id" in attrs:
            self.ids.append(attrs["id"])
        self.stack.append(tag)
        if tag in ("h2", "p"):
            self._buf = []

    def handle_endtag(self, tag):
        self.stack.pop()
        if tag == "h2" and "main" in self.stack:
            self.h2.append("".join(self._buf))
        if tag == "p" and "section" in self.stack:
            self.paras.append("".join(self._buf))

    def handle_data(self, data):
        if self.stack and self.stack[-1] in ("h2", "p"):
            self._buf.append(data)


def test_ground_truth_masks_reproduce_article_text(small_corpus):
    for page in small_corpus:
        for aid, mask in gt_instances(page):
            doc = extract_article(page, mask, GT, aid)
            truth = page.article_texts[aid]
            assert doc.headline == truth.headline
            assert doc.body == tuple(truth.body.split("\n"))
            assert not doc.flags


def test_detected_illustrations_match_annotations_on_clean_pages(small_corpus):
    for page in small_corpus:
        for aid, mask in gt_instances(page):
            assert extract_article(page, mask, DigitizeConfig(), aid).body == \
                extract_article(page, mask, GT, aid).body


def test_instance_without_headline_band(small_corpus):
    page = small_corpus[1]
    for art in page.articles():
        head = page.article_words(art.id, "headline")
        cut = max(w.box.y1 for w in head)
        data = page.region_mask(art.id).data.copy()
        data[:cut] = False
        doc = extract_article(page, BinaryMask(data), GT, art.id)
        assert doc.headline == "" and EMPTY_HEADLINE in doc.flags
        assert doc.body == tuple(page.article_texts[art.id].body.split("\n"))


def test_empty_instance(small_corpus):
    page = small_corpus[0]
    doc = extract_article(page, BinaryMask.empty(page.width, page.height), GT, "x")
    assert doc.empty and EMPTY_HEADLINE in doc.flags and doc.body == () and doc.headline == ""
    with pytest.raises(ValueError):
        extract_article(page, BinaryMask.empty(3, 3), GT)


def test_assemble_small_cases():
    one = ArticleDoc("a", "TITLE", ("BODY TEXT",))
    doc = assemble("GAZETTE", "2021-01-02", [one])
    assert doc.toc() == ["TITLE"]
    empty = assemble("GAZETTE", "2021-01-02", [])
    assert (empty.masthead, empty.date, empty.articles) == ("GAZETTE", "2021-01-02", ())
    html = emit(empty, "html")
    assert "GAZETTE" in html and "<section" not in html


def test_assemble_orders_by_page_then_columns():
    arts = [ArticleDoc("p1", "", ("X",), page_index=1, anchor=(0, 0)),
            ArticleDoc("right", "", ("X",), anchor=(300, 20)),
            ArticleDoc("left-low", "", ("X",), anchor=(10, 400)),
            ArticleDoc("left-top", "", ("X",), anchor=(16, 30))]
    doc = assemble("M", "2020-01-01", arts)
    assert [a.id for a in doc.articles] == ["left-top", "left-low", "right", "p1"]
    assert [a.order_index for a in doc.articles] == [0, 1, 2, 3]
    assert doc.toc()[0] == "[Untitled article 1]"


def test_toc_follows_layout_order():
    page = generate_page(LayoutSpec(columns=3, articles=6, seed=21))
    docs = digitize_page(page, gt_instances(page)[::-1], GT)
    news = assemble(page.masthead, page.date, docs)
    assert [a.id for a in news.articles] == [a.id for a in page.articles()]
    assert news.toc() == [page.article_texts[a.id].headline for a in page.articles()]


def test_emit_html_structure_and_text(small_corpus):
    page = small_corpus[2]
    doc = assemble(page.masthead, page.date, digitize_page(page, gt_instances(page), GT))
    out = emit(doc, "html")
    assert out == emit(doc, "html")
    assert out.startswith("<!DOCTYPE html>") and '<html lang="en">' in out
    assert f"template v{TEMPLATE_VERSION}" in out
    parser = Outline()
    parser.feed(out)
    assert "script" not in parser.tags
    assert {"header", "nav", "main", "section", "h1"} <= set(parser.tags)
    n = len(doc.articles)
    assert len(parser.hrefs) == n == len(parser.h2)
    for href in parser.hrefs:
        assert parser.ids.count(href[1:]) == 1
    assert parser.paras == [p for a in doc.articles for p in a.body]


def test_emit_escapes_and_markdown():
    doc = assemble("A & B", "2020-02-02", [ArticleDoc("a", "<X>", ("1 < 2",)),
                                            ArticleDoc("b", "", ("TEXT",), anchor=(500, 0),
                                                       flags=frozenset({EMPTY_HEADLINE}))])
    html = emit(doc, "html")
    assert "&lt;X&gt;" in html and "1 &lt; 2" in html and "A &amp; B" in html
    md = emit(doc, "md")
    assert md == emit(doc, "markdown")
    assert md.count("](#article-") == 2
    assert "## [Untitled article 2]" in md and "\n1 < 2\n" in md
    with pytest.raises(ValueError):
        emit(doc, "pdf")


def test_reading_order_examples():
    assert reading_order([]) == []
    words = [("C", Box(0, 20, 12, 28)), ("B", Box(20, 0, 32, 8)), ("A", Box(0, 0, 12, 8))]
    assert reading_order(words) == ["A", "B", "C"]
    # two columns: the left column is read before the right one
    cols = [("R1", Box(100, 0, 112, 8)), ("L2", Box(0, 10, 12, 18)), ("L1", Box(0, 0, 12, 8)),
            ("R2", Box(100, 10, 112, 18))]
    assert reading_order(cols) == ["L1", "L2", "R1", "R2"]
    assert paragraphs([("A", Box(0, 0, 12, 8)), ("B", Box(0, 10, 12, 18)),
                       ("C", Box(0, 40, 12, 48))]) == [["A", "B"], ["C"]]


def _multi_column(words):
    """Generator order jumps back up the page when a new column starts."""
    return any(b.box.y0 < a.box.y0 - 8 and b.box.x0 > a.box.x0 for a, b in zip(words, words[1:]))


def test_reading_order_recovers_multi_column_articles():
    seen = 0
    for page in generate_corpus(80, seed=8, span2_prob=0.9):
        for art in page.articles():
            body = page.article_words(art.id, "body")
            if not _multi_column(body):
                continue
            seen += 1
            shuffled = [body[i] for i in np.random.default_rng(seen).permutation(len(body))]
            assert reading_order(shuffled) == [w.text for w in body]
    assert seen >= 100


def test_detect_solid_blocks():
    data = np.full((120, 120), 255, np.uint8)
    data[10:50, 10:60] = 150                 # 50 x 40 block
    data[70:90, 70:90] = 150                 # too small
    data[60:110, 0:40] = 0                   # black is text ink, ignored
    data[60:100, 60:65] = 90
    data[95:100, 60:100] = 90                # L-shape, not a rectangle
    assert detect_solid_blocks(PixelGrid(data)) == [Box(10, 10, 60, 50)]


def test_detect_solid_blocks_finds_illustrations(small_corpus):
    for page in small_corpus:
        want = sorted(r for a in page.annotations if a.category == "illustration" for r in a.rects)
        assert detect_solid_blocks(page.grid) == want


def test_digitize_config_validation():
    with pytest.raises(ValueError):
        DigitizeConfig(illustrations="magic")
    assert isinstance(NewsDoc("M", "D").articles, tuple)
