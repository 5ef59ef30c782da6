"""Seeded synthetic newspaper pages with pixel-exact ground truth."""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

from ..raster import BinaryMask, Box, PixelGrid
from .font import CELL_H, CELL_W, render_text

CATEGORIES = ("article", "ad", "header", "headline", "illustration")
ROLES = ("headline", "body")

BODY_SCALE = 1
HEADLINE_SCALE = 2
BODY_PITCH = CELL_H * BODY_SCALE + 2          # 2 px leading between body lines
HEADLINE_PITCH = CELL_H * HEADLINE_SCALE + 4
PARAGRAPH_GAP = 4                             # extra space between paragraphs
HEADLINE_GAP = 12                             # headline bottom to first body line
ILLUSTRATION_GAP = 6
ILLUSTRATION_INK = 150

MASTHEADS = (
    "THE DAILY LEDGER", "MORNING HERALD", "CITY GAZETTE", "EVENING TRIBUNE",
    "THE WEEKLY CHRONICLE", "VALLEY COURIER", "NORTHERN EXPRESS",
)

VOCABULARY = (
    "THE", "CITY", "COUNCIL", "VOTED", "TO", "APPROVE", "NEW", "BUDGET", "FOR", "SCHOOLS",
    "AND", "ROADS", "MAYOR", "SAID", "PLAN", "WOULD", "BRING", "JOBS", "LOCAL", "FAMILIES",
    "STATE", "OFFICIALS", "REPORTED", "RAIN", "FLOOD", "WARNING", "RIVER", "BANKS", "WATER",
    "LEVEL", "ROSE", "OVERNIGHT", "RESIDENTS", "MOVED", "HIGHER", "GROUND", "POLICE", "FIRE",
    "CREWS", "WORKED", "THROUGH", "NIGHT", "MARKET", "PRICES", "FELL", "AFTER", "TRADE",
    "TALKS", "STALLED", "BANK", "RATES", "STEADY", "FARMERS", "HARVEST", "WHEAT", "CORN",
    "SEASON", "BEGAN", "EARLY", "THIS", "YEAR", "TEAM", "WON", "FINAL", "MATCH", "LATE",
    "GOAL", "CROWD", "CHEERED", "STADIUM", "COACH", "PLAYERS", "TRAINED", "HARD", "WEEK",
    "HOSPITAL", "OPENS", "WING", "DOCTORS", "NURSES", "PATIENTS", "CARE", "HEALTH", "CLINIC",
    "STUDENTS", "EXAMS", "RESULTS", "TEACHERS", "UNION", "PAY", "DEAL", "REACHED", "MONDAY",
    "TUESDAY", "FRIDAY", "SUNDAY", "MORNING", "EVENING", "BRIDGE", "REPAIRS", "TRAFFIC",
    "DELAYS", "EXPECTED", "UNTIL", "JUNE", "MARCH", "COURT", "RULED", "CASE", "JUDGE",
    "LAWYERS", "APPEAL", "FILED", "MUSEUM", "SHOW", "ART", "PAINTINGS", "VISITORS", "LINE",
    "STREETS", "FESTIVAL", "MUSIC", "FOOD", "STALLS", "PARK", "TREES", "PLANTED", "VOLUNTEERS",
    "ELECTION", "CANDIDATES", "DEBATE", "TAXES", "HOUSING", "RENTS", "TENANTS", "BUILDERS",
    "PERMITS", "AIRPORT", "FLIGHTS", "CANCELLED", "STORM", "WINDS", "POWER", "RESTORED",
    "HOMES", "LIBRARY", "BOOKS", "READERS", "CHILDREN", "SCIENCE", "PRIZE", "AWARDED",
    "RESEARCH", "ENERGY", "SOLAR", "PANELS", "ROOFTOPS", "FACTORY", "WORKERS", "SHIFT",
    "OUTPUT", "EXPORTS", "GREW", "PERCENT", "MILLION", "DOLLARS", "SPENT", "ON", "IN", "OF",
    "AT", "BY", "WITH", "FROM", "OVER", "UNDER", "NEAR", "ABOUT", "MORE", "LESS", "MOST",
    "SOME", "MANY", "FEW", "ALL", "EACH", "OTHER", "FIRST", "LAST", "NEXT", "SINCE",
    "WHILE", "BEFORE", "DURING", "AGAIN", "STILL", "ALSO", "ONLY", "VERY", "WELL", "GOOD",
)
NUMBERS = ("12", "15", "20", "30", "45", "100", "250", "2021", "2022", "2023", "1999", "88")
HEADLINE_WORDS = tuple(w for w in VOCABULARY if 3 <= len(w) <= 8)
AD_LINES = ("SALE", "BUY NOW", "OPEN DAILY", "CALL 555", "NEW CARS", "HALF OFF", "BIG DEALS")


@dataclass(frozen=True)
class WordBox:
    text: str
    box: Box
    font_scale: int
    article_id: str
    role: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("word text must be non-empty")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        w = CELL_W * self.font_scale * len(self.text)
        h = CELL_H * self.font_scale
        if (self.box.width, self.box.height) != (w, h):
            raise ValueError(f"word box {self.box} does not match cell metric {w}x{h} for {self.text!r}")


@dataclass(frozen=True)
class ElementAnnotation:
    """A labelled page element; the region is a union of rectangles."""

    category: str
    rects: tuple[Box, ...]
    id: str
    parent: str | None = None

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if not self.rects:
            raise ValueError("element region is empty")
        object.__setattr__(self, "rects", tuple(self.rects))

    def bbox(self) -> Box:
        return Box.bounding(self.rects)

    def mask(self, width: int, height: int) -> BinaryMask:
        return BinaryMask.from_boxes(width, height, self.rects)

    @property
    def area(self) -> int:
        return sum(r.area for r in self.rects)  # rects never overlap


@dataclass(frozen=True)
class ArticleText:
    headline: str
    body: str  # paragraphs separated by "\n"

    def tokens(self) -> list[str]:
        return self.headline.split() + self.body.split()


@dataclass(frozen=True)
class PageRecord:
    grid: PixelGrid
    annotations: tuple[ElementAnnotation, ...]
    words: tuple[WordBox, ...]
    article_texts: dict[str, ArticleText]
    masthead: str
    date: str
    seed: int
    page_id: str = "page"

    __hash__ = None

    @property
    def width(self) -> int:
        return self.grid.width

    @property
    def height(self) -> int:
        return self.grid.height

    def articles(self) -> list[ElementAnnotation]:
        """Article annotations in layout (reading) order."""
        return [a for a in self.annotations if a.category == "article"]

    def element(self, element_id: str) -> ElementAnnotation:
        for a in self.annotations:
            if a.id == element_id:
                return a
        raise KeyError(element_id)

    def children(self, article_id: str, category: str) -> list[ElementAnnotation]:
        return [a for a in self.annotations if a.parent == article_id and a.category == category]

    def region_mask(self, element_id: str) -> BinaryMask:
        return self.element(element_id).mask(self.width, self.height)

    def article_words(self, article_id: str, role: str | None = None) -> list[WordBox]:
        return [w for w in self.words
                if w.article_id == article_id and (role is None or w.role == role)]


@dataclass(frozen=True)
class LayoutSpec:
    """Layout parameters of one generated page."""

    columns: int = 3
    articles: int = 6
    illustration_prob: float = 0.3
    seed: int = 0
    width: int = 720
    height: int = 960
    margin: int = 16
    column_gutter: int = 8
    article_gap: int = 2
    pad: int = 2
    span2_prob: float = 0.35

    def __post_init__(self):
        if not 2 <= self.columns <= 5:
            raise ValueError(f"columns must be in 2..5, got {self.columns}")
        if not 3 <= self.articles <= 12:
            raise ValueError(f"articles must be in 3..12, got {self.articles}")
        if not 0.0 <= self.illustration_prob <= 1.0:
            raise ValueError("illustration_prob must be a probability")


class InfeasibleLayout(ValueError):
    pass


@dataclass
class _Article:
    col: int
    span: int
    y0: int
    rects: list[Box] = field(default_factory=list)
    headline: list[WordBox] = field(default_factory=list)
    body: list[WordBox] = field(default_factory=list)
    paragraphs: list[str] = field(default_factory=list)
    illustration: Box | None = None


def _word_width(word: str, scale: int) -> int:
    return CELL_W * scale * len(word)


def _flow(words: list[str], text_width: int, scale: int) -> list[list[str]]:
    """Greedy line filling with one space cell between words."""
    space = CELL_W * scale
    lines: list[list[str]] = []
    cur: list[str] = []
    used = 0
    for w in words:
        ww = _word_width(w, scale)
        if cur and used + space + ww > text_width:
            lines.append(cur)
            cur, used = [], 0
        used = ww if not cur else used + space + ww
        cur.append(w)
    if cur:
        lines.append(cur)
    return lines


def _place_line(line: list[str], x0: int, y: int, text_width: int, scale: int,
                justify: bool) -> list[tuple[str, Box]]:
    widths = [_word_width(w, scale) for w in line]
    gaps = len(line) - 1
    space = CELL_W * scale
    extra = text_width - sum(widths) - space * gaps if justify and gaps else 0
    out = []
    x = x0
    for i, (w, ww) in enumerate(zip(line, widths)):
        out.append((w, Box(x, y, x + ww, y + CELL_H * scale)))
        if i < gaps:
            x += ww + space + extra // gaps + (1 if i < extra % gaps else 0)
    return out


class _Writer:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def word(self) -> str:
        if self.rng.random() < 0.06:
            return str(self.rng.choice(NUMBERS))
        w = str(self.rng.choice(VOCABULARY))
        if self.rng.random() < 0.05:
            w += ","
        return w

    def headline(self) -> list[str]:
        n = int(self.rng.integers(2, 5))
        return [str(w) for w in self.rng.choice(HEADLINE_WORDS, size=n)]

    def paragraph(self, max_lines: int, text_width: int) -> list[list[str]]:
        """Words filling between 1 and ``max_lines`` body lines."""
        target = int(self.rng.integers(2, 7))
        target = max(1, min(target, max_lines))
        words: list[str] = []
        while True:
            cand = words + [self.word()]
            if len(_flow(cand, text_width, BODY_SCALE)) > target:
                break
            words = cand
        if not words[-1].endswith((".", ",")):
            words[-1] += "."
        elif words[-1].endswith(","):
            words[-1] = words[-1][:-1] + "."
        lines = _flow(words, text_width, BODY_SCALE)
        if len(lines) > target:  # the appended period overflowed
            words[-1] = words[-1][:-1]
            lines = _flow(words, text_width, BODY_SCALE)
        return lines


def _lines_fitting(height: int) -> int:
    """Body lines whose cells fit in ``height`` pixels."""
    if height < CELL_H:
        return 0
    return (height - CELL_H) // BODY_PITCH + 1


LAYOUT_ATTEMPTS = 8


def generate_page(spec: LayoutSpec, page_id: str = "page") -> PageRecord:
    """Render one page.

    Layouts are drawn from the seed; when a draw cannot fit the requested
    number of articles, further draws from the same seed are tried before
    giving up with :class:`InfeasibleLayout`.
    """
    for attempt in range(LAYOUT_ATTEMPTS):
        try:
            return _generate(spec, page_id, np.random.default_rng([spec.seed, attempt]))
        except InfeasibleLayout as exc:
            error = exc
    raise error


def _generate(spec: LayoutSpec, page_id: str, rng: np.random.Generator) -> PageRecord:
    writer = _Writer(rng)
    W, H, pad = spec.width, spec.height, spec.pad
    canvas = np.full((H, W), 255, dtype=np.uint8)
    annotations: list[ElementAnnotation] = []

    # masthead strip
    masthead = str(rng.choice(MASTHEADS))
    day = _dt.date(2019, 1, 1) + _dt.timedelta(days=int(rng.integers(0, 5 * 365)))
    date = day.isoformat()
    date_text = f"{day.strftime('%B').upper()} {day.day}, {day.year}"
    x_left, x_right = spec.margin, W - spec.margin
    y = spec.margin
    mast_w, _ = _word_width(masthead, 3), 0
    if mast_w > x_right - x_left - 2 * pad:
        raise InfeasibleLayout("page too narrow for masthead")
    render_text(canvas, masthead, (W - mast_w) // 2, y + pad, 3)
    date_y = y + pad + CELL_H * 3 + 2
    render_text(canvas, date_text, x_left + pad, date_y, 1)
    rule_y = date_y + CELL_H + 2
    canvas[rule_y:rule_y + 2, x_left:x_right] = 0
    header = Box(x_left, y, x_right, rule_y + 2)
    annotations.append(ElementAnnotation("header", (header,), "header"))

    n_cols = spec.columns
    gutter = spec.column_gutter
    col_w = (x_right - x_left - (n_cols - 1) * gutter) // n_cols
    col_x = [x_left + c * (col_w + gutter) for c in range(n_cols)]
    text_w = col_w - 2 * pad
    if text_w < _word_width("OVERNIGHT", HEADLINE_SCALE):
        raise InfeasibleLayout("columns too narrow for headline type")
    content_top = header.y1 + 6
    bottoms = [H - spec.margin] * n_cols

    # one or two ads anchored at the bottom of the page
    n_ads = 1 + int(rng.random() < 0.3)
    ad_cols = rng.permutation(n_cols)[:n_ads]
    ads = []
    for i, c in enumerate(sorted(int(c) for c in ad_cols)):
        ad_h = int(rng.integers(60, 121))
        box = Box(col_x[c], bottoms[c] - ad_h, col_x[c] + col_w, bottoms[c])
        canvas[box.slices()] = 0
        canvas[box.y0 + 2:box.y1 - 2, box.x0 + 2:box.x1 - 2] = 255
        line = str(rng.choice(AD_LINES))
        lw = _word_width(line, 2)
        render_text(canvas, line, box.x0 + max(4, (box.width - lw) // 2),
                    box.y0 + (box.height - CELL_H * 2) // 2, 2)
        ads.append(ElementAnnotation("ad", (box,), f"ad{i}"))
        bottoms[c] = box.y0 - spec.article_gap

    tops = [content_top] * n_cols
    min_height = 2 * pad + HEADLINE_PITCH * 2 + HEADLINE_GAP + BODY_PITCH * 3
    placed: list[_Article] = []
    for i in range(spec.articles):
        remaining = spec.articles - i
        free = [bottoms[c] - tops[c] for c in range(n_cols)]
        col = min(range(n_cols), key=lambda c: (tops[c], c) if free[c] >= min_height else (10**9, c))
        if free[col] < min_height:
            raise InfeasibleLayout(
                f"cannot fit {spec.articles} articles on a {n_cols}-column {W}x{H} page")
        capacity = sum(max(0, f) for f in free)
        span = 1
        if (col + 1 < n_cols and tops[col + 1] == tops[col] and free[col + 1] >= min_height
                and remaining >= 2 and rng.random() < spec.span2_prob):
            span = 2
        # a two-column article uses two slots of the per-article budget
        share = capacity / (remaining + span - 1)
        target = int(share * rng.uniform(0.75, 1.25))
        used = range(col, col + span)
        others = sum(max(0, free[c]) for c in range(n_cols) if c not in used)
        reserve = max(0, (remaining - 1) * min_height - others)
        limit = min(free[c] for c in used) - reserve // span
        target = max(min_height, min(target, limit))
        art = _layout_article(canvas, writer, rng, spec, col_x, col_w, col, span, tops[col], target,
                              {c: bottoms[c] for c in range(n_cols)})
        placed.append(art)
        for c, bottom in _column_bottoms(art, col_x, col_w).items():
            tops[c] = bottom + spec.article_gap

    placed.sort(key=lambda a: (a.col, a.y0))
    words: list[WordBox] = []
    texts: dict[str, ArticleText] = {}
    for idx, art in enumerate(placed):
        aid = f"a{idx}"
        annotations.append(ElementAnnotation("article", tuple(art.rects), aid))
        head_box = Box.bounding(w.box for w in art.headline)
        annotations.append(ElementAnnotation("headline", (head_box,), f"{aid}.headline", aid))
        if art.illustration is not None:
            annotations.append(ElementAnnotation("illustration", (art.illustration,),
                                                 f"{aid}.illustration", aid))
        for w in art.headline + art.body:
            words.append(WordBox(w.text, w.box, w.font_scale, aid, w.role))
        texts[aid] = ArticleText(" ".join(w.text for w in art.headline), "\n".join(art.paragraphs))
    annotations.extend(ads)

    return PageRecord(PixelGrid(canvas), tuple(annotations), tuple(words), texts,
                      masthead, date, spec.seed, page_id)


def _column_bottoms(art: _Article, col_x: list[int], col_w: int) -> dict[int, int]:
    out = {}
    for c in range(art.col, art.col + art.span):
        out[c] = max(r.y1 for r in art.rects if r.x0 <= col_x[c] < r.x1)
    return out


def _layout_article(canvas, writer: _Writer, rng, spec: LayoutSpec, col_x, col_w, col, span,
                    y0, target, bottoms) -> _Article:
    pad = spec.pad
    art = _Article(col=col, span=span, y0=y0)
    x0 = col_x[col]
    x1 = col_x[col + span - 1] + col_w
    text_w = col_w - 2 * pad
    span_text_w = x1 - x0 - 2 * pad

    # headline, wrapped to the article width
    head_lines = _flow(writer.headline(), span_text_w, HEADLINE_SCALE)[:2]
    y = y0 + pad
    for line in head_lines:
        for w, box in _place_line(line, x0 + pad, y, span_text_w, HEADLINE_SCALE, justify=False):
            art.headline.append(WordBox(w, box, HEADLINE_SCALE, "", "headline"))
        y += HEADLINE_PITCH
    y = y - HEADLINE_PITCH + CELL_H * HEADLINE_SCALE + HEADLINE_GAP
    body_top = y

    col_tops = {c: body_top for c in range(col, col + span)}
    if rng.random() < spec.illustration_prob:
        ill_h = int(rng.integers(36, 71))
        if body_top + ill_h + ILLUSTRATION_GAP + 3 * BODY_PITCH + pad <= min(y0 + target, bottoms[col]):
            box = Box(x0 + pad, body_top, x0 + pad + text_w, body_top + ill_h)
            canvas[box.slices()] = ILLUSTRATION_INK
            art.illustration = box
            col_tops[col] = body_top + ill_h + ILLUSTRATION_GAP

    col_ends = {}
    for c in range(col, col + span):
        limit = y0 + target if span == 1 else y0 + int(target * rng.uniform(0.8, 1.0))
        limit = min(max(limit, col_tops[c] + CELL_H + pad), bottoms[c])
        yc = col_tops[c]
        n_para = 0
        while True:
            avail = _lines_fitting(limit - pad - yc)
            if avail < 1 or (n_para and avail < 2):
                break
            lines = writer.paragraph(avail, text_w)
            for li, line in enumerate(lines):
                last = li == len(lines) - 1
                for w, box in _place_line(line, col_x[c] + pad, yc, text_w, BODY_SCALE, justify=not last):
                    art.body.append(WordBox(w, box, BODY_SCALE, "", "body"))
                yc += BODY_PITCH
            art.paragraphs.append(" ".join(w for line in lines for w in line))
            n_para += 1
            yc += PARAGRAPH_GAP
        if n_para == 0:
            raise InfeasibleLayout("article column too short for any body text")
        col_ends[c] = yc - PARAGRAPH_GAP - BODY_PITCH + CELL_H * BODY_SCALE + pad

    for w in art.headline + art.body:
        render_text(canvas, w.text, w.box.x0, w.box.y0, w.font_scale)

    if span == 1:
        art.rects = [Box(x0, y0, x1, col_ends[col])]
    else:
        left, right = col_ends[col], col_ends[col + 1]
        short = min(left, right)
        art.rects = [Box(x0, y0, x1, short)]
        if left > short:
            art.rects.append(Box(x0, short, x0 + col_w, left))
        elif right > short:
            art.rects.append(Box(col_x[col + 1], short, x1, right))
    return art
