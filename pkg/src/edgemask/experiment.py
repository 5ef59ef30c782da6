"""Segmentation runs and their evaluation: predictions, WER/AP reports, lambda sweeps.

A prediction is one instance on one page: a proposal box, a confidence
score and either an ``m x m`` RoI mask (pasted into the box) or an exact
list of rectangles (used for ground-truth and box-only baselines).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import (
    ZERO_COUNTS,
    APReport,
    WerReport,
    ap_suite,
    boundary_text_pair,
    error_counts,
)
from .raster import BinaryMask, Box, crop_resample, mask_iou, resample_mask, upsample_mask
from .synthcorpus import PageRecord, generate_corpus, oracle_ocr
from .toyseg import (
    ModelParams,
    TrainConfig,
    TrainReport,
    forward,
    jitter_proposals,
    roi_samples,
    train,
)

__all__ = [
    "Prediction",
    "EvalReport",
    "SweepConfig",
    "SweepRow",
    "SweepResult",
    "PREDICTIONS_FORMAT",
    "derive_seed",
    "dedupe_lambdas",
    "segment_pages",
    "box_predictions",
    "gt_predictions",
    "oracle_roi_predictions",
    "save_predictions",
    "load_predictions",
    "evaluate",
    "sweep_corpus",
    "run_sweep",
]

PREDICTIONS_FORMAT = "edgemask-predictions"
PREDICTIONS_VERSION = 1


def derive_seed(seed: int, tag: int) -> int:
    """An independent sub-seed for stream ``tag`` of a run seeded with ``seed``."""
    return int(np.random.default_rng([seed, tag]).integers(2**31 - 1))


@dataclass(frozen=True)
class Prediction:
    page_id: str
    box: Box
    score: float
    roi_mask: np.ndarray | None = None  # bool (m, m)
    rects: tuple[Box, ...] | None = None
    source: str | None = None  # id of the annotation the proposal came from

    def __post_init__(self):
        if (self.roi_mask is None) == (self.rects is None):
            raise ValueError("a prediction needs exactly one of roi_mask or rects")

    def page_mask(self, width: int, height: int) -> BinaryMask:
        if self.rects is not None:
            return BinaryMask.from_boxes(width, height, self.rects)
        return upsample_mask(BinaryMask(self.roi_mask), self.box, width, height)

    def to_dict(self) -> dict:
        out = {"box": self.box.as_list(), "score": self.score, "source": self.source}
        if self.rects is not None:
            out["rects"] = [r.as_list() for r in self.rects]
        else:
            out["roi_mask"] = ["".join("1" if v else "0" for v in row) for row in self.roi_mask]
        return out

    @classmethod
    def from_dict(cls, page_id: str, d: dict) -> "Prediction":
        roi = rects = None
        if "rects" in d:
            rects = tuple(Box(*r) for r in d["rects"])
        else:
            roi = np.array([[c == "1" for c in row] for row in d["roi_mask"]], dtype=bool)
        return cls(page_id, Box(*d["box"]), float(d["score"]), roi, rects, d.get("source"))


def segment_pages(params: ModelParams, pages: Sequence[PageRecord], cfg: TrainConfig,
                  jitter: int, seed: int) -> list[Prediction]:
    """Run the mask head on jittered ground-truth proposals of every article.

    The score of an instance is the mean probability over its foreground
    cells (0 when it has none).
    """
    out = []
    rng = np.random.default_rng(seed)
    for page in pages:
        arts = page.articles()
        props = jitter_proposals([a.bbox() for a in arts], jitter, int(rng.integers(2**31)),
                                 page.width, page.height)
        for art, box in zip(arts, props):
            pred = forward(params, crop_resample(page.grid, box, cfg.m), cfg.clamp_eps)
            fg = pred.probs > 0.5
            score = float(pred.probs[fg].mean()) if fg.any() else 0.0
            out.append(Prediction(page.page_id, box, score, roi_mask=fg, source=art.id))
    return out


def box_predictions(pages: Sequence[PageRecord], jitter: int, seed: int) -> list[Prediction]:
    """Box-only baseline: each jittered proposal taken as the instance region."""
    out = []
    rng = np.random.default_rng(seed)
    for page in pages:
        arts = page.articles()
        props = jitter_proposals([a.bbox() for a in arts], jitter, int(rng.integers(2**31)),
                                 page.width, page.height)
        out.extend(Prediction(page.page_id, box, 1.0, rects=(box,), source=a.id)
                   for a, box in zip(arts, props))
    return out


def oracle_roi_predictions(pages: Sequence[PageRecord], m: int, jitter: int,
                           seed: int) -> list[Prediction]:
    """The best any mask head can do on the given proposals: the ground-truth
    region resampled to ``m x m`` inside each proposal."""
    out = []
    rng = np.random.default_rng(seed)
    for page in pages:
        arts = page.articles()
        props = jitter_proposals([a.bbox() for a in arts], jitter, int(rng.integers(2**31)),
                                 page.width, page.height)
        for art, box in zip(arts, props):
            roi = resample_mask(page.region_mask(art.id), box, m).data
            out.append(Prediction(page.page_id, box, 1.0, roi_mask=roi, source=art.id))
    return out


def gt_predictions(pages: Sequence[PageRecord]) -> list[Prediction]:
    return [Prediction(p.page_id, a.bbox(), 1.0, rects=a.rects, source=a.id)
            for p in pages for a in p.articles()]


def save_predictions(path: str | Path, predictions: Sequence[Prediction], meta: dict | None = None) -> None:
    pages: dict[str, list] = {}
    for p in predictions:
        pages.setdefault(p.page_id, []).append(p.to_dict())
    doc = {"format": PREDICTIONS_FORMAT, "version": PREDICTIONS_VERSION, "meta": meta or {},
           "pages": pages}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_predictions(path: str | Path) -> list[Prediction]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed predictions file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != PREDICTIONS_FORMAT:
        raise ValueError(f"{path}: not a predictions file")
    if doc.get("version") != PREDICTIONS_VERSION:
        raise ValueError(f"{path}: unsupported predictions version {doc.get('version')!r}")
    return [Prediction.from_dict(pid, d) for pid, rows in sorted(doc["pages"].items()) for d in rows]


@dataclass
class EvalReport:
    wer: WerReport
    ap: APReport
    pages: int
    predictions: int
    k_eval: int
    mean_iou: float = 0.0

    def as_dict(self) -> dict:
        return {"wer": self.wer.as_dict(), "ap": self.ap.as_dict(), "pages": self.pages,
                "predictions": self.predictions, "k_eval": self.k_eval, "mean_iou": self.mean_iou}


def _match(gt_masks: list[BinaryMask], pred_masks: list[BinaryMask]) -> dict[int, int]:
    """One-to-one matching of ground truths to predictions by descending IoU > 0."""
    pairs = []
    for g, gm in enumerate(gt_masks):
        for p, pm in enumerate(pred_masks):
            v = mask_iou(gm, pm)
            if v > 0:
                pairs.append((-v, g, p))
    pairs.sort()
    out: dict[int, int] = {}
    used = set()
    for _, g, p in pairs:
        if g not in out and p not in used:
            out[g] = p
            used.add(p)
    return out


def evaluate(pages: Sequence[PageRecord], predictions: Sequence[Prediction],
             k_eval: int = 8) -> EvalReport:
    """Pooled WER/CER, boundary WER/CER and mask AP of ``predictions``.

    Every ground-truth article is paired with at most one prediction (the
    highest-IoU one).  An unpaired article counts all of its words as
    missing; an unpaired prediction counts its text as insertions.
    """
    by_page: dict[str, list[Prediction]] = {}
    for p in predictions:
        by_page.setdefault(p.page_id, []).append(p)
    known = {p.page_id for p in pages}
    unknown = sorted(set(by_page) - known)
    if unknown:
        raise ValueError(f"predictions refer to pages not in the corpus: {unknown[:5]}")

    overall, boundary = ZERO_COUNTS, ZERO_COUNTS
    ap_preds, ap_gts, p_img, g_img, ious = [], [], [], [], []
    for page in pages:
        arts = page.articles()
        gt_masks = [page.region_mask(a.id) for a in arts]
        preds = by_page.get(page.page_id, [])
        pred_masks = [p.page_mask(page.width, page.height) for p in preds]
        pairs = _match(gt_masks, pred_masks)
        for g, art in enumerate(arts):
            ref = " ".join(page.article_texts[art.id].tokens())
            if g in pairs:
                toks = oracle_ocr(page, pred_masks[pairs[g]])
                ious.append(mask_iou(gt_masks[g], pred_masks[pairs[g]]))
            else:
                toks = []
                ious.append(0.0)
            overall = overall + error_counts(ref, " ".join(t.text for t in toks))
            boundary = boundary + error_counts(*boundary_text_pair(page, gt_masks[g],
                                                                   ocr_tokens=toks, k_eval=k_eval))
        for p, pm in enumerate(pred_masks):
            if p not in pairs.values():
                overall = overall + error_counts("", " ".join(t.text for t in oracle_ocr(page, pm)))
        ap_gts += [(m, m.count()) for m in gt_masks]
        g_img += [page.page_id] * len(gt_masks)
        ap_preds += [(m, p.score) for m, p in zip(pred_masks, preds)]
        p_img += [page.page_id] * len(preds)
    ap = ap_suite(ap_preds, ap_gts, p_img, g_img)
    return EvalReport(WerReport.from_counts(overall, boundary), ap, len(pages), len(predictions),
                      k_eval, float(np.mean(ious)) if ious else 0.0)


@dataclass(frozen=True)
class SweepConfig:
    """Shared settings of a lambda sweep; every random stream derives from ``seed``."""

    train_pages: int = 100
    test_pages: int = 20
    jitter: int = 4
    m: int = 28
    k: int = 2
    iterations: int = 2000
    learning_rate: float = 0.5
    channels: int = 8
    k_eval: int = 8
    seed: int = 0

    def train_config(self, lam: float) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate, iterations=self.iterations, lam=lam,
                           k=self.k, m=self.m, proposal_jitter=self.jitter, seed=self.seed,
                           channels=self.channels)


@dataclass
class SweepRow:
    lam: float
    report: EvalReport
    train: TrainReport

    def as_dict(self) -> dict:
        w = self.report.wer
        return {"lambda": self.lam, "wer": w.wer, "cer": w.cer, "boundary_wer": w.boundary_wer,
                "boundary_cer": w.boundary_cer, "mean_iou": self.report.mean_iou,
                "ap": self.report.ap.as_dict(),
                "train": {"initial_mean_loss": self.train.initial_mean_loss,
                          "final_mean_loss": self.train.final_mean_loss,
                          "boundary_error_rate": self.train.boundary_error_rate,
                          "interior_error_rate": self.train.interior_error_rate}}


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list[SweepRow]
    baseline: EvalReport | None = None
    extras: dict = field(default_factory=dict)

    def row(self, lam: float) -> SweepRow:
        for r in self.rows:
            if r.lam == lam:
                return r
        raise KeyError(lam)

    def as_dict(self) -> dict:
        out = {"config": asdict(self.config), "rows": [r.as_dict() for r in self.rows]}
        if self.baseline is not None:
            out["box_only"] = _summary(self.baseline)
        for name, rep in self.extras.items():
            out[name] = _summary(rep)
        return out


def _summary(rep: EvalReport) -> dict:
    w = rep.wer
    return {"wer": w.wer, "cer": w.cer, "boundary_wer": w.boundary_wer,
            "boundary_cer": w.boundary_cer, "mean_iou": rep.mean_iou}


def dedupe_lambdas(lambdas: Sequence[float]) -> tuple[list[float], list[float]]:
    """Unique values in first-seen order, and the repeated values that were dropped."""
    seen, dupes = [], []
    for lam in lambdas:
        (dupes if lam in seen else seen).append(float(lam))
    return seen, dupes


def sweep_corpus(cfg: SweepConfig) -> tuple[list[PageRecord], list[PageRecord]]:
    """Seeded train/test pages for a sweep."""
    pages = generate_corpus(cfg.train_pages + cfg.test_pages, seed=cfg.seed)
    return pages[:cfg.train_pages], pages[cfg.train_pages:]


def run_sweep(train_pages: Sequence[PageRecord], test_pages: Sequence[PageRecord],
              lambdas: Sequence[float], cfg: SweepConfig, baseline: bool = True) -> SweepResult:
    """Train one mask head per lambda on the same RoIs and evaluate each on the same proposals.

    With ``baseline`` the result also carries the box-only reference and, in
    ``extras["oracle_roi"]``, the evaluation of ground-truth RoI masks on the
    same proposals (the ceiling for any mask head at this resolution).
    """
    lambdas, _ = dedupe_lambdas(lambdas)
    if not lambdas:
        raise ValueError("need at least one lambda")
    samples = roi_samples(train_pages, cfg.m, cfg.jitter, derive_seed(cfg.seed, 1))
    test_seed = derive_seed(cfg.seed, 2)
    rows = []
    for lam in lambdas:
        tcfg = cfg.train_config(lam)
        params, report = train(samples, tcfg)
        preds = segment_pages(params, test_pages, tcfg, cfg.jitter, test_seed)
        rows.append(SweepRow(lam, evaluate(test_pages, preds, cfg.k_eval), report))
    if not baseline:
        return SweepResult(cfg, rows)
    base = evaluate(test_pages, box_predictions(test_pages, cfg.jitter, test_seed), cfg.k_eval)
    oracle = evaluate(test_pages, oracle_roi_predictions(test_pages, cfg.m, cfg.jitter, test_seed),
                      cfg.k_eval)
    return SweepResult(cfg, rows, base, {"oracle_roi": oracle})
