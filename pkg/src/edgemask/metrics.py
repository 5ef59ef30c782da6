"""Text and detection metrics: edit distance, WER/CER, boundary-text error, AP."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from rapidfuzz.distance import Levenshtein

from .raster import BinaryMask, Box, iou, mask_iou, window_counts
from .reading import order_words

__all__ = [
    "edit_distance",
    "ErrorCounts",
    "error_counts",
    "wer_cer",
    "WerReport",
    "boundary_text_pair",
    "page_band",
    "APReport",
    "ap_suite",
    "interpolated_ap",
    "IOU_THRESHOLDS",
    "MEDIUM_AREA",
    "LARGE_AREA",
]

IOU_THRESHOLDS = tuple(np.round(np.arange(0.50, 0.951, 0.05), 2))
RECALL_POINTS = np.linspace(0.0, 1.0, 101)
MEDIUM_AREA = (32 ** 2, 96 ** 2)
LARGE_AREA = (96 ** 2, float("inf"))


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance (unit-cost insert, delete, substitute).

    Works on strings or on any sequences of hashable items (e.g. word lists).
    """
    return Levenshtein.distance(a, b)


def _norm(text: str) -> str:
    return " ".join(text.split())


class ErrorCounts(NamedTuple):
    word_errors: int
    ref_words: int
    char_errors: int
    ref_chars: int

    def __add__(self, other):
        return ErrorCounts(*(a + b for a, b in zip(self, other)))

    @property
    def degenerate(self) -> bool:
        """Reference is empty but the hypothesis is not."""
        return self.ref_words == 0 and self.word_errors > 0

    @property
    def wer(self) -> float:
        return self.word_errors / max(self.ref_words, 1)

    @property
    def cer(self) -> float:
        return self.char_errors / max(self.ref_chars, 1)


ZERO_COUNTS = ErrorCounts(0, 0, 0, 0)


def error_counts(reference: str, hypothesis: str) -> ErrorCounts:
    ref, hyp = _norm(reference), _norm(hypothesis)
    return ErrorCounts(edit_distance(ref.split(), hyp.split()), len(ref.split()),
                       edit_distance(ref, hyp), len(ref))


def wer_cer(reference: str, hypothesis: str) -> tuple[float, float]:
    """Word and character error rates.

    Words are whitespace tokens; characters include single spaces between
    words.  An empty reference scores the hypothesis length (divided by 1).
    """
    c = error_counts(reference, hypothesis)
    return c.wer, c.cer


@dataclass
class WerReport:
    wer: float
    cer: float
    boundary_wer: float
    boundary_cer: float
    counts: ErrorCounts = ZERO_COUNTS
    boundary_counts: ErrorCounts = ZERO_COUNTS

    @classmethod
    def from_counts(cls, overall: ErrorCounts, boundary: ErrorCounts) -> "WerReport":
        return cls(overall.wer, overall.cer, boundary.wer, boundary.cer, overall, boundary)

    def as_dict(self) -> dict:
        return {
            "wer": self.wer, "cer": self.cer,
            "boundary_wer": self.boundary_wer, "boundary_cer": self.boundary_cer,
            "counts": self.counts._asdict(), "boundary_counts": self.boundary_counts._asdict(),
        }


def _band_window(region: BinaryMask, k: int) -> tuple[Box, np.ndarray] | None:
    """Band of ``region`` inside a crop window that covers all of it."""
    if k < 1:
        raise ValueError("k must be >= 1")
    bbox = region.bbox()
    if bbox is None:
        return None
    # the crop keeps at least one false pixel beyond the region on every side
    # that is not a page edge, so clipping to it never changes membership
    win = bbox.dilate(k + 1, region.width, region.height)
    counts, sizes = window_counts(region.data[win.slices()], k)
    return win, (counts > 0) & (counts < sizes)


def page_band(region: BinaryMask, k: int) -> BinaryMask:
    """Two-sided boundary band of a page-sized mask (clipped windows of radius k)."""
    out = np.zeros_like(region.data)
    found = _band_window(region, k)
    if found is not None:
        win, band = found
        out[win.slices()] = band
    return BinaryMask(out)


def _sat(arr: np.ndarray) -> np.ndarray:
    sat = np.zeros((arr.shape[0] + 1, arr.shape[1] + 1), dtype=np.int64)
    sat[1:, 1:] = arr.astype(np.int64).cumsum(0).cumsum(1)
    return sat


def _box_sum(sat: np.ndarray, box: Box, win: Box) -> int:
    """Sum of the window-local table ``sat`` over ``box`` clipped to ``win``."""
    x0, x1 = (min(max(v - win.x0, 0), win.width) for v in (box.x0, box.x1))
    y0, y1 = (min(max(v - win.y0, 0), win.height) for v in (box.y0, box.y1))
    return int(sat[y1, x1] - sat[y0, x1] - sat[y1, x0] + sat[y0, x0])


def boundary_text_pair(page, gt_region: BinaryMask, predicted: BinaryMask | None = None,
                       ocr_tokens=None, k_eval: int = 8) -> tuple[str, str]:
    """Reference and hypothesis text restricted to the boundary band of ``gt_region``.

    The reference holds the ground-truth words lying inside ``gt_region``
    whose boxes touch the band; the hypothesis holds the OCR tokens (read
    through ``predicted`` when ``ocr_tokens`` is not given) whose boxes touch
    it.  Both are in reading order.
    """
    if ocr_tokens is None:
        from .synthcorpus.ocr import oracle_ocr

        if predicted is None:
            raise ValueError("need either a predicted mask or OCR tokens")
        ocr_tokens = oracle_ocr(page, predicted)
    found = _band_window(gt_region, k_eval)
    if found is None:
        return "", ""
    win, band_arr = found
    band = _sat(band_arr)
    inside = _sat(gt_region.data[win.slices()])
    ref = [(w.text, w.box) for w in page.words
           if w.box.intersection_area(win) == w.box.area
           and _box_sum(inside, w.box, win) == w.box.area and _box_sum(band, w.box, win) > 0]
    hyp = [(t[0], t[1]) for t in ocr_tokens
           if t[1].intersection_area(win) > 0 and _box_sum(band, t[1], win) > 0]
    return (" ".join(t for t, _ in order_words(ref)), " ".join(t for t, _ in order_words(hyp)))


@dataclass
class APReport:
    ap: float
    ap50: float
    ap75: float
    ap_m: float
    ap_l: float
    per_threshold: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)

    def as_dict(self, with_curves: bool = False) -> dict:
        out = {"ap": self.ap, "ap50": self.ap50, "ap75": self.ap75, "ap_m": self.ap_m,
               "ap_l": self.ap_l, "per_threshold": {f"{k:.2f}": v for k, v in self.per_threshold.items()}}
        if with_curves:
            out["curves"] = {f"{k:.2f}": v for k, v in self.curves.items()}
        return out


def _region_iou(a, b) -> float:
    if isinstance(a, Box) and isinstance(b, Box):
        return iou(a, b)
    if isinstance(a, BinaryMask) and isinstance(b, BinaryMask):
        return mask_iou(a, b)
    raise TypeError("predictions and ground truths must both be boxes or both be masks")


def _region_area(r) -> int:
    return r.area if isinstance(r, Box) else r.count()


def interpolated_ap(tp: np.ndarray, n_gt: int) -> tuple[float, np.ndarray, np.ndarray]:
    """101-point interpolated AP from TP flags listed in descending score order."""
    tp = np.asarray(tp, dtype=bool)
    if n_gt == 0 or tp.size == 0:
        return 0.0, np.zeros(0), np.zeros(0)
    ctp = np.cumsum(tp)
    cfp = np.cumsum(~tp)
    recall = ctp / n_gt
    precision = ctp / (ctp + cfp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    # the tolerance keeps float noise in the recall grid from skipping a point
    idx = np.searchsorted(recall, RECALL_POINTS - 1e-12, side="left")
    sampled = np.where(idx < recall.size, envelope[np.minimum(idx, recall.size - 1)], 0.0)
    return float(sampled.mean()), recall, precision


def _match(ious: np.ndarray, order: np.ndarray, thr: float, gt_ignore: np.ndarray,
           pred_out_of_range: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Greedy score-ordered matching; returns (tp, ignored) flags in ``order``."""
    n_gt = ious.shape[1]
    taken = np.zeros(n_gt, dtype=bool)
    # prefer ground truths inside the area range over ignored ones
    gt_rank = np.argsort(gt_ignore, kind="stable")
    tp = np.zeros(order.size, dtype=bool)
    ignored = np.zeros(order.size, dtype=bool)
    for r, p in enumerate(order):
        best, best_iou = -1, thr
        for g in gt_rank:
            if taken[g]:
                continue
            if best >= 0 and not gt_ignore[best] and gt_ignore[g]:
                break
            # ties go to the earliest ground truth
            if ious[p, g] > best_iou or (best < 0 and ious[p, g] >= thr):
                best, best_iou = g, ious[p, g]
        if best >= 0:
            taken[best] = True
            if gt_ignore[best]:
                ignored[r] = True
            else:
                tp[r] = True
        elif pred_out_of_range[p]:
            ignored[r] = True
    return tp, ignored


def ap_suite(predictions: Sequence, ground_truths: Sequence,
             pred_images: Sequence | None = None, gt_images: Sequence | None = None) -> APReport:
    """COCO-style AP family for a single class on one or more images.

    ``predictions`` are ``(region, score)`` pairs and ``ground_truths`` are
    ``(region, area)`` pairs, where regions are :class:`Box` or
    :class:`BinaryMask`.  A bare region is accepted for ground truths and its
    pixel area is used.  With several images, ``pred_images`` and
    ``gt_images`` name the image of each item; only items on the same image
    can match.
    """
    preds = [(r, float(s)) for r, s in predictions]
    gts = [g if isinstance(g, tuple) else (g, _region_area(g)) for g in ground_truths]
    if (pred_images is None) != (gt_images is None):
        raise ValueError("give image ids for both predictions and ground truths, or neither")
    p_img = list(pred_images) if pred_images is not None else [0] * len(preds)
    g_img = list(gt_images) if gt_images is not None else [0] * len(gts)
    if len(p_img) != len(preds) or len(g_img) != len(gts):
        raise ValueError("image id lists must match the prediction and ground-truth lists")
    scores = np.array([s for _, s in preds], dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("prediction scores must be finite")
    ious = np.array([[_region_iou(p, g) if pi == gi else 0.0 for (g, _), gi in zip(gts, g_img)]
                     for (p, _), pi in zip(preds, p_img)],
                    dtype=np.float64).reshape(len(preds), len(gts))
    order = np.argsort(-scores, kind="stable")
    gt_areas = np.array([a for _, a in gts], dtype=np.float64)
    pred_areas = np.array([_region_area(p) for p, _ in preds], dtype=np.float64)

    def run(area_range):
        lo, hi = area_range
        gt_ignore = (gt_areas < lo) | (gt_areas >= hi)
        pred_out = (pred_areas < lo) | (pred_areas >= hi)
        n_gt = int((~gt_ignore).sum())
        per, curves = {}, {}
        for thr in IOU_THRESHOLDS:
            tp, ignored = _match(ious, order, thr, gt_ignore, pred_out)
            val, rec, prec = interpolated_ap(tp[~ignored], n_gt)
            per[float(thr)] = val
            curves[float(thr)] = {"recall": rec.tolist(), "precision": prec.tolist()}
        return per, curves

    per, curves = run((0, float("inf")))
    per_m, _ = run(MEDIUM_AREA)
    per_l, _ = run(LARGE_AREA)
    return APReport(
        ap=float(np.mean(list(per.values()))),
        ap50=per[0.5],
        ap75=per[0.75],
        ap_m=float(np.mean(list(per_m.values()))),
        ap_l=float(np.mean(list(per_l.values()))),
        per_threshold=per,
        curves=curves,
    )
