"""A one-layer convolutional mask head trained with the boundary-weighted loss.

Architecture: 3x3 same-padded convolution with C filters, ReLU, a 1x1
projection to one logit per pixel, and a logistic output.  Gradients are
written out by hand.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .loss import DEFAULT_EPS, LossBreakdown, LossConfig, MaskPrediction, bce_map, sigmoid
from .raster import (
    BandPartition,
    BinaryMask,
    Box,
    PixelGrid,
    boundary_band,
    crop_resample,
    resample_mask,
    upsample_mask,
)

__all__ = [
    "ModelParams",
    "ParamGrads",
    "TrainConfig",
    "TrainReport",
    "init_params",
    "forward",
    "forward_logits",
    "backward",
    "train",
    "jitter_proposals",
    "predict_instance",
    "roi_samples",
    "roi_error_rates",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "edgemask-toyseg"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True, eq=False)
class ModelParams:
    conv_weights: np.ndarray  # (C, 3, 3)
    conv_bias: np.ndarray     # (C,)
    head_weights: np.ndarray  # (C,)
    head_bias: float
    init_seed: int | None = None

    def __post_init__(self):
        w = np.asarray(self.conv_weights, dtype=np.float64)
        if w.ndim != 3 or w.shape[1:] != (3, 3) or w.shape[0] < 1:
            raise ValueError(f"conv_weights must have shape (C, 3, 3), got {w.shape}")
        c = w.shape[0]
        b = np.asarray(self.conv_bias, dtype=np.float64).reshape(c)
        v = np.asarray(self.head_weights, dtype=np.float64).reshape(c)
        for name, arr in (("conv_weights", w), ("conv_bias", b), ("head_weights", v)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.setflags(write=False)
        if not math.isfinite(self.head_bias):
            raise ValueError("head_bias is not finite")
        object.__setattr__(self, "conv_weights", w)
        object.__setattr__(self, "conv_bias", b)
        object.__setattr__(self, "head_weights", v)
        object.__setattr__(self, "head_bias", float(self.head_bias))

    @property
    def channels(self) -> int:
        return self.conv_weights.shape[0]

    def flat(self) -> np.ndarray:
        return np.concatenate([self.conv_weights.ravel(), self.conv_bias, self.head_weights,
                               [self.head_bias]])

    def with_flat(self, vec: np.ndarray) -> "ModelParams":
        c = self.channels
        vec = np.asarray(vec, dtype=np.float64)
        return ModelParams(vec[:9 * c].reshape(c, 3, 3), vec[9 * c:10 * c], vec[10 * c:11 * c],
                           float(vec[11 * c]), self.init_seed)

    def __eq__(self, other):
        return isinstance(other, ModelParams) and np.array_equal(self.flat(), other.flat())


class ParamGrads(NamedTuple):
    conv_weights: np.ndarray
    conv_bias: np.ndarray
    head_weights: np.ndarray
    head_bias: float

    def flat(self) -> np.ndarray:
        return np.concatenate([self.conv_weights.ravel(), self.conv_bias, self.head_weights,
                               [self.head_bias]])


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    iterations: int = 2000
    lam: float = 100.0
    k: int = 2
    m: int = 28
    proposal_jitter: int = 4
    seed: int = 0
    clamp_eps: float = DEFAULT_EPS
    channels: int = 8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.m < 8:
            raise ValueError(f"m must be >= 8, got {self.m}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.proposal_jitter < 0:
            raise ValueError("proposal_jitter must be >= 0")
        self.loss_config()  # validates lam, k and clamp_eps

    def loss_config(self) -> LossConfig:
        return LossConfig(lam=self.lam, m=self.m, k=self.k, clamp_eps=self.clamp_eps)


@dataclass
class TrainReport:
    loss_trace: list[float]
    initial_mean_loss: float
    final_mean_loss: float
    boundary_error_rate: float
    interior_error_rate: float
    wall_time: float
    config: dict = field(default_factory=dict)


def init_params(channels: int = 8, seed: int = 0) -> ModelParams:
    rng = np.random.default_rng(seed)
    return ModelParams(
        conv_weights=rng.normal(0.0, math.sqrt(2.0 / 9.0), size=(channels, 3, 3)),
        conv_bias=rng.normal(0.0, 0.1, size=channels),
        head_weights=rng.normal(0.0, math.sqrt(1.0 / channels), size=channels),
        head_bias=0.0,
        init_seed=seed,
    )


def _patches(x: np.ndarray) -> np.ndarray:
    """The nine zero-padded 3x3 shifts of ``x`` stacked as ``(9, h, w)``."""
    h, w = x.shape
    xp = np.pad(x, 1)
    return np.stack([xp[dy:dy + h, dx:dx + w] for dy in range(3) for dx in range(3)])


def _forward(params: ModelParams, x: np.ndarray):
    patches = _patches(np.asarray(x, dtype=np.float64))
    pre = np.tensordot(params.conv_weights.reshape(params.channels, 9), patches, axes=1)
    pre += params.conv_bias[:, None, None]
    act = np.maximum(pre, 0.0)
    logits = np.tensordot(params.head_weights, act, axes=1) + params.head_bias
    return patches, pre, act, logits


def forward_logits(params: ModelParams, x: np.ndarray) -> np.ndarray:
    return _forward(params, x)[3]


def forward(params: ModelParams, x: np.ndarray, eps: float = DEFAULT_EPS) -> MaskPrediction:
    return MaskPrediction(sigmoid(forward_logits(params, x)), eps)


def _backward(params: ModelParams, x: np.ndarray, y: np.ndarray, weights: np.ndarray,
              eps: float) -> tuple[ParamGrads, float, np.ndarray]:
    patches, pre, act, logits = _forward(params, x)
    p = sigmoid(logits)
    m2 = y.size
    loss = float((weights * bce_map(y, np.clip(p, eps, 1.0 - eps))).sum() / m2)
    g = weights * (p - y) / m2
    d_head_w = np.tensordot(act, g, axes=([1, 2], [0, 1]))
    d_head_b = float(g.sum())
    d_pre = params.head_weights[:, None, None] * g[None] * (pre > 0)
    d_conv_b = d_pre.sum(axis=(1, 2))
    d_conv_w = np.tensordot(d_pre, patches, axes=([1, 2], [1, 2])).reshape(params.channels, 3, 3)
    return ParamGrads(d_conv_w, d_conv_b, d_head_w, d_head_b), loss, p


def backward(params: ModelParams, x: np.ndarray, target, band: BandPartition,
             cfg: LossConfig) -> tuple[ParamGrads, LossBreakdown]:
    """Exact parameter gradients of the boundary-weighted loss, plus the loss itself."""
    y = target.data if isinstance(target, BinaryMask) else np.asarray(target, dtype=bool)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != y.shape or band.boundary.shape != y.shape:
        raise ValueError(f"shape mismatch: input {x.shape}, target {y.shape}, "
                         f"band {band.boundary.shape}")
    weights = np.where(band.boundary, cfg.lam, 1.0)
    grads, _, p = _backward(params, x, y, weights, cfg.clamp_eps)
    h = bce_map(y, np.clip(p, cfg.clamp_eps, 1.0 - cfg.clamp_eps))
    b = band.boundary
    interior, boundary = float(h[~b].sum()), float(h[b].sum())
    breakdown = LossBreakdown((interior + cfg.lam * boundary) / y.size, interior, boundary,
                              int(b.sum()), int(y.size - b.sum()))
    return grads, breakdown


def _step(params: ModelParams, grads: ParamGrads, rate: float) -> ModelParams:
    return ModelParams(params.conv_weights - rate * grads.conv_weights,
                       params.conv_bias - rate * grads.conv_bias,
                       params.head_weights - rate * grads.head_weights,
                       params.head_bias - rate * grads.head_bias,
                       params.init_seed)


def _corpus_stats(params, samples, eps):
    losses, b_err, b_n, i_err, i_n = [], 0, 0, 0, 0
    for x, y, band, weights in samples:
        p = sigmoid(forward_logits(params, x))
        losses.append(float((weights * bce_map(y, np.clip(p, eps, 1 - eps))).sum() / y.size))
        wrong = (p > 0.5) != y
        b_err += int(wrong[band].sum())
        b_n += int(band.sum())
        i_err += int(wrong[~band].sum())
        i_n += int((~band).sum())
    return float(np.mean(losses)), b_err / max(b_n, 1), i_err / max(i_n, 1)


def roi_error_rates(params: ModelParams, corpus: Sequence[tuple[np.ndarray, BinaryMask]],
                    k: int) -> tuple[float, float]:
    """Pixel misclassification rates ``(boundary, interior)`` at threshold 0.5.

    Bands come from each target with window radius ``k``.
    """
    b_err = b_n = i_err = i_n = 0
    for x, target in corpus:
        y = target.data if isinstance(target, BinaryMask) else np.asarray(target, dtype=bool)
        band = boundary_band(BinaryMask(y), k).boundary
        wrong = (forward_logits(params, np.asarray(x, dtype=np.float64)) > 0) != y
        b_err += int(wrong[band].sum())
        b_n += int(band.sum())
        i_err += int(wrong[~band].sum())
        i_n += int((~band).sum())
    return b_err / max(b_n, 1), i_err / max(i_n, 1)


def train(corpus: Sequence[tuple[np.ndarray, BinaryMask]], cfg: TrainConfig,
          params: ModelParams | None = None) -> tuple[ModelParams, TrainReport]:
    """Plain SGD, one RoI per iteration, visiting RoIs in seeded shuffled epochs.

    The step for each RoI is ``learning_rate * m**2 / (|I| + lam*|B|)`` times
    the gradient, i.e. the gradient of the weighted per-pixel mean, so runs
    with different ``lam`` take comparable steps.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    start = time.perf_counter()
    lam = cfg.lam
    samples = []
    for x, target in corpus:
        y = target.data if isinstance(target, BinaryMask) else np.asarray(target, dtype=bool)
        if y.shape != (cfg.m, cfg.m) or np.shape(x) != (cfg.m, cfg.m):
            raise ValueError(f"RoI shape {np.shape(x)} / {y.shape} does not match m={cfg.m}")
        band = boundary_band(BinaryMask(y), cfg.k).boundary
        samples.append((np.asarray(x, dtype=np.float64), y, band, np.where(band, lam, 1.0)))

    if params is None:
        params = init_params(cfg.channels, cfg.seed)
    initial_loss, _, _ = _corpus_stats(params, samples, cfg.clamp_eps)
    rng = np.random.default_rng(cfg.seed)
    order: list[int] = []
    trace = []
    m2 = cfg.m * cfg.m
    for _ in range(cfg.iterations):
        if not order:
            order = list(rng.permutation(len(samples)))
        x, y, band, weights = samples[order.pop()]
        grads, loss, _ = _backward(params, x, y, weights, cfg.clamp_eps)
        trace.append(loss)
        norm = float(weights.sum())
        params = _step(params, grads, cfg.learning_rate * m2 / norm if norm > 0 else 0.0)

    final_loss, b_rate, i_rate = _corpus_stats(params, samples, cfg.clamp_eps)
    report = TrainReport(trace, initial_loss, final_loss, b_rate, i_rate,
                         time.perf_counter() - start, asdict(cfg))
    return params, report


def jitter_proposals(gt_boxes: Sequence[Box], j: int, seed: int, width: int,
                     height: int) -> list[Box]:
    """Shift every box edge by an independent uniform integer in ``[-j, j]``.

    Edges are clipped to the page; boxes that collapse below 2x2 are grown
    back around their centre.
    """
    if j < 0:
        raise ValueError("jitter must be >= 0")
    rng = np.random.default_rng(seed)
    out = []
    for b in gt_boxes:
        dx0, dy0, dx1, dy1 = (int(v) for v in rng.integers(-j, j + 1, size=4))
        x0, x1 = _clip_span(b.x0 + dx0, b.x1 + dx1, width)
        y0, y1 = _clip_span(b.y0 + dy0, b.y1 + dy1, height)
        out.append(Box(x0, y0, x1, y1))
    return out


def _clip_span(lo: int, hi: int, limit: int) -> tuple[int, int]:
    lo, hi = max(0, min(lo, limit)), max(0, min(hi, limit))
    if hi - lo < 2:
        centre = (lo + hi) // 2
        lo = max(0, min(centre - 1, limit - 2))
        hi = lo + 2
    return lo, hi


def predict_instance(params: ModelParams, page: PixelGrid, proposal: Box, cfg,
                     return_prediction: bool = False):
    """Page-coordinate instance mask for one proposal box.

    ``cfg`` supplies ``m`` and ``clamp_eps`` (a :class:`TrainConfig` or
    :class:`~edgemask.loss.LossConfig`).
    """
    x = crop_resample(page, proposal, cfg.m)
    pred = forward(params, x, cfg.clamp_eps)
    mask = upsample_mask(pred.threshold(0.5), proposal, page.width, page.height)
    return (mask, pred) if return_prediction else mask


def roi_samples(pages, m: int, jitter: int, seed: int) -> list[tuple[np.ndarray, BinaryMask]]:
    """Training RoIs: one jittered proposal per article of every page."""
    rng = np.random.default_rng(seed)
    out = []
    for page in pages:
        arts = page.articles()
        props = jitter_proposals([a.bbox() for a in arts], jitter, int(rng.integers(2**31)),
                                 page.width, page.height)
        for art, box in zip(arts, props):
            x = crop_resample(page.grid, box, m)
            out.append((x, resample_mask(page.region_mask(art.id), box, m)))
    return out


def save_checkpoint(path: str | Path, params: ModelParams, cfg: TrainConfig | None = None) -> None:
    """Write a JSON checkpoint.

    Floats are written with ``repr`` precision, which round-trips exactly.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "channels": params.channels,
        "init_seed": params.init_seed,
        "config": asdict(cfg) if cfg is not None else None,
        "params": {
            "conv_weights": params.conv_weights.ravel().tolist(),
            "conv_bias": params.conv_bias.tolist(),
            "head_weights": params.head_weights.tolist(),
            "head_bias": params.head_bias,
        },
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[ModelParams, TrainConfig | None]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a toyseg checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    c = doc["channels"]
    p = doc["params"]
    params = ModelParams(np.array(p["conv_weights"]).reshape(c, 3, 3), np.array(p["conv_bias"]),
                         np.array(p["head_weights"]), p["head_bias"], doc["init_seed"])
    cfg = TrainConfig(**doc["config"]) if doc["config"] is not None else None
    return params, cfg
