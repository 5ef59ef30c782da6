"""Boundary-weighted mask loss and its gradient.

The loss over an ``m x m`` RoI is

    L = (sum_{interior} h_ij + lam * sum_{boundary} h_pq) / m**2

where ``h`` is the per-pixel binary cross-entropy.  The normaliser is the
pixel count ``m**2``, not the weighted count, so the loss magnitude grows
with ``lam``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import BandPartition, BinaryMask, boundary_band

__all__ = [
    "LossConfig",
    "MaskPrediction",
    "MaskTarget",
    "LossBreakdown",
    "pixel_bce",
    "bce_map",
    "edgemask_loss",
    "edgemask_grad",
    "vanilla_mask_loss",
    "total_loss",
    "sigmoid",
    "pixel_weights",
]

DEFAULT_EPS = 1e-7

MaskTarget = BinaryMask


@dataclass(frozen=True)
class LossConfig:
    lam: float = 100.0
    m: int = 28
    k: int = 2
    clamp_eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0 < self.clamp_eps < 0.5:
            raise ValueError(f"clamp_eps must lie in (0, 0.5), got {self.clamp_eps}")


class MaskPrediction:
    """Per-pixel foreground probabilities, clamped into ``[eps, 1 - eps]``."""

    __slots__ = ("probs", "eps")

    def __init__(self, probs, eps: float = DEFAULT_EPS):
        arr = np.clip(np.asarray(probs, dtype=np.float64), eps, 1.0 - eps)
        if arr.ndim != 2:
            raise ValueError(f"prediction must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        self.probs = arr
        self.eps = eps

    @classmethod
    def from_logits(cls, logits, eps: float = DEFAULT_EPS) -> "MaskPrediction":
        return cls(sigmoid(np.asarray(logits, dtype=np.float64)), eps)

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def threshold(self, level: float = 0.5) -> BinaryMask:
        return BinaryMask(self.probs > level)


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    interior_sum: float
    boundary_sum: float
    pixel_count_boundary: int
    pixel_count_interior: int


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def pixel_bce(y: bool, yhat: float) -> float:
    return -(math.log(yhat) if y else math.log1p(-yhat))


def bce_map(target: np.ndarray, probs: np.ndarray) -> np.ndarray:
    return -np.where(target, np.log(probs), np.log1p(-probs))


def _as_target(target) -> np.ndarray:
    return target.data if isinstance(target, BinaryMask) else np.asarray(target, dtype=bool)


def _check_inputs(pred: MaskPrediction, target: np.ndarray, band: BandPartition | None,
                  cfg: LossConfig | None) -> None:
    if pred.shape != target.shape:
        raise ValueError(f"dimension mismatch: prediction {pred.shape} vs target {target.shape}")
    if band is None:
        return
    if band.boundary.shape != target.shape:
        raise ValueError(f"dimension mismatch: band {band.boundary.shape} vs target {target.shape}")
    if cfg is not None:
        if cfg.m != target.shape[0]:
            raise ValueError(f"config m={cfg.m} does not match RoI side {target.shape[0]}")
        if band.k != cfg.k:
            raise ValueError(f"band was built with k={band.k}, config says k={cfg.k}")
    if band != boundary_band(BinaryMask(target), band.k):
        raise ValueError("band is inconsistent with the target mask")


def pixel_weights(band: BandPartition, lam: float) -> np.ndarray:
    return np.where(band.boundary, lam, 1.0)


def edgemask_loss(pred: MaskPrediction, target, band: BandPartition,
                  cfg: LossConfig) -> LossBreakdown:
    y = _as_target(target)
    _check_inputs(pred, y, band, cfg)
    h = bce_map(y, pred.probs)
    b = band.boundary
    interior_sum = float(h[~b].sum())
    boundary_sum = float(h[b].sum())
    m2 = y.size
    return LossBreakdown(
        total=(interior_sum + cfg.lam * boundary_sum) / m2,
        interior_sum=interior_sum,
        boundary_sum=boundary_sum,
        pixel_count_boundary=int(b.sum()),
        pixel_count_interior=int(m2 - b.sum()),
    )


def edgemask_grad(pred_logits, target, band: BandPartition, cfg: LossConfig) -> np.ndarray:
    """Gradient of :func:`edgemask_loss` with respect to the logits.

    With ``p = sigmoid(z)`` the per-pixel derivative is ``w * (p - y) / m**2``
    where ``w`` is ``lam`` on the boundary band and 1 elsewhere.  The clamp is
    treated as inactive, matching the usual logits formulation.
    """
    z = np.asarray(pred_logits, dtype=np.float64)
    y = _as_target(target)
    if z.shape != y.shape:
        raise ValueError(f"dimension mismatch: logits {z.shape} vs target {y.shape}")
    if band.boundary.shape != y.shape:
        raise ValueError(f"dimension mismatch: band {band.boundary.shape} vs target {y.shape}")
    return pixel_weights(band, cfg.lam) * (sigmoid(z) - y) / y.size


def vanilla_mask_loss(pred: MaskPrediction, target) -> float:
    y = _as_target(target)
    _check_inputs(pred, y, None, None)
    return float(bce_map(y, pred.probs).mean())


def total_loss(l_cls: float, l_box: float, l_mask: float) -> float:
    """Unweighted multi-task sum of classification, box and mask losses."""
    parts = (l_cls, l_box, l_mask)
    if not all(math.isfinite(v) for v in parts):
        raise ValueError(f"loss components must be finite, got {parts}")
    return float(l_cls + l_box + l_mask)
