"""Raster geometry: grayscale pages, binary masks, boxes and boundary bands.

Pages are stored as ``uint8`` arrays (0 = full ink, 255 = blank paper) and
masks as ``bool`` arrays, both indexed ``[row, col]``.  Boxes are half-open
integer rectangles.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Box",
    "PixelGrid",
    "BinaryMask",
    "BandPartition",
    "iou",
    "mask_iou",
    "boundary_band",
    "window_counts",
    "crop_resample",
    "resample_mask",
    "upsample_mask",
    "apply_white_mask",
    "read_pgm",
    "write_pgm",
    "read_mask_pgm",
]


@dataclass(frozen=True, order=True)
class Box:
    """Half-open pixel rectangle ``[x0, x1) x [y0, y1)``."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if min(self.x0, self.y0) < 0:
            raise ValueError(f"negative box coordinate: {self}")
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError(f"empty box: {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def intersection_area(self, other: "Box") -> int:
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        return w * h if w > 0 and h > 0 else 0

    def contains(self, other: "Box") -> bool:
        return (self.x0 <= other.x0 and self.y0 <= other.y0
                and other.x1 <= self.x1 and other.y1 <= self.y1)

    def dilate(self, d: int, width: int, height: int) -> "Box":
        return Box(max(0, self.x0 - d), max(0, self.y0 - d),
                   min(width, self.x1 + d), min(height, self.y1 + d))

    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def as_list(self) -> list[int]:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def bounding(cls, boxes) -> "Box":
        boxes = list(boxes)
        if not boxes:
            raise ValueError("no boxes to bound")
        return cls(min(b.x0 for b in boxes), min(b.y0 for b in boxes),
                   max(b.x1 for b in boxes), max(b.y1 for b in boxes))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PixelGrid:
    """Grayscale raster; ``data`` is a read-only ``(height, width)`` uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"pixel grid must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("pixel values must lie in 0..255")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "data", _frozen(arr))

    @classmethod
    def blank(cls, width: int, height: int) -> "PixelGrid":
        return cls(np.full((height, width), 255, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def ink(self) -> np.ndarray:
        """Boolean array of non-white pixels."""
        return self.data < 255

    def __eq__(self, other):
        return isinstance(other, PixelGrid) and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean raster; ``data`` is a read-only ``(height, width)`` bool array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "data", _frozen(arr.astype(bool)))

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_boxes(cls, width: int, height: int, boxes) -> "BinaryMask":
        arr = np.zeros((height, width), dtype=bool)
        for b in boxes:
            arr[b.slices()] = True
        return cls(arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def count(self) -> int:
        return int(self.data.sum())

    def bbox(self) -> Box | None:
        rows = np.flatnonzero(self.data.any(axis=1))
        if rows.size == 0:
            return None
        cols = np.flatnonzero(self.data.any(axis=0))
        return Box(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)

    def __and__(self, other: "BinaryMask") -> "BinaryMask":
        _check_same_shape(self.data, other.data)
        return BinaryMask(self.data & other.data)

    def __or__(self, other: "BinaryMask") -> "BinaryMask":
        _check_same_shape(self.data, other.data)
        return BinaryMask(self.data | other.data)

    def __invert__(self) -> "BinaryMask":
        return BinaryMask(~self.data)

    def __eq__(self, other):
        return isinstance(other, BinaryMask) and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class BandPartition:
    """Split of an ``m x m`` RoI into boundary pixels and interior pixels.

    ``boundary`` is a read-only bool array; the interior is its complement,
    so the two sets are disjoint and cover the RoI by construction.
    """

    m: int
    k: int
    boundary: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.boundary, dtype=bool)
        if arr.shape != (self.m, self.m):
            raise ValueError(f"band shape {arr.shape} does not match m={self.m}")
        object.__setattr__(self, "boundary", _frozen(arr))

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary

    def boundary_coords(self) -> set[tuple[int, int]]:
        return {(int(r), int(c)) for r, c in zip(*np.nonzero(self.boundary))}

    def interior_coords(self) -> set[tuple[int, int]]:
        return {(int(r), int(c)) for r, c in zip(*np.nonzero(self.interior))}

    def __eq__(self, other):
        return (isinstance(other, BandPartition) and self.m == other.m and self.k == other.k
                and np.array_equal(self.boundary, other.boundary))


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def iou(a: Box, b: Box) -> float:
    inter = a.intersection_area(b)
    return inter / (a.area + b.area - inter)


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union of two masks; two empty masks score 1.0."""
    _check_same_shape(a.data, b.data)
    union = np.count_nonzero(a.data | b.data)
    if union == 0:
        return 1.0
    return np.count_nonzero(a.data & b.data) / union


def window_counts(arr: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Count true pixels and total pixels in each clipped ``(2k+1)^2`` window.

    Uses a summed-area table, so the cost is independent of ``k``.
    """
    h, w = arr.shape
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    sat[1:, 1:] = arr.astype(np.int64).cumsum(0).cumsum(1)
    r0 = np.clip(np.arange(h) - k, 0, h)
    r1 = np.clip(np.arange(h) + k + 1, 0, h)
    c0 = np.clip(np.arange(w) - k, 0, w)
    c1 = np.clip(np.arange(w) + k + 1, 0, w)
    counts = (sat[r1][:, c1] - sat[r0][:, c1] - sat[r1][:, c0] + sat[r0][:, c0])
    sizes = np.outer(r1 - r0, c1 - c0)
    return counts, sizes


def boundary_band(target: BinaryMask, k: int) -> BandPartition:
    """Pixels whose clipped Chebyshev window of radius ``k`` sees both labels.

    The band is taken from the ground-truth mask and is two-sided: it holds
    pixels on both sides of every transition.
    """
    if k < 1:
        raise ValueError(f"band window k must be >= 1, got {k}")
    arr = target.data
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"RoI must be square, got {arr.shape}")
    counts, sizes = window_counts(arr, k)
    return BandPartition(m=arr.shape[0], k=k, boundary=(counts > 0) & (counts < sizes))


def _area_weights(start: int, length: int, m: int) -> np.ndarray:
    """``(m, length)`` matrix averaging pixels ``start..start+length`` into m cells."""
    edges = np.arange(m + 1) * (length / m)
    lo = np.maximum(edges[:-1, None], np.arange(length)[None, :])
    hi = np.minimum(edges[1:, None], np.arange(length)[None, :] + 1)
    return np.clip(hi - lo, 0.0, None) * (m / length)


def _check_inside(box: Box, width: int, height: int) -> None:
    if box.x1 > width or box.y1 > height:
        raise ValueError(f"box {box} out of bounds for {width}x{height} grid")


def crop_resample(grid: PixelGrid, box: Box, m: int) -> np.ndarray:
    """Area-averaged ink density of ``box`` on an ``m x m`` grid, values in [0, 1]."""
    _check_inside(box, grid.width, grid.height)
    density = 1.0 - grid.data[box.slices()].astype(np.float64) / 255.0
    out = _area_weights(box.y0, box.height, m) @ density @ _area_weights(box.x0, box.width, m).T
    return np.clip(out, 0.0, 1.0)


def resample_mask(mask: BinaryMask, box: Box, m: int, threshold: float = 0.5) -> BinaryMask:
    """Area-average a page mask over ``box`` onto ``m x m`` cells and threshold."""
    _check_inside(box, mask.width, mask.height)
    frac = (_area_weights(box.y0, box.height, m) @ mask.data[box.slices()].astype(np.float64)
            @ _area_weights(box.x0, box.width, m).T)
    return BinaryMask(frac >= threshold - 1e-12)


def upsample_mask(roi_mask: BinaryMask, box: Box, width: int, height: int) -> BinaryMask:
    """Nearest-neighbour placement of an RoI mask onto a ``width x height`` page."""
    m_rows, m_cols = roi_mask.data.shape
    _check_inside(box, width, height)
    rows = ((np.arange(box.height) + 0.5) * m_rows / box.height).astype(np.intp)
    cols = ((np.arange(box.width) + 0.5) * m_cols / box.width).astype(np.intp)
    out = np.zeros((height, width), dtype=bool)
    out[box.slices()] = roi_mask.data[np.ix_(rows, cols)]
    return BinaryMask(out)


def apply_white_mask(grid: PixelGrid, region: BinaryMask) -> PixelGrid:
    _check_same_shape(grid.data, region.data)
    out = grid.data.copy()
    out[region.data] = 255
    return PixelGrid(out)


def write_pgm(path: str | os.PathLike, image: PixelGrid | BinaryMask) -> None:
    """Write a binary (P5) PGM; masks are stored as 0/255."""
    if isinstance(image, BinaryMask):
        data = np.where(image.data, 255, 0).astype(np.uint8)
    else:
        data = image.data
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(data).tobytes())


def _pgm_tokens(raw: bytes, count: int) -> tuple[list[int], int]:
    tokens: list[int] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(raw[start:pos]))
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path: str | os.PathLike) -> PixelGrid:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    (w, h, maxval), offset = _pgm_tokens(raw[2:], 3)
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    body = raw[2 + offset:2 + offset + w * h]
    if len(body) != w * h:
        raise ValueError(f"{path}: truncated raster")
    return PixelGrid(np.frombuffer(body, dtype=np.uint8).reshape(h, w))


def read_mask_pgm(path: str | os.PathLike) -> BinaryMask:
    return BinaryMask(read_pgm(path).data >= 128)
