"""Axis-aligned box arithmetic and IoU kernels used by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import ValidationError

# COCO size partition: [0, 32^2), [32^2, 96^2), [96^2, inf)
SMALL_AREA_MAX = 32**2
MEDIUM_AREA_MAX = 96**2

AreaBucket = Literal["small", "medium", "large"]


@dataclass(frozen=True)
class BBox:
    """Top-left x/y plus width/height, in continuous pixel coordinates."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"bbox field {name!r} must be finite, got {value!r}")
        if self.w < 0 or self.h < 0:
            raise ValidationError(f"bbox extents must be nonnegative, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def translated(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)

    def as_xywh(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when the union has zero area."""
    ax2, ay2 = a.x + a.w, a.y + a.h
    bx2, by2 = b.x + b.w, b.y + b.h
    ix = min(ax2, bx2) - max(a.x, b.x)
    iy = min(ay2, by2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        inter = 0.0
    else:
        inter = ix * iy
    # areas from the same recomputed extents, so iou(a, a) is exactly 1
    union = (ax2 - a.x) * (ay2 - a.y) + (bx2 - b.x) * (by2 - b.y) - inter
    if union <= 0:
        return 0.0
    return inter / union


def boxes_to_array(boxes: Sequence[BBox]) -> np.ndarray:
    """Stack boxes into an (N, 4) xywh float array."""
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.asarray([b.as_xywh() for b in boxes], dtype=np.float64)


def iou_matrix(current: Sequence[BBox], previous: Sequence[BBox]) -> np.ndarray:
    """Pairwise IoU, shape (len(current), len(previous)).

    Entry (i, j) is iou(current[i], previous[j]); empty inputs give an
    empty matrix of the matching shape.
    """
    a = boxes_to_array(current)
    b = boxes_to_array(previous)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    ax1, ay1 = a[:, 0], a[:, 1]
    ax2, ay2 = a[:, 0] + a[:, 2], a[:, 1] + a[:, 3]
    bx1, by1 = b[:, 0], b[:, 1]
    bx2, by2 = b[:, 0] + b[:, 2], b[:, 1] + b[:, 3]
    iw = np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(ax1[:, None], bx1[None, :])
    ih = np.minimum(ay2[:, None], by2[None, :]) - np.maximum(ay1[:, None], by1[None, :])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    areas_a = ((ax2 - ax1) * (ay2 - ay1))[:, None]
    areas_b = ((bx2 - bx1) * (by2 - by1))[None, :]
    union = areas_a + areas_b - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def area_bucket(b: BBox) -> AreaBucket:
    """COCO-style size class of a box: small, medium, or large."""
    a = b.area
    if a < SMALL_AREA_MAX:
        return "small"
    if a < MEDIUM_AREA_MAX:
        return "medium"
    return "large"
