"""
Boxes, annotations and detections
=================================

All boxes are axis-aligned and stored as ``(x_min, y_min, width, height)`` in
real-valued pixel units. No integer snapping is performed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .errors import EmptyAfterClip, InvalidBox

SMALL_MAX_AREA = 32.0**2
MEDIUM_MAX_AREA = 96.0**2


@dataclass(frozen=True)
class Box:
    x_min: float
    y_min: float
    width: float
    height: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.width, self.height)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidBox(f"non-finite box coordinates: {vals}")
        if self.width <= 0 or self.height <= 0:
            raise InvalidBox(f"box must have positive width and height: {vals}")

    @classmethod
    def from_xyxy(cls, x1: float, y1: float, x2: float, y2: float) -> "Box":
        return cls(x1, y1, x2 - x1, y2 - y1)

    @property
    def x_max(self) -> float:
        return self.x_min + self.width

    @property
    def y_max(self) -> float:
        return self.y_min + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.width, self.height]


@dataclass(frozen=True)
class Annotation:
    image_id: Hashable
    box: Box
    category: int
    instance_id: Hashable


@dataclass(frozen=True)
class Detection:
    image_id: Hashable
    box: Box
    category: int
    score: float

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"detection score must lie in [0, 1], got {self.score}")


class SizeBucket(enum.IntEnum):
    """COCO area buckets, ordered small < medium < large."""

    SMALL = 0
    MEDIUM = 1
    LARGE = 2


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; 0.0 when they are disjoint."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return min(inter / (a.area + b.area - inter), 1.0)


def boxes_to_array(boxes: Sequence[Box]) -> np.ndarray:
    """Stack boxes into an ``(N, 4)`` float array in xywh order."""
    if len(boxes) == 0:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([b.as_list() for b in boxes], dtype=np.float64)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between two ``(N, 4)`` and ``(M, 4)`` xywh arrays.

    Element ``[i, j]`` is computed with the same arithmetic as :func:`iou`, so
    the two agree bit for bit.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ax2 = a[:, 0] + a[:, 2]
    ay2 = a[:, 1] + a[:, 3]
    bx2 = b[:, 0] + b[:, 2]
    by2 = b[:, 1] + b[:, 3]
    iw = np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(ay2[:, None], by2[None, :]) - np.maximum(a[:, None, 1], b[None, :, 1])
    overlap = (iw > 0) & (ih > 0)
    inter = np.where(overlap, iw * ih, 0.0)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    return np.where(overlap, np.minimum(inter / union, 1.0), 0.0)


def classify_size(b: Box) -> SizeBucket:
    # both 32**2 and 96**2 are medium
    area = b.area
    if area < SMALL_MAX_AREA:
        return SizeBucket.SMALL
    if area <= MEDIUM_MAX_AREA:
        return SizeBucket.MEDIUM
    return SizeBucket.LARGE


def clip_box(b: Box, image_w: float, image_h: float) -> Box:
    if image_w <= 0 or image_h <= 0:
        raise ValueError(f"image dimensions must be positive, got {image_w}x{image_h}")
    x1 = max(b.x_min, 0.0)
    y1 = max(b.y_min, 0.0)
    x2 = min(b.x_max, float(image_w))
    y2 = min(b.y_max, float(image_h))
    if x2 <= x1 or y2 <= y1:
        raise EmptyAfterClip(f"{b} lies outside the {image_w}x{image_h} frame")
    return Box(x1, y1, x2 - x1, y2 - y1)


def pixel_bounds(b: Box, image_w: int, image_h: int) -> tuple[int, int, int, int]:
    """Integer pixel window ``(x0, y0, x1, y1)`` touched by a box, end-exclusive.

    A pixel ``(r, c)`` belongs to the box when the unit square
    ``[c, c+1) x [r, r+1)`` overlaps it with positive area.
    """
    x0 = max(int(math.floor(b.x_min)), 0)
    y0 = max(int(math.floor(b.y_min)), 0)
    x1 = min(int(math.ceil(b.x_max)), image_w)
    y1 = min(int(math.ceil(b.y_max)), image_h)
    if x1 <= x0 or y1 <= y0:
        raise EmptyAfterClip(f"{b} covers no pixel of the {image_w}x{image_h} frame")
    return x0, y0, x1, y1
