"""
Saliency fusion
===============

Channel expansion of a 1-channel saliency map followed by an additive merge
into the RGB image::

    fused = clamp(img + b3 + w3 * (b1 + gamma * (w1 * s)), 0, 1)

where ``*`` is a zero-padded 2-D cross-correlation. ``w3``/``b3`` hold one
kernel and one bias per output channel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import SizeMismatch


def _as_kernel(k, name):
    k = np.atleast_2d(np.asarray(k, dtype=np.float64))
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
        raise ValueError(f"{name} must be a square kernel of odd size, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError(f"{name} has non-finite entries")
    return k


@dataclass(frozen=True)
class FusionWeights:
    w1: np.ndarray = field(default_factory=lambda: np.ones((1, 1)))
    b1: float = 0.0
    w3: tuple = field(default_factory=lambda: tuple(np.ones((1, 1)) for _ in range(3)))
    b3: tuple = (0.0, 0.0, 0.0)
    gamma: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "w1", _as_kernel(self.w1, "w1"))
        if len(self.w3) != 3 or len(self.b3) != 3:
            raise ValueError("w3 and b3 need exactly three entries, one per output channel")
        object.__setattr__(self, "w3", tuple(_as_kernel(k, f"w3[{i}]") for i, k in enumerate(self.w3)))
        object.__setattr__(self, "b3", tuple(float(b) for b in self.b3))
        vals = (self.b1, self.gamma, *self.b3)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("fusion biases and gain must be finite")

    @classmethod
    def from_dict(cls, d: dict) -> "FusionWeights":
        defaults = cls()
        return cls(
            w1=d.get("w1", defaults.w1),
            b1=float(d.get("b1", defaults.b1)),
            w3=tuple(d.get("w3", defaults.w3)),
            b3=tuple(d.get("b3", defaults.b3)),
            gamma=float(d.get("gamma", defaults.gamma)),
        )

    def to_dict(self) -> dict:
        return {
            "w1": self.w1.tolist(),
            "b1": self.b1,
            "w3": [k.tolist() for k in self.w3],
            "b3": list(self.b3),
            "gamma": self.gamma,
        }


def load_weights(path) -> FusionWeights:
    with open(Path(path)) as f:
        return FusionWeights.from_dict(json.load(f))


def save_weights(w: FusionWeights, path) -> None:
    with open(Path(path), "w") as f:
        json.dump(w.to_dict(), f, indent=2)


def _xcorr(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    if k.shape == (1, 1):
        return x * k[0, 0]
    return ndimage.correlate(x, k, mode="constant", cval=0.0)


def expand_channels(s: np.ndarray, w: FusionWeights | None = None) -> np.ndarray:
    """Map an ``(H, W)`` saliency map to an unclamped ``(H, W, 3)`` tensor."""
    w = w or FusionWeights()
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2:
        raise ValueError(f"saliency map must be 2-D, got shape {s.shape}")
    hidden = w.b1 + w.gamma * _xcorr(s, w.w1)
    return np.stack([_xcorr(hidden, k) + b for k, b in zip(w.w3, w.b3)], axis=-1)


def merge(img: np.ndarray, s: np.ndarray, w: FusionWeights | None = None) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {img.shape}")
    if img.shape[:2] != np.shape(s):
        raise SizeMismatch(f"image is {img.shape[:2]} but saliency map is {np.shape(s)}")
    return np.clip(img + expand_channels(s, w), 0.0, 1.0)
