"""
Spectral-residual saliency
==========================

Images are numpy arrays of shape ``(H, W)`` or ``(H, W, C)`` with ``C`` in
``{1, 3}`` and values in ``[0, 1]``. Saliency maps are ``(H, W)`` float64
arrays in ``[0, 1]``.

The pipeline follows Hou & Zhang's spectral residual: the log-amplitude
spectrum minus its local average, recombined with the original phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import ImageTooSmall
from .geometry import Box, clip_box, pixel_bounds

MIN_SIDE = 8
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class SpectralConfig:
    working_width: int = 64
    log_epsilon: float = 1e-8
    smooth_kernel: int = 3
    postblur_sigma: float = 2.5

    def __post_init__(self):
        if self.working_width < 8:
            raise ValueError("working_width must be at least 8")
        if self.smooth_kernel < 1 or self.smooth_kernel % 2 == 0:
            raise ValueError("smooth_kernel must be a positive odd integer")
        if not self.log_epsilon > 0:
            raise ValueError("log_epsilon must be positive")
        if self.postblur_sigma < 0:
            raise ValueError("postblur_sigma must be nonnegative")


def dft2d_forward(img: np.ndarray) -> np.ndarray:
    """Unnormalized 2-D DFT, ``F[k, l] = sum x[m, n] exp(-2j pi (km/M + ln/N))``."""
    img = np.asarray(img)
    if img.ndim != 2 or min(img.shape) < 1:
        raise ValueError(f"expected a non-empty 2-D array, got shape {img.shape}")
    return np.fft.fft2(img)


def dft2d_inverse(spec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft2d_forward` (carries the ``1/(MN)`` factor)."""
    spec = np.asarray(spec)
    if spec.ndim != 2 or min(spec.shape) < 1:
        raise ValueError(f"expected a non-empty 2-D array, got shape {spec.shape}")
    return np.fft.ifft2(spec)


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise ValueError(f"expected (H, W), (H, W, 1) or (H, W, 3) image, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    if img.size and (img.min() < 0.0 or img.max() > 1.0):
        raise ValueError("image intensities must lie in [0, 1]")
    return img


def to_gray(img: np.ndarray) -> np.ndarray:
    img = check_image(img)
    if img.ndim == 2:
        return img
    return img @ LUMA


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling of a 2-D array with pixel-center alignment.

    Sample positions outside the source grid are clamped to the border.
    """
    img = np.asarray(img, dtype=np.float64)
    in_h, in_w = img.shape
    if (in_h, in_w) == (out_h, out_w):
        return img.copy()

    def axis(n_in, n_out):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0.0, n_in - 1)
        lo = np.floor(pos).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    r0, r1, fr = axis(in_h, out_h)
    c0, c1, fc = axis(in_w, out_w)
    top = img[r0][:, c0] * (1 - fc) + img[r0][:, c1] * fc
    bot = img[r1][:, c0] * (1 - fc) + img[r1][:, c1] * fc
    return top * (1 - fr)[:, None] + bot * fr[:, None]


def normalize_minmax(x: np.ndarray) -> np.ndarray:
    """Rescale to ``[0, 1]``; a (numerically) flat map becomes all zeros."""
    lo, hi = float(x.min()), float(x.max())
    if hi - lo <= 1e-9 * max(abs(hi), abs(lo), 1e-300):
        return np.zeros_like(x, dtype=np.float64)
    return (x - lo) / (hi - lo)


def _residual_map(gray: np.ndarray, cfg: SpectralConfig) -> np.ndarray:
    spec = dft2d_forward(gray)
    amp = np.abs(spec)
    phase = np.angle(spec)
    log_amp = np.log(amp + cfg.log_epsilon)
    residual = log_amp - ndimage.uniform_filter(log_amp, size=cfg.smooth_kernel, mode="nearest")
    recon = np.exp(residual) * np.exp(1j * phase)
    # bins with no energy have no phase; keep them empty so flat images stay flat
    recon[amp <= cfg.log_epsilon * amp.max()] = 0.0
    sal = np.abs(dft2d_inverse(recon)) ** 2
    if cfg.postblur_sigma > 0:
        sal = ndimage.gaussian_filter(sal, cfg.postblur_sigma, mode="nearest")
    return sal


def spectral_residual(img: np.ndarray, cfg: SpectralConfig | None = None) -> np.ndarray:
    """Full-frame spectral-residual saliency map of ``img``.

    The image is converted to luma, resampled to ``cfg.working_width`` columns
    (aspect preserved), processed in the frequency domain, blurred, resampled
    back to the source size and min-max normalized.

    Raises
    ------
    ImageTooSmall
        If either side of the image is shorter than 8 pixels.
    """
    cfg = cfg or SpectralConfig()
    gray = to_gray(img)
    h, w = gray.shape
    if min(h, w) < MIN_SIDE:
        raise ImageTooSmall(f"image is {w}x{h}; both sides must be >= {MIN_SIDE}")
    work_w = cfg.working_width
    work_h = max(1, int(round(h * work_w / w)))
    small = resize_bilinear(gray, work_h, work_w)
    sal = _residual_map(small, cfg)
    sal = resize_bilinear(sal, h, w)
    return normalize_minmax(sal)


def _padded_window(x0, y0, x1, y1, w, h):
    def grow(a, b, limit):
        size = b - a
        if size >= MIN_SIDE:
            return a, b
        a = a - (MIN_SIDE - size) // 2
        a = min(max(a, 0), limit - MIN_SIDE)
        return a, a + MIN_SIDE

    if min(w, h) < MIN_SIDE:
        raise ImageTooSmall(f"image is {w}x{h}; both sides must be >= {MIN_SIDE}")
    px0, px1 = grow(x0, x1, w)
    py0, py1 = grow(y0, y1, h)
    return px0, py0, px1, py1


def region_mask(shape: tuple[int, int], regions: Sequence[Box]) -> np.ndarray:
    """Boolean mask of the pixels touched by any of ``regions``."""
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    for box in regions:
        x0, y0, x1, y1 = pixel_bounds(clip_box(box, w, h), w, h)
        mask[y0:y1, x0:x1] = True
    return mask


def region_saliency(
    img: np.ndarray, regions: Sequence[Box], cfg: SpectralConfig | None = None
) -> np.ndarray:
    """Saliency restricted to ``regions``; exactly zero everywhere else.

    Each region is cropped and run through :func:`spectral_residual` on its
    own. Crops narrower or shorter than 8 pixels are grown to 8 around their
    center, but only the region's own pixels are written back. Overlaps are
    combined with a pointwise max.
    """
    cfg = cfg or SpectralConfig()
    img = check_image(img)
    h, w = img.shape[:2]
    out = np.zeros((h, w), dtype=np.float64)
    for box in regions:
        x0, y0, x1, y1 = pixel_bounds(clip_box(box, w, h), w, h)
        px0, py0, px1, py1 = _padded_window(x0, y0, x1, y1, w, h)
        sal = spectral_residual(img[py0:py1, px0:px1], cfg)
        patch = sal[y0 - py0 : y1 - py0, x0 - px0 : x1 - px0]
        np.maximum(out[y0:y1, x0:x1], patch, out=out[y0:y1, x0:x1])
    if not out.any():
        return out
    return normalize_minmax(out)
