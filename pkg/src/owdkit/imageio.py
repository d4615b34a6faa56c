"""Reading and writing images and saliency maps.

8-bit PNG and binary PGM/PPM go through Pillow. Saliency maps can also be
stored losslessly in the ``SALF`` format: a 16-byte header (magic ``b"SALF"``,
then little-endian u32 width, height and a reserved zero) followed by
``height * width`` little-endian float32 values in row-major order.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np
from PIL import Image

SALF_MAGIC = b"SALF"
_HEADER = struct.Struct("<4sIII")


def read_image(path) -> np.ndarray:
    """Load an 8-bit grayscale or RGB image as float64 in ``[0, 1]``.

    Grayscale files give ``(H, W)``, everything else ``(H, W, 3)``.
    """
    with Image.open(Path(path)) as im:
        im.load()
        if im.mode not in ("L", "RGB"):
            im = im.convert("L" if im.mode in ("1", "I", "I;16", "F") else "RGB")
        arr = np.asarray(im, dtype=np.uint8)
    return arr.astype(np.float64) / 255.0


def image_size(path) -> tuple[int, int]:
    """``(width, height)`` read from the file header only."""
    with Image.open(Path(path)) as im:
        return im.size


def to_uint8(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def encode_png(arr: np.ndarray) -> bytes:
    """PNG bytes for an ``(H, W)`` or ``(H, W, 3)`` float image in ``[0, 1]``."""
    data = to_uint8(arr)
    mode = "L" if data.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(data, mode=mode).save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def write_image(path, arr: np.ndarray) -> None:
    """Write a float image; the format follows the suffix (.png, .pgm, .ppm)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        path.write_bytes(encode_png(arr))
        return
    data = to_uint8(arr)
    if suffix == ".pgm" and data.ndim != 2:
        raise ValueError("PGM output needs a single-channel image")
    if suffix == ".ppm" and data.ndim == 2:
        data = np.repeat(data[:, :, None], 3, axis=2)
    if suffix not in (".pgm", ".ppm"):
        raise ValueError(f"unsupported image suffix {suffix!r}")
    Image.fromarray(data, mode="L" if data.ndim == 2 else "RGB").save(path, format="PPM")


def encode_salf(sal: np.ndarray) -> bytes:
    sal = np.asarray(sal)
    if sal.ndim != 2:
        raise ValueError("SALF stores 2-D maps only")
    h, w = sal.shape
    return _HEADER.pack(SALF_MAGIC, w, h, 0) + sal.astype("<f4").tobytes()


def decode_salf(raw: bytes) -> np.ndarray:
    if len(raw) < _HEADER.size:
        raise ValueError("truncated SALF header")
    magic, w, h, reserved = _HEADER.unpack_from(raw)
    if magic != SALF_MAGIC:
        raise ValueError(f"bad SALF magic {magic!r}")
    if reserved != 0:
        raise ValueError("SALF reserved field must be zero")
    body = raw[_HEADER.size :]
    if len(body) != 4 * w * h:
        raise ValueError(f"SALF body has {len(body)} bytes, expected {4 * w * h}")
    return np.frombuffer(body, dtype="<f4").reshape(h, w).astype(np.float64)


def write_saliency(path, sal: np.ndarray) -> None:
    """Write a saliency map as 8-bit PNG (``round(255 * s)``) or ``.salf``."""
    path = Path(path)
    if path.suffix.lower() == ".salf":
        path.write_bytes(encode_salf(sal))
    else:
        write_image(path, sal)


def read_saliency(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".salf":
        return decode_salf(path.read_bytes())
    arr = read_image(path)
    if arr.ndim != 2:
        raise ValueError(f"{path} is not a grayscale saliency map")
    return arr
