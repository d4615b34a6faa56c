import struct

import numpy as np
import pytest

from owdkit.imageio import (
    decode_salf,
    encode_png,
    encode_salf,
    image_size,
    read_image,
    read_saliency,
    write_image,
    write_saliency,
)


def test_png_gray_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (9, 13)) / 255.0
    write_image(tmp_path / "a.png", img)
    np.testing.assert_array_equal(read_image(tmp_path / "a.png"), img)
    assert image_size(tmp_path / "a.png") == (13, 9)


def test_png_rgb_round_trip_is_byte_stable(tmp_path):
    img = np.random.default_rng(1).integers(0, 256, (5, 6, 3)) / 255.0
    raw = encode_png(img)
    (tmp_path / "a.png").write_bytes(raw)
    again = read_image(tmp_path / "a.png")
    np.testing.assert_array_equal(again, img)
    assert encode_png(again) == raw


@pytest.mark.parametrize("suffix,shape", [(".pgm", (7, 8)), (".ppm", (7, 8, 3))])
def test_pnm_round_trip(tmp_path, suffix, shape):
    img = np.random.default_rng(2).integers(0, 256, shape) / 255.0
    write_image(tmp_path / f"x{suffix}", img)
    assert (tmp_path / f"x{suffix}").read_bytes()[:2] == (b"P5" if suffix == ".pgm" else b"P6")
    np.testing.assert_array_equal(read_image(tmp_path / f"x{suffix}"), img)


def test_saliency_png_quantization(tmp_path):
    s = np.array([[0.0, 0.5, 1.0], [0.2, 0.002, 0.998]])
    write_saliency(tmp_path / "s.png", s)
    back = read_saliency(tmp_path / "s.png") * 255
    np.testing.assert_array_equal(back, np.round(255 * s))


def test_salf_layout():
    s = np.arange(6, dtype=np.float64).reshape(2, 3) / 10
    raw = encode_salf(s)
    assert raw[:4] == b"SALF"
    assert struct.unpack("<III", raw[4:16]) == (3, 2, 0)
    assert len(raw) == 16 + 6 * 4
    assert np.frombuffer(raw[16:], "<f4")[4] == np.float32(0.4)
    np.testing.assert_allclose(decode_salf(raw), s, atol=1e-7)


def test_salf_file_round_trip(tmp_path):
    s = np.random.default_rng(3).random((4, 5))
    write_saliency(tmp_path / "s.salf", s)
    np.testing.assert_allclose(read_saliency(tmp_path / "s.salf"), s, atol=1e-7)


@pytest.mark.parametrize("raw", [b"SAL", b"XXXX" + bytes(12), struct.pack("<4sIII", b"SALF", 2, 2, 1) + bytes(16),
                                 struct.pack("<4sIII", b"SALF", 2, 2, 0) + bytes(15)])
def test_salf_rejects_bad_input(raw):
    with pytest.raises(ValueError):
        decode_salf(raw)
