import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from owdkit.errors import EmptyAfterClip, InvalidBox
from owdkit.geometry import Box, SizeBucket, classify_size, clip_box, iou, iou_matrix, boxes_to_array
from oracles import frac_iou

coord = st.floats(-500, 500, allow_nan=False)
side = st.floats(0.5, 300, allow_nan=False)
boxes = st.builds(Box, coord, coord, side, side)


def test_iou_examples():
    a = Box(0, 0, 10, 10)
    assert iou(a, a) == 1.0
    assert iou(a, Box(20, 20, 5, 5)) == 0.0
    assert iou(a, Box(5, 0, 10, 10)) == pytest.approx(50 / 150, abs=1e-15)


def test_touching_boxes_do_not_overlap():
    assert iou(Box(0, 0, 10, 10), Box(10, 0, 10, 10)) == 0.0


@pytest.mark.parametrize("vals", [(0, 0, 0, 5), (0, 0, 5, -1), (math.nan, 0, 1, 1), (0, math.inf, 1, 1)])
def test_invalid_boxes_rejected(vals):
    with pytest.raises(InvalidBox):
        Box(*vals)


@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0
    assert iou(a, a) == pytest.approx(1.0)


@given(boxes, boxes)
def test_iou_matches_exact_rational(a, b):
    assert iou(a, b) == pytest.approx(float(frac_iou(a.as_list(), b.as_list())), abs=1e-12)


@given(boxes, boxes, st.integers(-1000, 1000), st.integers(-1000, 1000))
def test_iou_translation_invariant(a, b, dx, dy):
    def move(x):
        return Box(x.x_min + dx, x.y_min + dy, x.width, x.height)

    assert iou(move(a), move(b)) == pytest.approx(iou(a, b), abs=1e-9)


@given(boxes, boxes, st.floats(0.1, 10))
def test_scaling_preserves_iou_and_area_order(a, b, s):
    def scale(x):
        return Box(x.x_min * s, x.y_min * s, x.width * s, x.height * s)

    assert iou(scale(a), scale(b)) == pytest.approx(iou(a, b), abs=1e-9)
    if a.area < b.area:
        assert classify_size(scale(a)) <= classify_size(scale(b))


def test_iou_matrix_agrees_with_scalar():
    bs = [Box(0, 0, 10, 10), Box(5, 0, 10, 10), Box(3, 4, 2, 2), Box(100, 100, 1, 1)]
    m = iou_matrix(boxes_to_array(bs), boxes_to_array(bs))
    for i, a in enumerate(bs):
        for j, b in enumerate(bs):
            assert m[i, j] == iou(a, b)
    assert iou_matrix(boxes_to_array([]), boxes_to_array(bs)).shape == (0, 4)


@pytest.mark.parametrize(
    "w,h,bucket",
    [(10, 10, SizeBucket.SMALL), (32, 32, SizeBucket.MEDIUM), (31.9, 32, SizeBucket.SMALL),
     (96, 96, SizeBucket.MEDIUM), (100, 100, SizeBucket.LARGE), (96, 96.01, SizeBucket.LARGE)],
)
def test_classify_size(w, h, bucket):
    assert classify_size(Box(0, 0, w, h)) is bucket


@given(side, side, side, side)
def test_classify_size_monotone_in_area(w1, h1, w2, h2):
    a, b = Box(0, 0, w1, h1), Box(0, 0, w2, h2)
    if a.area <= b.area:
        assert classify_size(a) <= classify_size(b)


def test_clip_box():
    assert clip_box(Box(-5, -5, 20, 20), 10, 10) == Box(0, 0, 10, 10)
    assert clip_box(Box(2, 2, 4, 4), 10, 10) == Box(2, 2, 4, 4)
    with pytest.raises(EmptyAfterClip):
        clip_box(Box(50, 50, 5, 5), 10, 10)
