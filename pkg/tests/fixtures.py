"""Hand-built and random box fixtures shared by the metric tests."""

import numpy as np

from owdkit.geometry import Annotation, Box, Detection

# Three images, one class, six truths (two per size bucket). Each detection
# is a horizontally shifted copy of its target, so IoU = (w - dx) / (w + dx).
HAND_TRUTH = [
    ("img1", (0, 0, 20, 20), 1),  # small, 400 px
    ("img1", (100, 100, 45, 50), 1),  # medium, 2250 px
    ("img2", (10, 10, 25, 25), 1),  # small, 625 px, never detected
    ("img2", (200, 100, 114, 120), 1),  # large, 13680 px
    ("img3", (50, 50, 58, 60), 1),  # medium, 3480 px
    ("img3", (300, 200, 117, 150), 1),  # large, 17550 px
]
HAND_DETS = [
    ("img1", (5, 0, 20, 20), 1, 0.9),  # IoU 0.60 with the small truth
    ("img1", (105, 100, 45, 50), 1, 0.7),  # IoU 0.80 with the medium truth
    ("img2", (206, 100, 114, 120), 1, 0.8),  # IoU 0.90 with the large truth
    ("img3", (72, 50, 58, 60), 1, 0.95),  # IoU 0.45 with the medium truth
    ("img3", (303, 200, 117, 150), 1, 0.6),  # IoU 0.95 with the large truth
]

# Frozen from tests/oracles.py::coco_oracle (exact rationals, see
# test_metrics.py::test_hand_fixture_frozen_values_match_live_oracle).
HAND_EXPECTED = {
    "ap_all": 1569 / 5050,
    "ap50": 268 / 505,
    "ap75": 153 / 505,
    "ap_s": 153 / 1010,
    "ap_m": 357 / 2020,
    "ap_l": 1869 / 2020,
    "ar_all": 29 / 60,
    "ar_s": 3 / 20,
    "ar_m": 7 / 20,
    "ar_l": 19 / 20,
}
HAND_PER_THRESHOLD = {
    0.5: 268 / 505,
    0.55: 268 / 505,
    0.6: 268 / 505,
    0.65: 153 / 505,
    0.7: 153 / 505,
    0.75: 153 / 505,
    0.8: 153 / 505,
    0.85: 68 / 505,
    0.9: 68 / 505,
    0.95: 17 / 505,
}


def to_truth(rows):
    return [Annotation(img, Box(*box), cat, f"t{k}") for k, (img, box, cat) in enumerate(rows)]


def to_dets(rows):
    return [Detection(img, Box(*box), cat, score) for img, box, cat, score in rows]


def random_fixture(rng: np.random.Generator, max_boxes=6, grid=40, max_side=16, n_images=1, n_cats=1):
    """Integer-coordinate boxes clustered on a small canvas so overlaps are common."""
    truth, dets = [], []
    for img in range(n_images):
        for _ in range(rng.integers(0, max_boxes + 1)):
            w, h = rng.integers(2, max_side + 1, size=2)
            x, y = rng.integers(0, grid - 1, size=2)
            truth.append((f"i{img}", (int(x), int(y), int(w), int(h)), int(rng.integers(1, n_cats + 1))))
        for _ in range(rng.integers(0, max_boxes + 1)):
            if truth and rng.random() < 0.7:
                _, (x, y, w, h), _ = truth[rng.integers(len(truth))]
                x, y = x + int(rng.integers(-3, 4)), y + int(rng.integers(-3, 4))
                w, h = max(1, w + int(rng.integers(-3, 4))), max(1, h + int(rng.integers(-3, 4)))
            else:
                w, h = rng.integers(2, max_side + 1, size=2)
                x, y = rng.integers(0, grid - 1, size=2)
            score = round(float(rng.random()), 3)
            dets.append((f"i{img}", (int(x), int(y), int(w), int(h)), int(rng.integers(1, n_cats + 1)), score))
    return truth, dets


def random_relabel_case(rng, max_props=8, max_truth=6, canvas=60, unknown=99):
    """Proposals and (box, category) truth; some proposals jitter a truth or an earlier proposal."""
    truth = []
    for k in range(rng.integers(0, max_truth + 1)):
        w, h = rng.integers(3, 25, size=2)
        x, y = rng.integers(0, canvas - 3, size=2)
        cat = unknown if rng.random() < 0.15 else int(rng.integers(1, 4))
        truth.append(((int(x), int(y), int(w), int(h)), cat))
    props = []
    for _ in range(rng.integers(0, max_props + 1)):
        if truth and rng.random() < 0.5:
            (x, y, w, h), _ = truth[rng.integers(len(truth))]
            x, y = x + int(rng.integers(-6, 7)), y + int(rng.integers(-6, 7))
            w, h = max(1, w + int(rng.integers(-5, 6))), max(1, h + int(rng.integers(-5, 6)))
        elif props and rng.random() < 0.3:
            x, y, w, h = props[rng.integers(len(props))]
            x += int(rng.integers(0, 2))
        else:
            w, h = rng.integers(3, 25, size=2)
            x, y = rng.integers(0, canvas - 3, size=2)
        props.append((int(x), int(y), int(w), int(h)))
    return props, truth
