"""Import KITTI object-detection label files into a manifest.

Each ``<frame>.txt`` holds one object per line::

    type truncated occluded alpha left top right bottom h w l x y z ry [score]

Only the type and the 2-D box are used. ``DontCare`` rows are skipped.
"""

from __future__ import annotations

from pathlib import Path

from .errors import InvalidBox
from .geometry import Annotation, Box
from .imageio import image_size
from .manifest import DatasetManifest, ImageRecord

KITTI_CLASSES = ("car", "van", "truck", "pedestrian", "person_sitting", "cyclist", "tram", "misc")
KITTI_IMAGE_SIZE = (1242, 375)


def parse_label_line(line: str) -> tuple[str, Box] | None:
    parts = line.split()
    if not parts:
        return None
    if len(parts) < 8:
        raise ValueError(f"expected at least 8 fields, got {len(parts)}")
    kind = parts[0].lower()
    if kind == "dontcare":
        return None
    left, top, right, bottom = map(float, parts[4:8])
    return kind, Box.from_xyxy(left, top, right, bottom)


def import_kitti(label_dir, image_dir=None, split: str = "train", image_suffix: str = ".png") -> DatasetManifest:
    """Build a manifest from a directory of KITTI label files.

    Image sizes come from the image headers when ``image_dir`` is given,
    otherwise the usual 1242x375 KITTI frame is assumed.
    """
    label_dir = Path(label_dir)
    cat_ids = {name: i + 1 for i, name in enumerate(KITTI_CLASSES)}
    images, anns = [], []
    for path in sorted(label_dir.glob("*.txt")):
        stem = path.stem
        fname = stem + image_suffix
        if image_dir is not None:
            w, h = image_size(Path(image_dir) / fname)
        else:
            w, h = KITTI_IMAGE_SIZE
        images.append(ImageRecord(stem, fname, w, h))
        for lineno, line in enumerate(path.read_text().splitlines(), 1):
            try:
                parsed = parse_label_line(line)
            except (ValueError, InvalidBox) as e:
                raise ValueError(f"{path}:{lineno}: {e}") from e
            if parsed is None:
                continue
            kind, box = parsed
            if kind not in cat_ids:
                raise ValueError(f"{path}:{lineno}: unknown KITTI type {kind!r}")
            anns.append(Annotation(stem, box, cat_ids[kind], len(anns)))
    m = DatasetManifest([(i, n) for n, i in cat_ids.items()], images, anns, split)
    m.validate()
    return m
