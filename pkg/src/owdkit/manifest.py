"""
Dataset manifests
=================

A manifest is the on-disk description of one dataset split::

    {
      "categories": [[1, "car"], [2, "truck"]],
      "images": [{"id": "000001", "file": "000001.png", "width": 1242, "height": 375}],
      "annotations": [{"image_id": "000001", "bbox": [x, y, w, h],
                       "category_id": 1, "instance_id": 0}],
      "split": "train"
    }

``split`` is optional on read and defaults to ``"train"``.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Hashable, Iterable

from .errors import UnknownCategory
from .geometry import Annotation, Box, clip_box

UNKNOWN_NAME = "unknown"
SPLITS = ("train", "val")


@dataclass(frozen=True)
class ImageRecord:
    id: Hashable
    file: str
    width: int
    height: int


@dataclass
class DatasetManifest:
    categories: list[tuple[int, str]]
    images: list[ImageRecord]
    annotations: list[Annotation] = field(default_factory=list)
    split: str = "train"

    def __post_init__(self):
        self.categories = [(int(c), str(n)) for c, n in self.categories]
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")

    # lookups

    @property
    def category_names(self) -> dict[int, str]:
        return dict(self.categories)

    @property
    def category_ids(self) -> dict[str, int]:
        return {n: c for c, n in self.categories}

    def category_id(self, name: str) -> int:
        try:
            return self.category_ids[name]
        except KeyError:
            raise UnknownCategory(f"no category named {name!r}") from None

    @property
    def image_ids(self) -> list[Hashable]:
        return [im.id for im in self.images]

    def image(self, image_id) -> ImageRecord:
        for im in self.images:
            if im.id == image_id:
                return im
        raise KeyError(image_id)

    def annotations_by_image(self) -> dict[Hashable, list[Annotation]]:
        out: dict[Hashable, list[Annotation]] = {im.id: [] for im in self.images}
        for a in self.annotations:
            out.setdefault(a.image_id, []).append(a)
        return out

    def instance_counts(self) -> dict[str, int]:
        names = self.category_names
        counts: dict[str, int] = defaultdict(int)
        for a in self.annotations:
            counts[names[a.category]] += 1
        return dict(counts)

    def with_category(self, name: str) -> tuple["DatasetManifest", int]:
        """Return a copy whose category table contains ``name``, and its id."""
        ids = self.category_ids
        if name in ids:
            return replace(self, categories=list(self.categories)), ids[name]
        new_id = max((c for c, _ in self.categories), default=0) + 1
        return replace(self, categories=[*self.categories, (new_id, name)]), new_id

    def validate(self) -> None:
        seen: set = set()
        for im in self.images:
            if im.id in seen:
                raise ValueError(f"duplicate image id {im.id!r}")
            seen.add(im.id)
        if len({c for c, _ in self.categories}) != len(self.categories):
            raise ValueError("duplicate category id")
        if len({n for _, n in self.categories}) != len(self.categories):
            raise ValueError("duplicate category name")
        sizes = {im.id: (im.width, im.height) for im in self.images}
        cats = self.category_names
        instances: set = set()
        for a in self.annotations:
            if a.image_id not in sizes:
                raise ValueError(f"annotation {a.instance_id!r} refers to unknown image {a.image_id!r}")
            if a.category not in cats:
                raise UnknownCategory(f"annotation {a.instance_id!r} has unknown category {a.category}")
            if a.instance_id in instances:
                raise ValueError(f"duplicate instance id {a.instance_id!r}")
            instances.add(a.instance_id)
            clip_box(a.box, *sizes[a.image_id])

    # serialization

    def to_dict(self) -> dict:
        return {
            "categories": [[c, n] for c, n in self.categories],
            "images": [
                {"id": im.id, "file": im.file, "width": im.width, "height": im.height}
                for im in self.images
            ],
            "annotations": [
                {
                    "image_id": a.image_id,
                    "bbox": a.box.as_list(),
                    "category_id": a.category,
                    "instance_id": a.instance_id,
                }
                for a in self.annotations
            ],
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        images = [
            ImageRecord(im["id"], im.get("file", str(im["id"])), int(im["width"]), int(im["height"]))
            for im in d["images"]
        ]
        anns = [
            Annotation(
                image_id=a["image_id"],
                box=Box(*map(float, a["bbox"])),
                category=int(a["category_id"]),
                instance_id=a.get("instance_id", k),
            )
            for k, a in enumerate(d.get("annotations", []))
        ]
        m = cls([tuple(c) for c in d["categories"]], images, anns, d.get("split", "train"))
        m.validate()
        return m


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=1, ensure_ascii=False) + "\n"


def load_manifest(path) -> DatasetManifest:
    with open(Path(path)) as f:
        return DatasetManifest.from_dict(json.load(f))


def save_manifest(m: DatasetManifest, path, extra: dict | None = None) -> None:
    d = m.to_dict()
    if extra:
        d.update(extra)
    Path(path).write_text(dumps_json(d))


def resolve_names(m: DatasetManifest, names: Iterable[str]) -> set[int]:
    return {m.category_id(n) for n in names}
