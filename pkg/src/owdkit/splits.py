"""
Open-set and open-world dataset views
=====================================

Class merging, task schedules, per-task train/val views, exemplar replay
selection and the full-instance proposal holdout.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientImages, UnknownCategory, UnknownSourceClass, UnknownTask
from .manifest import UNKNOWN_NAME, DatasetManifest


@dataclass(frozen=True)
class ClassMergeMap:
    mapping: Mapping[str, str] = field(default_factory=dict)
    drop: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))
        object.__setattr__(self, "drop", frozenset(self.drop))
        targets = set(self.mapping.values())
        cyclic = {s for s in self.mapping if s in targets and self.mapping[s] != s}
        if cyclic:
            raise ValueError(f"merge targets may not also be sources: {sorted(cyclic)}")
        if self.drop & set(self.mapping):
            raise ValueError(f"classes both merged and dropped: {sorted(self.drop & set(self.mapping))}")


def merge_classes(manifest: DatasetManifest, m: ClassMergeMap) -> DatasetManifest:
    """Relabel annotations through ``m.mapping`` and remove ``m.drop`` classes.

    A merged class keeps the id of the first table entry (in table order)
    that maps onto it.
    """
    names = manifest.category_names
    present = set(names.values())
    missing = [s for s in m.mapping if s not in present]
    if missing:
        raise UnknownSourceClass(f"merge sources not in category table: {missing}")

    new_ids: dict[str, int] = {}
    remap: dict[int, int] = {}
    for cid, name in manifest.categories:
        if name in m.drop:
            continue
        target = m.mapping.get(name, name)
        new_ids.setdefault(target, cid)
        remap[cid] = new_ids[target]
    categories = [(cid, name) for name, cid in new_ids.items()]
    anns = [replace(a, category=remap[a.category]) for a in manifest.annotations if a.category in remap]
    return replace(manifest, categories=categories, annotations=anns)


@dataclass(frozen=True)
class TaskSchedule:
    """Ordered tasks, each introducing a disjoint set of category names."""

    tasks: tuple[tuple[int, frozenset], ...]

    def __post_init__(self):
        tasks = tuple((int(t), frozenset(c)) for t, c in self.tasks)
        object.__setattr__(self, "tasks", tasks)
        ids = [t for t, _ in tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate task id")
        seen: set = set()
        for _, cats in tasks:
            if seen & cats:
                raise ValueError(f"classes introduced twice: {sorted(seen & cats)}")
            seen |= cats

    @classmethod
    def from_lists(cls, *introduced: Iterable[str]) -> "TaskSchedule":
        return cls(tuple((i + 1, frozenset(c)) for i, c in enumerate(introduced)))

    @property
    def task_ids(self) -> list[int]:
        return [t for t, _ in self.tasks]

    @property
    def categories(self) -> frozenset:
        return frozenset().union(*(c for _, c in self.tasks))

    def _index(self, t: int) -> int:
        for i, (tid, _) in enumerate(self.tasks):
            if tid == t:
                return i
        raise UnknownTask(f"task {t!r} not in schedule {self.task_ids}")

    def introduced(self, t: int) -> frozenset:
        return self.tasks[self._index(t)][1]

    def known_at(self, t: int) -> frozenset:
        i = self._index(t)
        return frozenset().union(*(c for _, c in self.tasks[: i + 1]))

    def unknown_at(self, t: int) -> frozenset:
        i = self._index(t)
        return frozenset().union(*(c for _, c in self.tasks[i + 1 :]))

    def to_dict(self) -> dict:
        return {"tasks": [{"id": t, "classes": sorted(c)} for t, c in self.tasks]}

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSchedule":
        try:
            tasks = tuple((e["id"], frozenset(e["classes"])) for e in d["tasks"])
        except (KeyError, TypeError) as e:
            raise ValueError(f'schedule must look like {{"tasks": [{{"id": 1, "classes": [...]}}]}}: {e!r}') from e
        return cls(tasks)


def load_schedule(path) -> TaskSchedule:
    with open(Path(path)) as f:
        return TaskSchedule.from_dict(json.load(f))


@dataclass(frozen=True)
class Preset:
    name: str
    schedule: TaskSchedule
    openset_known: frozenset
    merge: ClassMergeMap = ClassMergeMap()


PRESETS: dict[str, Preset] = {
    "kitti": Preset(
        "kitti",
        TaskSchedule.from_lists(
            ["car", "truck"], ["tram", "misc", "cyclist"], ["pedestrian", "van"]
        ),
        frozenset({"car", "truck"}),
    ),
    "nuscenes": Preset(
        "nuscenes",
        TaskSchedule.from_lists(
            ["car", "bus"],
            ["motor", "bike", "barrier", "traffic cone", "road objects"],
            ["trailer", "truck", "construction vehicle", "pedestrian"],
        ),
        frozenset({"car", "pedestrian"}),
        ClassMergeMap(
            {
                "bicycle": "bike",
                "bicycle rack": "bike",
                "debris": "road objects",
                "pushable-pullable": "road objects",
                "emergency vehicle": "car",
            },
            frozenset({"animal"}),
        ),
    ),
    "bdd": Preset(
        "bdd",
        TaskSchedule.from_lists(["pedestrian", "bus"], ["truck", "bike"], ["car", "motor"]),
        frozenset({"pedestrian", "bus"}),
        ClassMergeMap({}, frozenset({"train"})),
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _check_split(split: str) -> None:
    if split not in ("train", "val"):
        raise ValueError(f"split must be 'train' or 'val', got {split!r}")


def _view(manifest, keep: set, to_unknown: set, split) -> DatasetManifest:
    # keep/to_unknown are category ids; anything else is dropped
    out = replace(manifest, split=split)
    unk_id = None
    if to_unknown:
        out, unk_id = out.with_category(UNKNOWN_NAME)
    anns = []
    for a in manifest.annotations:
        if a.category in keep:
            anns.append(a)
        elif a.category in to_unknown:
            anns.append(replace(a, category=unk_id))
    cats = [(c, n) for c, n in out.categories if c in keep or c == unk_id]
    return replace(out, categories=cats, annotations=anns)


def make_openset_view(manifest: DatasetManifest, known: Iterable[str], split: str) -> DatasetManifest:
    """Train: known classes only. Val: every other class becomes ``unknown``."""
    _check_split(split)
    ids = manifest.category_ids
    known = set(known)
    missing = sorted(known - set(ids))
    if missing:
        raise UnknownCategory(f"known classes not in category table: {missing}")
    keep = {ids[n] for n in known}
    if split == "train":
        return _view(manifest, keep, set(), split)
    rest = {c for c, n in manifest.categories if c not in keep and n != UNKNOWN_NAME}
    if UNKNOWN_NAME in ids:
        rest.add(ids[UNKNOWN_NAME])
    return _view(manifest, keep, rest, split)


def make_task_view(
    manifest: DatasetManifest, schedule: TaskSchedule, t: int, split: str
) -> DatasetManifest:
    """Per-task view; classes outside the schedule are dropped.

    Train keeps only the classes introduced at ``t``. Val keeps every class
    known at ``t`` and relabels later tasks' classes as ``unknown``.
    """
    _check_split(split)
    ids = manifest.category_ids

    def to_ids(names):
        return {ids[n] for n in names if n in ids}

    if split == "train":
        return _view(manifest, to_ids(schedule.introduced(t)), set(), split)
    return _view(manifest, to_ids(schedule.known_at(t)), to_ids(schedule.unknown_at(t)), split)


@dataclass(frozen=True)
class ReplaySelection:
    image_ids: list
    counts: dict[str, int]
    shortfall: dict[str, int]


def select_exemplar_replay(
    manifest: DatasetManifest, known: Iterable[str], min_instances: int = 50, seed: int = 0
) -> ReplaySelection:
    """Greedily accumulate images until every known class has ``min_instances``.

    Images are visited in a seed-shuffled order; an image is taken when it
    holds at least one class still under quota. Classes that run out of
    images are listed in ``shortfall`` with the missing count.
    """
    if min_instances < 1:
        raise ValueError("min_instances must be >= 1")
    known = sorted(set(known))
    ids = manifest.category_ids
    missing = [n for n in known if n not in ids]
    if missing:
        raise UnknownCategory(f"known classes not in category table: {missing}")
    by_name = {ids[n]: n for n in known}
    per_image = {
        img: Counter(by_name[a.category] for a in anns if a.category in by_name)
        for img, anns in manifest.annotations_by_image().items()
    }
    image_ids = manifest.image_ids
    order = np.random.default_rng(seed).permutation(len(image_ids))

    counts = {n: 0 for n in known}
    chosen = []
    for i in order:
        if all(counts[n] >= min_instances for n in known):
            break
        inst = per_image.get(image_ids[i], Counter())
        if any(counts[n] < min_instances for n in inst):
            chosen.append(image_ids[i])
            for n, k in inst.items():
                counts[n] += k
    shortfall = {n: min_instances - c for n, c in counts.items() if c < min_instances}
    return ReplaySelection(chosen, counts, shortfall)


@dataclass(frozen=True)
class HoldoutReport:
    required: list[str]
    full_coverage_images: int
    min_coverage_selected: int
    relaxed: bool

    def to_dict(self) -> dict:
        return {
            "required_classes": self.required,
            "full_coverage_images": self.full_coverage_images,
            "min_coverage_selected": self.min_coverage_selected,
            "relaxed": self.relaxed,
        }


@dataclass(frozen=True)
class Holdout:
    image_ids: list
    remainder: DatasetManifest
    report: HoldoutReport

    def __iter__(self):
        return iter((self.image_ids, self.remainder, self.report))


def select_proposal_holdout(manifest: DatasetManifest, n: int = 500, seed: int = 0) -> Holdout:
    """Hold out ``n`` training images that cover as many classes as possible.

    Images are ranked by how many of the annotated classes they contain.
    Whole coverage levels are taken from the top down; the level that
    straddles ``n`` is sampled uniformly without replacement. When enough
    images contain every class this is plain uniform sampling among them.
    """
    if manifest.split != "train":
        raise ValueError("proposal holdout is drawn from a train manifest")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > len(manifest.images):
        raise InsufficientImages(f"asked for {n} holdout images, manifest has {len(manifest.images)}")

    names = manifest.category_names
    required = sorted({names[a.category] for a in manifest.annotations})
    by_image = manifest.annotations_by_image()
    coverage = [len({a.category for a in by_image[im.id]}) for im in manifest.images]
    rng = np.random.default_rng(seed)

    picked: list[int] = []
    for level in sorted(set(coverage), reverse=True):
        if len(picked) == n:
            break
        group = [i for i, c in enumerate(coverage) if c == level]
        need = n - len(picked)
        if len(group) <= need:
            picked.extend(group)
        else:
            sel = rng.choice(len(group), size=need, replace=False)
            picked.extend(group[j] for j in sel)

    picked_set = set(picked)
    holdout = [manifest.images[i].id for i in sorted(picked_set)]
    held = set(holdout)
    remainder = replace(
        manifest,
        images=[im for im in manifest.images if im.id not in held],
        annotations=[a for a in manifest.annotations if a.image_id not in held],
    )
    report = HoldoutReport(
        required=required,
        full_coverage_images=sum(c == len(required) for c in coverage),
        min_coverage_selected=min((coverage[i] for i in picked_set), default=len(required)),
        relaxed=any(coverage[i] < len(required) for i in picked_set),
    )
    return Holdout(holdout, remainder, report)


def split_summary(manifest: DatasetManifest) -> dict:
    """Image and instance counts per class, sorted by name."""
    return {
        "images": len(manifest.images),
        "instances": dict(sorted(manifest.instance_counts().items())),
    }


def image_subset(manifest: DatasetManifest, image_ids: Sequence[Hashable]) -> DatasetManifest:
    keep = set(image_ids)
    return replace(
        manifest,
        images=[im for im in manifest.images if im.id in keep],
        annotations=[a for a in manifest.annotations if a.image_id in keep],
    )
