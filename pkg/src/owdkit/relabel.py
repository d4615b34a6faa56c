"""
Open-world relabeling
=====================

Class-agnostic proposals are compared with the ground truth of their image.
A proposal whose best IoU with any truth box is strictly greater than
``alpha`` counts as a known object and is dropped (the truth already covers
it); every other proposal becomes a new ``unknown`` annotation.
"""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import ImageIdMismatch, UnknownImageId
from .geometry import Annotation, Box, boxes_to_array, clip_box, iou_matrix
from .manifest import UNKNOWN_NAME, DatasetManifest


class ProposalSource(str, enum.Enum):
    EXTERNAL_DETECTOR = "external_detector"
    PRIOR_KNOWLEDGE = "prior_knowledge"


@dataclass(frozen=True)
class ProposalSet:
    image_id: Hashable
    boxes: tuple[Box, ...]
    scores: tuple[float, ...] | None = None
    source: ProposalSource = ProposalSource.EXTERNAL_DETECTOR

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if self.scores is not None:
            object.__setattr__(self, "scores", tuple(self.scores))
            if len(self.scores) != len(self.boxes):
                raise ValueError("scores and boxes differ in length")

    def clipped(self, width: float, height: float) -> "ProposalSet":
        return replace(self, boxes=tuple(clip_box(b, width, height) for b in self.boxes))


@dataclass(frozen=True)
class RelabelConfig:
    alpha: float = 0.3
    unknown_category: int | None = None
    dedup_iou: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.dedup_iou <= 1.0:
            raise ValueError(f"dedup_iou must lie in (0, 1], got {self.dedup_iou}")


@dataclass
class RelabelResult:
    annotations: list[Annotation]
    labels: list[int]  # per proposal: matched truth category or the unknown id
    known_matched: int = 0
    unknown_added: int = 0
    deduplicated: int = 0

    def counts(self) -> dict[str, int]:
        return {
            "known_matched": self.known_matched,
            "unknown_added": self.unknown_added,
            "deduplicated": self.deduplicated,
        }


def relabel_image_detailed(
    proposals: ProposalSet, truth: Sequence[Annotation], cfg: RelabelConfig
) -> RelabelResult:
    if cfg.unknown_category is None:
        raise ValueError("RelabelConfig.unknown_category must be set")
    for a in truth:
        if a.image_id != proposals.image_id:
            raise ImageIdMismatch(f"truth for {a.image_id!r} passed with proposals for {proposals.image_id!r}")
    unk = cfg.unknown_category
    truth = list(truth)
    prop_arr = boxes_to_array(proposals.boxes)
    ious = iou_matrix(prop_arr, boxes_to_array([a.box for a in truth]))

    kept_unknown = boxes_to_array([a.box for a in truth if a.category == unk])
    new: list[Annotation] = []
    res = RelabelResult(truth, [])
    for k, box in enumerate(proposals.boxes):
        if ious.shape[1] and ious[k].max() > cfg.alpha:
            # argmax returns the first maximum: earliest truth wins ties
            res.labels.append(truth[int(np.argmax(ious[k]))].category)
            res.known_matched += 1
            continue
        res.labels.append(unk)
        if len(kept_unknown) and iou_matrix(prop_arr[k : k + 1], kept_unknown).max() >= cfg.dedup_iou:
            res.deduplicated += 1
            continue
        kept_unknown = np.vstack([kept_unknown, prop_arr[k : k + 1]])
        new.append(Annotation(proposals.image_id, box, unk, f"{proposals.image_id}/unknown/{k}"))
    res.annotations = truth + new
    res.unknown_added = len(new)
    return res


def relabel_image(
    proposals: ProposalSet, truth: Sequence[Annotation], cfg: RelabelConfig
) -> list[Annotation]:
    """Truth annotations plus the proposals that were labeled unknown.

    Unknown proposals with IoU >= ``cfg.dedup_iou`` to an earlier unknown
    (existing or new) are suppressed.
    """
    return relabel_image_detailed(proposals, truth, cfg).annotations


@dataclass
class DatasetRelabel:
    manifest: DatasetManifest
    counts: dict[str, int] = field(default_factory=dict)


def relabel_dataset_detailed(
    manifest: DatasetManifest,
    proposals: Mapping[Hashable, ProposalSet],
    cfg: RelabelConfig | None = None,
    workers: int = 1,
) -> DatasetRelabel:
    cfg = cfg or RelabelConfig()
    known_ids = set(manifest.image_ids)
    dangling = [i for i in proposals if i not in known_ids]
    if dangling:
        raise UnknownImageId(f"proposals for images not in the manifest: {dangling[:10]}")
    out, unk_id = manifest.with_category(UNKNOWN_NAME)
    cfg = replace(cfg, unknown_category=unk_id)
    by_image = manifest.annotations_by_image()

    def work(im):
        p = proposals[im.id].clipped(im.width, im.height)
        return relabel_image_detailed(p, by_image[im.id], cfg)

    todo = [im for im in manifest.images if im.id in proposals]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(work, todo))
    else:
        results = [work(im) for im in todo]

    totals = {"known_matched": 0, "unknown_added": 0, "deduplicated": 0}
    added: list[Annotation] = []
    for im, r in zip(todo, results):
        added.extend(r.annotations[len(by_image[im.id]) :])
        for k, v in r.counts().items():
            totals[k] += v
    return DatasetRelabel(replace(out, annotations=[*manifest.annotations, *added]), totals)


def relabel_dataset(
    manifest: DatasetManifest,
    proposals: Mapping[Hashable, ProposalSet],
    cfg: RelabelConfig | None = None,
    workers: int = 1,
) -> DatasetManifest:
    """Append ``unknown`` to the category table and add unknown proposals.

    Original annotations keep their order; new unknowns follow in manifest
    image order. Images without proposals are untouched.
    """
    return relabel_dataset_detailed(manifest, proposals, cfg, workers).manifest


def read_proposals(path, source: ProposalSource = ProposalSource.EXTERNAL_DETECTOR) -> dict[Hashable, ProposalSet]:
    """Group a JSON-lines proposal file by image, keeping line order."""
    boxes: dict[Hashable, list[Box]] = {}
    scores: dict[Hashable, list] = {}
    with open(Path(path)) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                box = Box(*map(float, rec["bbox"]))
            except (ValueError, KeyError, TypeError) as e:
                raise ValueError(f"{path}:{lineno}: bad proposal record: {e}") from e
            img = rec["image_id"]
            boxes.setdefault(img, []).append(box)
            scores.setdefault(img, []).append(rec.get("score"))
    out = {}
    for img, bs in boxes.items():
        sc = scores[img]
        out[img] = ProposalSet(img, tuple(bs), None if any(s is None for s in sc) else tuple(sc), source)
    return out


def write_proposals(path, proposals: Mapping[Hashable, ProposalSet]) -> None:
    with open(Path(path), "w") as f:
        for p in proposals.values():
            for k, b in enumerate(p.boxes):
                rec = {"image_id": p.image_id, "bbox": b.as_list()}
                if p.scores is not None:
                    rec["score"] = p.scores[k]
                f.write(json.dumps(rec) + "\n")
