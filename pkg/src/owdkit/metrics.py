"""
Detection metrics
=================

COCO-style box AP/AR over IoU thresholds and area buckets, plus the
open-world measures Wilderness Impact (WI) and Absolute Open-Set Error
(A-OSE).

Matching follows the COCO protocol: per image and category, detections are
capped to the top ``cap`` by score and processed in descending score; each
takes the still-unmatched truth with the highest IoU at or above the
threshold. AP uses 101-point interpolated precision. Slices without ground
truth are undefined (``None``) and left out of every mean.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateDenominator
from .geometry import Annotation, Box, Detection, SizeBucket, boxes_to_array, classify_size, iou_matrix

COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
RECALL_GRID = np.linspace(0.0, 1.0, 101)
AGNOSTIC = -1


@dataclass(frozen=True)
class MatchRow:
    det_index: int
    score: float
    truth_id: Hashable | None
    iou: float
    ignored: bool = False


@dataclass
class MatchTable:
    """Matching outcome for one image at one IoU threshold."""

    iou_thr: float
    rows: list[MatchRow] = field(default_factory=list)
    unmatched_truth: list[Hashable] = field(default_factory=list)
    n_truth: int = 0  # truth instances that count (not ignored)

    @property
    def tp(self) -> int:
        return sum(r.truth_id is not None and not r.ignored for r in self.rows)

    @property
    def fp(self) -> int:
        return sum(r.truth_id is None and not r.ignored for r in self.rows)

    @property
    def fn(self) -> int:
        return self.n_truth - self.tp


def top_k(dets: Sequence[Detection], cap: int) -> list[int]:
    """Indices of the ``cap`` highest-scoring detections, best first, ties by input order."""
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    return order[:cap] if cap is not None else order


def _greedy(ious: np.ndarray, thr: float, gt_ignore: np.ndarray):
    """Greedy one-to-one assignment of score-sorted detections (rows) to truth (columns).

    Non-ignored truth is preferred; ignored truth is only taken when no
    non-ignored candidate reaches ``thr``. Returns the matched column per row
    (-1 for none).
    """
    n_det, n_gt = ious.shape
    taken = np.zeros(n_gt, dtype=bool)
    match = np.full(n_det, -1, dtype=np.intp)
    for d in range(n_det):
        for pool in (~gt_ignore, gt_ignore):
            cand = np.where(pool & ~taken & (ious[d] >= thr), ious[d], -1.0)
            if n_gt and cand.max() >= 0.0:
                g = int(np.argmax(cand))
                match[d] = g
                taken[g] = True
                break
    return match


def match_greedy(
    dets: Sequence[Detection],
    truth: Sequence[Annotation],
    iou_thr: float,
    cap: int = 100,
    truth_ignore: Sequence[bool] | None = None,
    det_ignore_unmatched: Sequence[bool] | None = None,
) -> MatchTable:
    """Match one image's detections to its truth at ``iou_thr``.

    Category filtering is the caller's job: pass one category's boxes, or
    everything for class-agnostic matching. ``truth_ignore`` marks truth that
    may absorb a detection without counting (the detection is then ignored);
    ``det_ignore_unmatched`` marks detections to ignore if they stay
    unmatched. Both default to all-False.
    """
    keep = top_k(dets, cap)
    gt_ignore = np.zeros(len(truth), bool) if truth_ignore is None else np.asarray(truth_ignore, bool)
    ious = iou_matrix(boxes_to_array([dets[i].box for i in keep]), boxes_to_array([a.box for a in truth]))
    match = _greedy(ious, iou_thr, gt_ignore)
    table = MatchTable(iou_thr, n_truth=int((~gt_ignore).sum()))
    for row, d in enumerate(keep):
        g = int(match[row])
        if g >= 0:
            table.rows.append(MatchRow(d, dets[d].score, truth[g].instance_id, float(ious[row, g]), bool(gt_ignore[g])))
        else:
            ign = bool(det_ignore_unmatched[d]) if det_ignore_unmatched is not None else False
            table.rows.append(MatchRow(d, dets[d].score, None, 0.0, ign))
    matched = set(match[match >= 0].tolist())
    table.unmatched_truth = [a.instance_id for g, a in enumerate(truth) if g not in matched and not gt_ignore[g]]
    return table


def _pr_arrays(tables: Sequence[MatchTable]):
    rows = [r for t in tables for r in t.rows if not r.ignored]
    n_truth = sum(t.n_truth for t in tables)
    # score ties go to the lower detection index, then to table order
    order = sorted(range(len(rows)), key=lambda i: (-rows[i].score, rows[i].det_index))
    tp = np.array([rows[i].truth_id is not None for i in order], dtype=bool)
    return tp, n_truth


def interpolated_ap(tp: np.ndarray, n_truth: int) -> float:
    """101-point interpolated AP from a score-sorted TP indicator."""
    if len(tp) == 0:
        return 0.0
    tps = np.cumsum(tp, dtype=np.float64)
    fps = np.cumsum(~tp, dtype=np.float64)
    recall = tps / n_truth
    precision = tps / (tps + fps)
    # precision envelope: max precision at any recall >= r
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    q = np.where(idx < len(precision), precision[np.minimum(idx, len(precision) - 1)], 0.0)
    return float(q.mean())


def average_precision(tables: Sequence[MatchTable]) -> float | None:
    """AP of one slice (one category, or class-agnostic) at one threshold.

    ``tables`` are the per-image match tables of that slice. Returns ``None``
    when the slice has no ground truth.
    """
    tp, n_truth = _pr_arrays(tables)
    if n_truth == 0:
        return None
    return interpolated_ap(tp, n_truth)


def mean_defined(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def class_mean_ap(slices: Mapping[Hashable, Sequence[MatchTable]]) -> float | None:
    """Equal-weight mean of per-category AP over categories with ground truth."""
    return mean_defined(average_precision(t) for t in slices.values())


def recall(tables: Sequence[MatchTable]) -> float | None:
    n_truth = sum(t.n_truth for t in tables)
    if n_truth == 0:
        return None
    return sum(t.tp for t in tables) / n_truth


def average_recall(tables_by_threshold: Mapping[float, Sequence[MatchTable]]) -> float | None:
    """Recall averaged over IoU thresholds; ``None`` without ground truth."""
    return mean_defined(recall(t) for t in tables_by_threshold.values())


BUCKETS = {"all": None, "s": SizeBucket.SMALL, "m": SizeBucket.MEDIUM, "l": SizeBucket.LARGE}


def _group(items, key):
    out = defaultdict(list)
    for i, x in enumerate(items):
        out[key(x)].append(i)
    return out


def match_dataset(
    dets: Sequence[Detection],
    truth: Sequence[Annotation],
    thresholds: Sequence[float] = COCO_THRESHOLDS,
    cap: int = 100,
    class_agnostic: bool = False,
    bucket: SizeBucket | None = None,
) -> dict[Hashable, dict[float, list[MatchTable]]]:
    """Match tables per category and threshold, images in first-seen order.

    Row ``det_index`` values index into ``dets``.

    With ``bucket`` set, truth outside the bucket is ignored, and so are
    detections that match ignored truth or stay unmatched while their own
    box falls outside the bucket.
    """

    def cat(x):
        return AGNOSTIC if class_agnostic else x.category

    gt_groups = _group(truth, lambda a: (a.image_id, cat(a)))
    dt_groups = _group(dets, lambda d: (d.image_id, cat(d)))
    keys = list(dict.fromkeys([*gt_groups, *dt_groups]))
    cats = list(dict.fromkeys(k[1] for k in keys))
    out: dict = {c: {t: [] for t in thresholds} for c in cats}
    for img, c in keys:
        g = [truth[i] for i in gt_groups.get((img, c), [])]
        d = [dets[i] for i in dt_groups.get((img, c), [])]
        if bucket is None:
            g_ign = d_ign = None
        else:
            g_ign = [classify_size(a.box) != bucket for a in g]
            d_ign = [classify_size(x.box) != bucket for x in d]
        d_global = dt_groups.get((img, c), [])
        for t in thresholds:
            table = match_greedy(d, g, t, cap, g_ign, d_ign)
            table.rows = [replace(r, det_index=d_global[r.det_index]) for r in table.rows]
            out[c][t].append(table)
    return out


@dataclass
class MetricsReport:
    ap_all: float | None
    ap50: float | None
    ap75: float | None
    ap_s: float | None
    ap_m: float | None
    ap_l: float | None
    ar_all: float | None
    ar_s: float | None
    ar_m: float | None
    ar_l: float | None
    per_threshold_ap: dict[float, float | None]
    per_category_ap: dict[Hashable, float | None]
    per_category_ap50: dict[Hashable, float | None]
    cap: int
    class_agnostic: bool = False

    SUMMARY = ("ap_all", "ap50", "ap75", "ap_s", "ap_m", "ap_l", "ar_all", "ar_s", "ar_m", "ar_l")

    def summary(self) -> dict[str, float | None]:
        return {k: getattr(self, k) for k in self.SUMMARY}

    def to_dict(self, category_names: Mapping | None = None) -> dict:
        def name(c):
            if c == AGNOSTIC:
                return "agnostic"
            return category_names.get(c, str(c)) if category_names else str(c)

        return {
            **self.summary(),
            "per_threshold_ap": {f"{t:.2f}": v for t, v in self.per_threshold_ap.items()},
            "per_category_ap": {name(c): v for c, v in self.per_category_ap.items()},
            "per_category_ap50": {name(c): v for c, v in self.per_category_ap50.items()},
            "max_detections": self.cap,
            "class_agnostic": self.class_agnostic,
        }


def coco_suite(
    dets: Sequence[Detection],
    truth: Sequence[Annotation],
    thresholds: Sequence[float] = COCO_THRESHOLDS,
    cap: int = 100,
    class_agnostic: bool = False,
) -> MetricsReport:
    """Full COCO-style AP/AR report.

    AP50/AP75 are only defined when 0.5/0.75 are among ``thresholds``.
    """
    thresholds = tuple(float(t) for t in thresholds)
    ap_cells: dict[str, float | None] = {}
    ar_cells: dict[str, float | None] = {}
    per_thr: dict[float, float | None] = {}
    per_cat: dict = {}
    per_cat50: dict = {}
    for bname, bucket in BUCKETS.items():
        tables = match_dataset(dets, truth, thresholds, cap, class_agnostic, bucket)
        cat_ap = {c: {t: average_precision(ts) for t, ts in by_t.items()} for c, by_t in tables.items()}
        cat_ar = {c: {t: recall(ts) for t, ts in by_t.items()} for c, by_t in tables.items()}
        ap_cells[bname] = mean_defined(v for d in cat_ap.values() for v in d.values())
        ar_cells[bname] = mean_defined(v for d in cat_ar.values() for v in d.values())
        if bucket is None:
            for t in thresholds:
                per_thr[t] = mean_defined(d[t] for d in cat_ap.values())
            per_cat = {c: mean_defined(d.values()) for c, d in cat_ap.items()}
            per_cat50 = {c: d.get(0.5) for c, d in cat_ap.items()}
    return MetricsReport(
        ap_all=ap_cells["all"],
        ap50=per_thr.get(0.5),
        ap75=per_thr.get(0.75),
        ap_s=ap_cells["s"],
        ap_m=ap_cells["m"],
        ap_l=ap_cells["l"],
        ar_all=ar_cells["all"],
        ar_s=ar_cells["s"],
        ar_m=ar_cells["m"],
        ar_l=ar_cells["l"],
        per_threshold_ap=per_thr,
        per_category_ap=per_cat,
        per_category_ap50=per_cat50,
        cap=cap,
        class_agnostic=class_agnostic,
    )


@dataclass
class WildernessReport:
    p_known: float
    p_mixed: float
    wi: float
    true_positives: int
    closed_set_fp: int
    open_set_fp: int
    score_thr: float
    recall_level: float
    wi_at_recall: float | None
    recall_attainable: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _score_sorted(dets: Sequence[Detection], score_thr: float, cap: int) -> list[int]:
    """Indices of detections kept after thresholding and the per-image cap."""
    keep = [i for i, d in enumerate(dets) if d.score >= score_thr]
    by_image = _group([dets[i] for i in keep], lambda d: d.image_id)
    out = []
    for idx in by_image.values():
        sub = [dets[keep[j]] for j in idx]
        out.extend(keep[idx[k]] for k in top_k(sub, cap))
    return sorted(out, key=lambda i: (-dets[i].score, i))


def wilderness_impact(
    dets: Sequence[Detection],
    truth_known: Sequence[Annotation],
    truth_unknown: Sequence[Annotation],
    score_thr: float = 0.05,
    iou_thr: float = 0.5,
    recall_level: float = 0.8,
    cap: int = 100,
) -> WildernessReport:
    """Wilderness Impact ``WI = P_K / P_{K u U} - 1``.

    Detections at or above ``score_thr`` are matched per category against
    known truth. True positives count for both precisions. A detection that
    misses known truth but overlaps unknown truth (IoU >= ``iou_thr``) is an
    open-set error: it is left out of ``P_K`` and counted as a false positive
    in ``P_{K u U}``. Remaining misses are false positives in both.

    WI is also reported at the first score cut-off whose known-class recall
    reaches ``recall_level``, when that recall is attainable.
    """
    kept = _score_sorted(dets, score_thr, cap)
    kept_set = set(kept)
    tp = np.zeros(len(dets), bool)
    gt_groups = _group(truth_known, lambda a: (a.image_id, a.category))
    dt_groups = _group(dets, lambda d: (d.image_id, d.category))
    for key, di in dt_groups.items():
        di = [i for i in di if i in kept_set]
        g = [truth_known[i] for i in gt_groups.get(key, [])]
        table = match_greedy([dets[i] for i in di], g, iou_thr, cap=None)
        for r in table.rows:
            if r.truth_id is not None:
                tp[di[r.det_index]] = True

    open_fp = np.zeros(len(dets), bool)
    unk_by_image = _group(truth_unknown, lambda a: a.image_id)
    for img, di in _group(range(len(dets)), lambda i: dets[i].image_id).items():
        di = [i for i in di if i in kept_set and not tp[i]]
        u = unk_by_image.get(img, [])
        if not di or not u:
            continue
        ious = iou_matrix(boxes_to_array([dets[i].box for i in di]), boxes_to_array([truth_unknown[j].box for j in u]))
        for row, i in enumerate(di):
            open_fp[i] = bool((ious[row] >= iou_thr).any())

    n_tp = int(tp[kept].sum()) if kept else 0
    n_open = int(open_fp[kept].sum()) if kept else 0
    n_closed = len(kept) - n_tp - n_open
    if n_tp == 0:
        raise DegenerateDenominator("no true positives: precision over known and unknown truth is zero")
    p_known = n_tp / (n_tp + n_closed)
    p_mixed = n_tp / (n_tp + n_closed + n_open)

    wi_r, attainable = None, False
    n_known = len(truth_known)
    if n_known:
        ctp = np.cumsum(tp[kept])
        copen = np.cumsum(open_fp[kept])
        hit = np.nonzero(ctp / n_known >= recall_level)[0]
        if len(hit):
            k = int(hit[0])
            attainable = True
            wi_r = float(copen[k] / (k + 1 - copen[k]))
    return WildernessReport(
        p_known=p_known,
        p_mixed=p_mixed,
        wi=p_known / p_mixed - 1.0,
        true_positives=n_tp,
        closed_set_fp=n_closed,
        open_set_fp=n_open,
        score_thr=score_thr,
        recall_level=recall_level,
        wi_at_recall=wi_r,
        recall_attainable=attainable,
    )


def wi_from_precisions(p_known: float, p_mixed: float) -> float:
    if p_mixed == 0:
        raise DegenerateDenominator("P_{K u U} is zero")
    return p_known / p_mixed - 1.0


@dataclass
class OseReport:
    a_ose: int
    per_class: dict[Hashable, int]

    def to_dict(self, category_names: Mapping | None = None) -> dict:
        names = category_names or {}
        return {"a_ose": self.a_ose, "per_class": {str(names.get(c, c)): n for c, n in self.per_class.items()}}


def absolute_open_set_error(
    dets: Sequence[Detection],
    truth_unknown: Sequence[Annotation],
    iou_thr: float = 0.5,
    score_thr: float = 0.05,
    cap: int = 100,
) -> OseReport:
    """Number of unknown truth objects claimed by a known-class detection.

    Matching is class-agnostic, greedy and one-to-one per image, so two
    detections on the same unknown object count once. ``per_class`` says
    which detected class absorbed each object.
    """
    per_class: dict = defaultdict(int)
    unk_by_image = _group(truth_unknown, lambda a: a.image_id)
    kept = [i for i in range(len(dets)) if dets[i].score >= score_thr]
    for img, di in _group(kept, lambda i: dets[i].image_id).items():
        u = [truth_unknown[j] for j in unk_by_image.get(img, [])]
        if not u:
            continue
        sub = [dets[i] for i in di]
        for r in match_greedy(sub, u, iou_thr, cap).rows:
            if r.truth_id is not None:
                per_class[sub[r.det_index].category] += 1
    per_class = dict(sorted(per_class.items(), key=lambda kv: str(kv[0])))
    return OseReport(sum(per_class.values()), per_class)


# IO


def read_detections(path) -> list[Detection]:
    out = []
    with open(Path(path)) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(Detection(rec["image_id"], Box(*map(float, rec["bbox"])), int(rec["category_id"]), float(rec["score"])))
            except (ValueError, KeyError, TypeError) as e:
                raise ValueError(f"{path}:{lineno}: bad detection record: {e}") from e
    return out


def write_detections(path, dets: Iterable[Detection]) -> None:
    with open(Path(path), "w") as f:
        for d in dets:
            f.write(json.dumps({"image_id": d.image_id, "bbox": d.box.as_list(), "category_id": d.category, "score": d.score}) + "\n")


def dumps_report(obj, indent: int = 2) -> str:
    """JSON text with every float written to 6 decimal places."""

    def enc(x, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(x, bool) or x is None:
            return json.dumps(x)
        if isinstance(x, (float, np.floating)):
            x = float(x)
            return f"{x:.6f}" if math.isfinite(x) else "null"
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        if isinstance(x, str):
            return json.dumps(x, ensure_ascii=False)
        if isinstance(x, Mapping):
            if not x:
                return "{}"
            items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {enc(v, level + 1)}" for k, v in x.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(x, (list, tuple)):
            if not x:
                return "[]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in x) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(x).__name__}")

    return enc(obj, 0) + "\n"


def format_table(rows: Mapping[str, float | None], title: str = "") -> str:
    """Aligned two-column text table; undefined values print as ``-``."""
    width = max((len(k) for k in rows), default=0)
    lines = [title] if title else []
    for k, v in rows.items():
        val = "-" if v is None else f"{v:.6f}" if isinstance(v, float) else str(v)
        lines.append(f"{k.ljust(width)}  {val}")
    return "\n".join(lines) + "\n"
