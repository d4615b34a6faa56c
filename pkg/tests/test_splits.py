from collections import Counter

import pytest

from owdkit.errors import InsufficientImages, UnknownCategory, UnknownSourceClass, UnknownTask
from owdkit.geometry import Box
from owdkit.kitti import KITTI_CLASSES, import_kitti, parse_label_line
from owdkit.splits import (
    PRESETS,
    ClassMergeMap,
    TaskSchedule,
    get_preset,
    load_schedule,
    make_openset_view,
    make_task_view,
    merge_classes,
    select_exemplar_replay,
    select_proposal_holdout,
)
from synth import build, kitti_manifest


def names_of(m):
    table = m.category_names
    return Counter(table[a.category] for a in m.annotations)


NUSCENES_RAW = [
    "car", "bus", "motor", "bicycle", "bicycle rack", "barrier", "traffic cone", "debris",
    "pushable-pullable", "trailer", "truck", "construction vehicle", "pedestrian",
    "emergency vehicle", "animal",
]


def test_merge_nuscenes_example():
    m = build(NUSCENES_RAW, [NUSCENES_RAW, ["bicycle", "animal", "debris"]])
    out = merge_classes(m, PRESETS["nuscenes"].merge)
    names = set(out.category_names.values())
    assert {"bike", "road objects"} <= names
    assert "animal" not in names and "bicycle" not in names and "debris" not in names
    out.validate()
    counts = names_of(out)
    assert counts["bike"] == 3 and counts["road objects"] == 3 and counts["car"] == 2
    assert sum(counts.values()) == len(m.annotations) - 2


def test_merged_target_names_and_schedule_cover_table():
    m = build(NUSCENES_RAW, [NUSCENES_RAW])
    out = merge_classes(m, PRESETS["nuscenes"].merge)
    assert set(out.category_names.values()) == set(PRESETS["nuscenes"].schedule.categories)


def test_merge_identity():
    m = kitti_manifest()
    assert merge_classes(m, ClassMergeMap()) == m


def test_merge_count_conservation():
    m = build(["a", "b", "c"], [["a"] * 3 + ["b"] * 4 + ["c"]])
    out = merge_classes(m, ClassMergeMap({"a": "ab", "b": "ab"}))
    assert names_of(out) == {"ab": 7, "c": 1}


def test_merge_unknown_source():
    with pytest.raises(UnknownSourceClass):
        merge_classes(kitti_manifest(), ClassMergeMap({"bus": "car"}))


def test_merge_map_invariants():
    with pytest.raises(ValueError):
        ClassMergeMap({"a": "b", "b": "c"})
    with pytest.raises(ValueError):
        ClassMergeMap({"a": "b"}, {"a"})


def test_openset_train_keeps_known():
    out = make_openset_view(kitti_manifest(), {"car", "truck"}, "train")
    assert set(names_of(out)) <= {"car", "truck"}
    assert set(out.category_names.values()) == {"car", "truck"}


def test_openset_val_all_known_has_no_unknown():
    m = kitti_manifest(split="val")
    out = make_openset_view(m, set(KITTI_CLASSES), "val")
    assert "unknown" not in names_of(out)
    assert len(out.annotations) == len(m.annotations)


def test_openset_val_nothing_known():
    m = kitti_manifest(split="val")
    out = make_openset_view(m, set(), "val")
    assert names_of(out) == {"unknown": len(m.annotations)}


def test_openset_val_maps_rest_to_unknown():
    m = kitti_manifest(split="val")
    out = make_openset_view(m, {"car", "truck"}, "val")
    before = names_of(m)
    after = names_of(out)
    assert after["unknown"] == sum(v for k, v in before.items() if k not in ("car", "truck"))
    assert [a.box for a in out.annotations] == [a.box for a in m.annotations]


def test_openset_unknown_known_class():
    with pytest.raises(UnknownCategory):
        make_openset_view(kitti_manifest(), {"bus"}, "train")


KITTI = PRESETS["kitti"].schedule


def test_kitti_task1_train():
    out = make_task_view(kitti_manifest(), KITTI, 1, "train")
    assert set(names_of(out)) == {"car", "truck"}


def test_kitti_task3_val_has_true_labels_only():
    m = kitti_manifest(split="val")
    out = make_task_view(m, KITTI, 3, "val")
    counts = names_of(out)
    assert "unknown" not in counts
    assert set(counts) <= {"car", "truck", "tram", "misc", "cyclist", "pedestrian", "van"}
    # person_sitting is outside the schedule and dropped
    assert sum(counts.values()) == sum(v for k, v in names_of(m).items() if k != "person_sitting")


def test_kitti_task1_val_future_classes_unknown():
    m = kitti_manifest(split="val")
    out = make_task_view(m, KITTI, 1, "val")
    before = names_of(m)
    counts = names_of(out)
    assert set(counts) <= {"car", "truck", "unknown"}
    assert counts["unknown"] == sum(before[n] for n in ("tram", "misc", "cyclist", "pedestrian", "van"))
    assert counts["car"] == before["car"]


def test_task_view_unknown_task():
    with pytest.raises(UnknownTask):
        make_task_view(kitti_manifest(), KITTI, 4, "train")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_schedule_algebra(name):
    sched = get_preset(name).schedule
    assert get_preset(name).openset_known <= sched.categories
    for t in sched.task_ids:
        assert not (sched.known_at(t) & sched.unknown_at(t))
        assert sched.known_at(t) | sched.unknown_at(t) == sched.categories
    assert sched.unknown_at(sched.task_ids[-1]) == frozenset()


def test_preset_lookup():
    with pytest.raises(KeyError):
        get_preset("coco")


def test_schedule_validation_and_round_trip(tmp_path):
    with pytest.raises(ValueError):
        TaskSchedule.from_lists(["a"], ["a", "b"])
    s = TaskSchedule.from_lists(["a"], ["b", "c"])
    assert TaskSchedule.from_dict(s.to_dict()) == s
    import json

    (tmp_path / "s.json").write_text(json.dumps(s.to_dict()))
    assert load_schedule(tmp_path / "s.json") == s


def test_replay_fifty_single_instance_images():
    m = build(["car"], [["car"]] * 120)
    sel = select_exemplar_replay(m, {"car"}, 50, seed=3)
    assert len(sel.image_ids) == 50 and sel.counts == {"car": 50} and sel.shortfall == {}


def test_replay_quota_met_by_first_image():
    m = build(["a", "b"], [["a", "b"]])
    assert select_exemplar_replay(m, {"a", "b"}, 1, seed=0).image_ids == ["im0000"]


def test_replay_shortfall():
    m = build(["rare", "common"], [["rare"]] * 30 + [["common"]] * 80)
    sel = select_exemplar_replay(m, {"rare", "common"}, 50, seed=1)
    assert sel.shortfall == {"rare": 20}
    rare_images = {f"im{k:04d}" for k in range(30)}
    assert rare_images <= set(sel.image_ids)


def test_replay_deterministic_and_seed_sensitive():
    m = build(["car"], [["car"]] * 120)
    a = select_exemplar_replay(m, {"car"}, 50, seed=7)
    assert a == select_exemplar_replay(m, {"car"}, 50, seed=7)
    assert a.image_ids != select_exemplar_replay(m, {"car"}, 50, seed=8).image_ids


def test_replay_errors():
    m = build(["car"], [["car"]])
    with pytest.raises(ValueError):
        select_exemplar_replay(m, {"car"}, 0)
    with pytest.raises(UnknownCategory):
        select_exemplar_replay(m, {"bus"})


def test_holdout_zero():
    m = kitti_manifest()
    ids, rest, _ = select_proposal_holdout(m, 0)
    assert ids == [] and rest == m


def test_holdout_everything():
    m = kitti_manifest()
    ids, rest, _ = select_proposal_holdout(m, len(m.images))
    assert len(ids) == len(m.images) and rest.images == [] and rest.annotations == []


def test_holdout_thousand_images():
    m = kitti_manifest(1000, seed=2)
    ids, rest, report = select_proposal_holdout(m, 500, seed=4)
    assert len(ids) == 500 and len(set(ids)) == 500
    assert not set(ids) & set(rest.image_ids)
    assert set(ids) | set(rest.image_ids) == set(m.image_ids)
    assert report.relaxed  # no random image carries all eight classes
    assert select_proposal_holdout(m, 500, seed=4).image_ids == ids


def test_holdout_prefers_full_coverage():
    per = [["a", "b"]] * 10 + [["a"]] * 10
    m = build(["a", "b"], per)
    ids, _, report = select_proposal_holdout(m, 5, seed=0)
    assert set(ids) <= {f"im{k:04d}" for k in range(10)}
    assert not report.relaxed and report.full_coverage_images == 10
    ids, _, report = select_proposal_holdout(m, 12, seed=0)
    assert report.relaxed and report.min_coverage_selected == 1


def test_holdout_errors():
    m = kitti_manifest(5)
    with pytest.raises(InsufficientImages):
        select_proposal_holdout(m, 6)
    with pytest.raises(ValueError):
        select_proposal_holdout(kitti_manifest(5, split="val"), 1)


def test_kitti_label_parsing(tmp_path):
    assert parse_label_line("DontCare -1 -1 -10 1 2 3 4 -1 -1 -1") is None
    kind, box = parse_label_line("Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59")
    assert kind == "car" and box == Box.from_xyxy(587.01, 173.33, 614.12, 200.12)
    labels = tmp_path / "labels"
    labels.mkdir()
    (labels / "000001.txt").write_text(
        "Car 0 0 0 10 10 50 40 0 0 0 0 0 0 0\nPerson_sitting 0 0 0 1 1 5 9 0 0 0 0 0 0 0\nDontCare -1 -1 -10 0 0 3 3 -1 -1 -1 0 0 0 0\n"
    )
    (labels / "000000.txt").write_text("Van 0 0 0 100 100 200 150 0 0 0 0 0 0 0\n")
    m = import_kitti(labels)
    assert m.image_ids == ["000000", "000001"]
    assert m.image("000000").width == 1242
    assert names_of(m) == {"van": 1, "car": 1, "person_sitting": 1}


def test_kitti_bad_line(tmp_path):
    (tmp_path / "a.txt").write_text("Car 0 0 0 10 10\n")
    with pytest.raises(ValueError, match="a.txt:1"):
        import_kitti(tmp_path)


def test_malformed_schedule(tmp_path):
    (tmp_path / "s.json").write_text('{"tasks": [[1, ["car"]]]}')
    with pytest.raises(ValueError, match="schedule"):
        load_schedule(tmp_path / "s.json")
