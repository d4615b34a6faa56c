"""
Open-world task splits
======================

Build the KITTI task views, an exemplar replay set and a proposal holdout
from a small random manifest.
"""

import numpy as np

from owdkit import PRESETS, make_task_view, select_exemplar_replay, select_proposal_holdout
from owdkit.geometry import Annotation, Box
from owdkit.kitti import KITTI_CLASSES
from owdkit.manifest import DatasetManifest, ImageRecord

rng = np.random.default_rng(0)
cats = [(i + 1, n) for i, n in enumerate(KITTI_CLASSES)]
images, anns = [], []
for k in range(200):
    images.append(ImageRecord(f"{k:06d}", f"{k:06d}.png", 1242, 375))
    for j in range(rng.integers(1, 6)):
        c = int(rng.choice([1, 1, 1, 2, 3, 4, 6, 7, 8]))
        anns.append(Annotation(f"{k:06d}", Box(50 * j, 100, 40, 30), c, len(anns)))
m = DatasetManifest(cats, images, anns, "train")

schedule = PRESETS["kitti"].schedule
for t in schedule.task_ids:
    print("task", t, "known", sorted(schedule.known_at(t)), "unknown", sorted(schedule.unknown_at(t)))

# %%
# Train views keep only the new classes; val views mark future classes unknown.

train1 = make_task_view(m, schedule, 1, "train")
val1 = make_task_view(m, schedule, 1, "val")
print("task 1 train:", train1.instance_counts())
print("task 1 val:  ", val1.instance_counts())
print("task 3 val:  ", make_task_view(m, schedule, 3, "val").instance_counts())

# %%
# Replay accumulates images until each known class has 50 instances.

sel = select_exemplar_replay(m, schedule.known_at(2), 50, seed=0)
print(len(sel.image_ids), "replay images", sel.counts, "shortfall", sel.shortfall)

# %%
# The holdout prefers images that contain as many classes as possible.

ids, rest, report = select_proposal_holdout(m, 20, seed=0)
print(len(ids), "held out,", len(rest.images), "left;", report.to_dict())
