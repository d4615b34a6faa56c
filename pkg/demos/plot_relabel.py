"""
Turning proposals into unknown-class annotations
================================================

Proposals that overlap a labeled object by more than alpha IoU are known.
The rest become ``unknown`` annotations, minus near-duplicates.
"""

from owdkit import Annotation, Box, ProposalSet, RelabelConfig
from owdkit.manifest import DatasetManifest, ImageRecord
from owdkit.relabel import relabel_dataset_detailed, relabel_image_detailed

truth = [Annotation("img", Box(0, 0, 10, 10), 1, "car-0")]
proposals = ProposalSet(
    "img",
    [
        Box(0, 0, 10, 10),  # the car itself
        Box(0, 0, 3, 10),  # IoU exactly 0.3, not above alpha
        Box(40, 40, 8, 8),  # nothing there
        Box(40, 40, 8, 7.5),  # same thing again
    ],
)

res = relabel_image_detailed(proposals, truth, RelabelConfig(alpha=0.3, unknown_category=9))
print("labels:", res.labels)
print("counts:", res.counts())
for a in res.annotations:
    print("  ", a.instance_id, a.category, a.box.as_list())

# %%
# Larger alpha means more proposals fall below it and turn unknown.

for alpha in (0.1, 0.3, 0.5, 0.9):
    cfg = RelabelConfig(alpha=alpha, unknown_category=9)
    p = ProposalSet("img", [Box(2, 0, 10, 10), Box(5, 0, 10, 10), Box(8, 0, 10, 10)])
    print("alpha %.1f -> %d unknown" % (alpha, relabel_image_detailed(p, truth, cfg).labels.count(9)))

# %%
# On a whole manifest, an ``unknown`` category is appended to the table.

m = DatasetManifest([(1, "car")], [ImageRecord("img", "img.png", 64, 64)], truth)
out = relabel_dataset_detailed(m, {"img": proposals})
print(out.manifest.categories, out.counts)
