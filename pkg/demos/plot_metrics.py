"""
COCO AP, wilderness impact and open-set error
=============================================
"""

from owdkit import Annotation, Box, Detection, absolute_open_set_error, coco_suite, wilderness_impact
from owdkit.metrics import format_table

truth = [
    Annotation("a", Box(0, 0, 20, 20), 1, 0),
    Annotation("a", Box(100, 100, 45, 50), 1, 1),
    Annotation("b", Box(200, 100, 114, 120), 2, 2),
]
dets = [
    Detection("a", Box(5, 0, 20, 20), 1, 0.9),  # IoU 0.6
    Detection("a", Box(105, 100, 45, 50), 1, 0.7),  # IoU 0.8
    Detection("b", Box(206, 100, 114, 120), 2, 0.8),  # IoU 0.9
    Detection("b", Box(0, 0, 30, 30), 2, 0.95),  # nothing there
]

rep = coco_suite(dets, truth)
print(format_table(rep.summary(), "COCO summary"))
print({t: round(v, 3) for t, v in rep.per_threshold_ap.items()})

# %%
# Ordering is all that matters: the same boxes scored the other way round.

flipped = [Detection(d.image_id, d.box, d.category, 1 - d.score) for d in dets]
print("AP50 %.3f -> %.3f" % (rep.ap50, coco_suite(flipped, truth).ap50))

# %%
# Open world: an unlabeled object that the detector calls a car.

unknown = [Annotation("b", Box(0, 0, 30, 30), 99, 3)]
wi = wilderness_impact(dets, truth, unknown)
print("P_K %.3f  P_KU %.3f  WI %.3f" % (wi.p_known, wi.p_mixed, wi.wi))
print("A-OSE", absolute_open_set_error(dets, unknown).a_ose)
