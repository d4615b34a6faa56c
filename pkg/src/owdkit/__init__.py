"""Saliency fusion, open-world relabeling, task splits and detection metrics."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .fusion import FusionWeights, expand_channels, merge
from .geometry import Annotation, Box, Detection, SizeBucket, classify_size, clip_box, iou, iou_matrix
from .manifest import DatasetManifest, ImageRecord, load_manifest, save_manifest
from .metrics import (
    MatchTable,
    MetricsReport,
    OseReport,
    WildernessReport,
    absolute_open_set_error,
    average_precision,
    average_recall,
    coco_suite,
    match_greedy,
    wilderness_impact,
)
from .relabel import ProposalSet, RelabelConfig, relabel_dataset, relabel_image
from .saliency import SpectralConfig, dft2d_forward, dft2d_inverse, region_saliency, spectral_residual
from .splits import (
    PRESETS,
    ClassMergeMap,
    TaskSchedule,
    make_openset_view,
    make_task_view,
    merge_classes,
    select_exemplar_replay,
    select_proposal_holdout,
)
