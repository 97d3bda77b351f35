"""Block-sparse video segmentation with temporal token reuse."""

from .backbone import (
    Architecture,
    BackboneSpec,
    SegmentationOutput,
    forward_dense,
    forward_ttr,
    init_backbone,
    process_stream,
)
from .cache import StageCacheSet, StreamState, new_stream
from .metrics import ConfusionMatrix, FrameStats, miou, pearson, pixel_accuracy
from .patching import Frame, PatchCache, SparsityMask, generate_mask

__version__ = "0.1.0"
