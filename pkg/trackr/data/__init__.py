from .stack import ChannelStack, Rect, crop, concat
from .formats import (
    FormatError, SizeMismatchError,
    load_frame, save_frame, load_feature_map, save_feature_map,
)
from .manifest import (
    ManifestError, FrameEntry, SequenceManifest,
    load_manifest, save_manifest, read_ground_truth, write_ground_truth,
)
