from .grid import Fusion, GridConfig, FusionResult, grid_rois, full_roi, overlap, fuse
from .sources import (
    IngestionError, FeatureMap, FeatureSource, PatchFeatures, MappedFeatures,
    feature_map_path, load_frame_features,
)
from .tracker import (
    TrackerConfig, TrackState, MultiRoiTracker, detect_grid, load_tracker_config,
)
