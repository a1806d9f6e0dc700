from .fhog import FeatureError, extract_fhog
from .encoders import (
    EmptyProjectionError, FeatureKind, BandSelection, FeatureConfig,
    extract_raw, hann_window, project_roi, projection_cells,
    rgb_planes, luminance, encode,
)
