from .homography import Homography, DegeneracyError, accumulate, warp
from .keypoints import (
    Keypoint, DescribedKeypoints, Match,
    detect_keypoints, describe, match_descriptors,
)
from .ransac import EstimationError, RansacParams, estimate_homography_ransac
from .registrar import (
    RegistrationMode, RegistrationConfig, RegistrationResult, Registrar,
)
