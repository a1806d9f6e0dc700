from .scenario import (
    SpecError, TargetSpec, OccluderSpec, JitterSpec, BackgroundSpec, ScenarioSpec,
    load_scenario, save_scenario,
)
from .generator import generate, downsample, write_downsampled, camera_poses, ground_truth
