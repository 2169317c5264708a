from .ablation import (
    AblationConfig,
    NoiseSpec,
    noise_grid,
    noise_rng,
    perturb_pose,
    run_baseline,
    run_elevation_ablation,
    run_pose_ablation,
    run_resolution_ablation,
    run_timing_ablation,
    sample_noise,
    scene_lulc,
)
from .capture import CapturedFrame, capture_frames, truth_mask_provider, truth_segments
from .scene import (
    SynthConfig,
    SynthScene,
    Trajectory,
    TrajectoryConfig,
    generate_scene,
    majority_pool,
    make_trajectory,
    write_scene,
)

__all__ = [
    "AblationConfig",
    "CapturedFrame",
    "NoiseSpec",
    "SynthConfig",
    "SynthScene",
    "Trajectory",
    "TrajectoryConfig",
    "capture_frames",
    "generate_scene",
    "majority_pool",
    "make_trajectory",
    "noise_grid",
    "noise_rng",
    "perturb_pose",
    "run_baseline",
    "run_elevation_ablation",
    "run_pose_ablation",
    "run_resolution_ablation",
    "run_timing_ablation",
    "sample_noise",
    "scene_lulc",
    "truth_mask_provider",
    "truth_segments",
    "write_scene",
]
