"""Homography-based 3D pseudo-label mining and depth-gradient projection."""

from .errors import BevMineError
from .geom import Box3D, CameraRig, default_rig
from .homography import HomographyMatrix, dlt_solve, ground_truth_homography
from .mining import Detection, MiningConfig, PseudoLabelSet, decoupled_generate, hpm_mine
from .gradproj import HarnessConfig, project_depth_gradient, run_toy_experiment
from .synth import NoiseModel, SceneSpec, corrupt, generate_scene

__version__ = "0.1.0"

__all__ = [
    "BevMineError",
    "Box3D",
    "CameraRig",
    "default_rig",
    "HomographyMatrix",
    "dlt_solve",
    "ground_truth_homography",
    "Detection",
    "MiningConfig",
    "PseudoLabelSet",
    "decoupled_generate",
    "hpm_mine",
    "HarnessConfig",
    "project_depth_gradient",
    "run_toy_experiment",
    "NoiseModel",
    "SceneSpec",
    "corrupt",
    "generate_scene",
]
