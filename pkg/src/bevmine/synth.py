"""Synthetic driving scenes and a monocular-detector noise model.

Boxes rest on a ground surface that is either flat (z = 0) or carries a
small smooth bump field. :func:`corrupt` turns ground truth into detections
whose error is dominated by depth, grows with distance, and comes with an
uncertainty estimate that tracks the true depth error with tunable fidelity.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import BehindCamera, PlacementFailure
from .geom import (
    Box3D,
    CameraRig,
    bottom_points_lidar,
    default_rig,
    normalize_yaw,
    project_point,
    ray_ground_displacement_per_meter,
)
from .mining import Detection

MAX_PLACEMENT_ATTEMPTS = 1000
N_BUMP_WAVES = 8
SIGMA_BASELINE = 0.1
SIGMA_FLOOR = 1e-4


@dataclass(frozen=True)
class SceneSpec:
    n_objects: int = 12
    x_range: tuple[float, float] = (5.0, 40.0)
    y_range: tuple[float, float] = (-15.0, 15.0)
    length_range: tuple[float, float] = (3.2, 4.8)
    width_range: tuple[float, float] = (1.5, 1.9)
    height_range: tuple[float, float] = (1.4, 1.7)
    rig: CameraRig = field(default_factory=default_rig)
    image_size: tuple[int, int] = (1242, 375)
    ground_bump_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_objects < 0:
            raise ValueError("n_objects must be non-negative")
        for name in ("x_range", "y_range", "length_range", "width_range", "height_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} is empty: {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.ground_bump_amplitude < 0:
            raise ValueError("ground_bump_amplitude must be non-negative")
        object.__setattr__(self, "ground_bump_amplitude", float(self.ground_bump_amplitude))
        object.__setattr__(self, "n_objects", int(self.n_objects))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "image_size", tuple(int(v) for v in self.image_size))

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "rig"}
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def digest(self) -> str:
        payload = self.to_dict()
        payload["rig"] = rig_to_dict(self.rig)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class ScoreModel:
    """Classification score as a function of 2D box height only."""

    base: float = 0.3
    gain: float = 0.6
    ref_height_px: float = 100.0
    noise_std: float = 0.12

    def score(self, rng: np.random.Generator, box_height_px: float) -> float:
        visibility = min(1.0, box_height_px / self.ref_height_px)
        s = self.base + self.gain * visibility + rng.normal(0.0, self.noise_std)
        return float(np.clip(s, 0.01, 0.99))


@dataclass(frozen=True)
class NoiseModel:
    depth_laplace_base: float = 0.01
    depth_laplace_per_meter: float = 0.005
    yaw_noise_std: float = 0.03
    size_noise_std: float = 0.03
    keypoint_pixel_std: float = 0.7
    sigma_fidelity: float = 0.8
    sigma_noise_std: float = 0.02
    score_model: ScoreModel = field(default_factory=ScoreModel)

    def __post_init__(self):
        for name in (
            "depth_laplace_base",
            "depth_laplace_per_meter",
            "yaw_noise_std",
            "size_noise_std",
            "keypoint_pixel_std",
            "sigma_noise_std",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.sigma_fidelity <= 1.0:
            raise ValueError("sigma_fidelity must lie in [0, 1]")

    @classmethod
    def noiseless(cls, **overrides) -> "NoiseModel":
        zero = dict(
            depth_laplace_base=0.0,
            depth_laplace_per_meter=0.0,
            yaw_noise_std=0.0,
            size_noise_std=0.0,
            keypoint_pixel_std=0.0,
            sigma_noise_std=0.0,
        )
        zero.update(overrides)
        return cls(**zero)


@dataclass(frozen=True, eq=False)
class SceneSample:
    boxes: list[Box3D]
    detections: list[Detection]
    rig: CameraRig
    spec: SceneSpec
    gt_match: list[int] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


class BumpField:
    """Smooth ground height: a sum of seeded plane waves.

    Scaled so that the largest absolute height over the placement region
    (sampled on a 121 x 121 grid) equals ``amplitude``.
    """

    def __init__(self, amplitude: float, x_range, y_range, rng: np.random.Generator):
        wavelengths = rng.uniform(4.0, 30.0, N_BUMP_WAVES)
        directions = rng.uniform(0.0, 2.0 * math.pi, N_BUMP_WAVES)
        self.kx = 2.0 * math.pi / wavelengths * np.cos(directions)
        self.ky = 2.0 * math.pi / wavelengths * np.sin(directions)
        self.phase = rng.uniform(0.0, 2.0 * math.pi, N_BUMP_WAVES)
        self.weights = rng.uniform(0.5, 1.0, N_BUMP_WAVES)
        self.scale = 0.0
        if amplitude > 0:
            gx, gy = np.meshgrid(np.linspace(*x_range, 121), np.linspace(*y_range, 121))
            peak = np.max(np.abs(self._raw(gx, gy)))
            self.scale = amplitude / peak

    def _raw(self, x, y):
        x = np.asarray(x, dtype=float)[..., None]
        y = np.asarray(y, dtype=float)[..., None]
        return np.sum(self.weights * np.sin(self.kx * x + self.ky * y + self.phase), axis=-1)

    def __call__(self, x, y):
        if self.scale == 0.0:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        return self.scale * self._raw(x, y)


def _streams(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _in_image(uv, size) -> bool:
    return 0.0 <= uv[0] < size[0] and 0.0 <= uv[1] < size[1]


def generate_scene(spec: SceneSpec) -> SceneSample:
    """Place ``spec.n_objects`` boxes on the ground, all visible from the rig."""
    bump_rng, place_rng = _streams(spec.seed, 2)
    bump = BumpField(spec.ground_bump_amplitude, spec.x_range, spec.y_range, bump_rng)
    rig = spec.rig
    boxes = []
    for k in range(spec.n_objects):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            x = place_rng.uniform(*spec.x_range)
            y = place_rng.uniform(*spec.y_range)
            yaw = place_rng.uniform(-math.pi, math.pi)
            lwh = [place_rng.uniform(*r) for r in (spec.length_range, spec.width_range, spec.height_range)]
            z = float(bump(x, y))
            box = Box3D((x, y, z), lwh[0], lwh[1], lwh[2], yaw)
            if _visible(rig, box, spec):
                boxes.append(box)
                break
        else:
            raise PlacementFailure(f"could not place object {k} in view after {MAX_PLACEMENT_ATTEMPTS} attempts")
    return SceneSample(
        boxes=boxes,
        detections=[],
        rig=rig,
        spec=spec,
        provenance={"seed": spec.seed, "spec_hash": spec.digest()},
    )


def _visible(rig: CameraRig, box: Box3D, spec: SceneSpec) -> bool:
    pts = bottom_points_lidar(box)
    try:
        uv, depth = project_point(rig, pts[0])
        corner_depths = [project_point(rig, p)[1] for p in pts[1:]]
    except BehindCamera:
        return False
    lo, hi = spec.x_range
    return _in_image(uv, spec.image_size) and lo <= depth <= hi and min(corner_depths) > 1.0


def box_corners_lidar(box: Box3D) -> np.ndarray:
    """All 8 corners, bottom face first."""
    bottom = bottom_points_lidar(box)[1:]
    top = bottom.copy()
    top[:, 2] += box.height
    return np.vstack([bottom, top])


def bbox_2d(rig: CameraRig, box: Box3D, image_size) -> tuple[float, float, float, float]:
    uv = np.array([project_point(rig, p)[0] for p in box_corners_lidar(box)])
    w, h = image_size
    u1, v1 = np.clip(uv.min(axis=0), 0.0, [w - 1.0, h - 1.0])
    u2, v2 = np.clip(uv.max(axis=0), 0.0, [w - 1.0, h - 1.0])
    return float(u1), float(v1), float(max(u2, u1 + 1.0)), float(max(v2, v1 + 1.0))


def true_depth(rig: CameraRig, box: Box3D) -> float:
    return project_point(rig, box.center)[1]


def corrupt(sample: SceneSample, noise: NoiseModel, seed: int, displacements=None) -> SceneSample:
    """Emit one noisy detection per box.

    ``displacements`` optionally maps box index -> BEV meters; for those
    boxes the Laplace depth error is replaced by the depth error that moves
    the bottom center that far along its viewing ray (sign drawn at random,
    flipped to positive if the depth would fall below 1 m).
    """
    displacements = displacements or {}
    rig = sample.rig
    rngs = _streams(seed, len(sample.boxes))
    detections = []
    for idx, (box, rng) in enumerate(zip(sample.boxes, rngs)):
        pts = bottom_points_lidar(box)
        kp = np.array([project_point(rig, p)[0] for p in pts])
        kp = kp + rng.normal(0.0, noise.keypoint_pixel_std, kp.shape) if noise.keypoint_pixel_std > 0 else kp
        d_true = true_depth(rig, box)

        scale = noise.depth_laplace_base + noise.depth_laplace_per_meter * d_true
        err = float(rng.laplace(0.0, scale)) if scale > 0 else 0.0
        sign = 1.0 if rng.random() < 0.5 else -1.0
        if idx in displacements:
            g = ray_ground_displacement_per_meter(rig, kp[0])
            err = sign * float(displacements[idx]) / g
            if d_true + err < 1.0:
                err = abs(err)
        depth = max(d_true + err, 1e-3)
        err = depth - d_true

        yaw = box.yaw + (rng.normal(0.0, noise.yaw_noise_std) if noise.yaw_noise_std > 0 else 0.0)
        size = np.array([box.length, box.width, box.height])
        if noise.size_noise_std > 0:
            size = np.maximum(size + rng.normal(0.0, noise.size_noise_std, 3), 0.1)

        g_fid = noise.sigma_fidelity
        sigma = g_fid * abs(err) + (1.0 - g_fid) * SIGMA_BASELINE
        if noise.sigma_noise_std > 0:
            sigma += rng.normal(0.0, noise.sigma_noise_std)
        sigma = max(sigma, SIGMA_FLOOR)

        bbox = bbox_2d(rig, box, sample.spec.image_size)
        score = noise.score_model.score(rng, bbox[3] - bbox[1])
        detections.append(
            Detection(
                class_id=0,
                score=score,
                bbox2d=bbox,
                keypoints_bottom=kp,
                depth=depth,
                size=tuple(size),
                yaw=normalize_yaw(yaw),
                sigma=float(sigma),
            )
        )
    return replace(sample, detections=detections, gt_match=list(range(len(sample.boxes))))


def depth_errors(sample: SceneSample) -> np.ndarray:
    """Signed depth error of every detection against its matched box."""
    return np.array(
        [det.depth - true_depth(sample.rig, sample.boxes[b]) for det, b in zip(sample.detections, sample.gt_match)]
    )


def rig_to_dict(rig: CameraRig) -> dict:
    return {
        "fx": float(rig.fx),
        "fy": float(rig.fy),
        "cx": float(rig.cx),
        "cy": float(rig.cy),
        "R": [float(x) for x in rig.R.ravel()],
        "T": [float(x) for x in rig.T],
    }


def rig_from_dict(d: dict) -> CameraRig:
    return CameraRig(d["fx"], d["fy"], d["cx"], d["cy"], np.array(d["R"]).reshape(3, 3), np.array(d["T"]))
