"""Decoupled pseudo-label generation.

2D attributes are gated on the classification score alone. 3D attributes
start from the detections with low depth uncertainty and grow by
homography-based mining: fit an image->BEV homography to the current set,
then accept every other detection whose model-derived bottom center lands
within ``theta_h`` meters of where the homography puts its bottom-center
keypoint.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfiguration, InsufficientSeed, PointAtInfinity
from .geom import CameraRig, detection_bev_points, normalize_yaw
from .homography import HomographyMatrix, apply, dlt_solve

logger = logging.getLogger(__name__)

MIN_SEED_OBJECTS = 2


@dataclass(frozen=True, eq=False)
class Detection:
    """One teacher prediction.

    ``keypoints_bottom`` holds the image positions of the bottom center and
    the 4 bottom corners (same order as :func:`geom.bottom_points_lidar`).
    ``depth`` is the camera-frame depth of the bottom center, ``yaw`` is
    about the LiDAR up-axis and ``sigma`` is the predicted depth uncertainty.
    """

    class_id: int
    score: float
    bbox2d: tuple[float, float, float, float]
    keypoints_bottom: np.ndarray
    depth: float
    size: tuple[float, float, float]
    yaw: float
    sigma: float

    def __post_init__(self):
        kp = np.array(self.keypoints_bottom, dtype=float)
        if kp.shape != (5, 2):
            raise ValueError(f"keypoints_bottom must have shape (5, 2), got {kp.shape}")
        kp.setflags(write=False)
        object.__setattr__(self, "keypoints_bottom", kp)
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        u1, v1, u2, v2 = self.bbox2d
        if not (u1 < u2 and v1 < v2):
            raise ValueError(f"malformed 2D box {self.bbox2d}")
        if not self.depth > 0:
            raise ValueError(f"depth must be positive, got {self.depth}")
        if min(self.size) <= 0:
            raise ValueError("size entries must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "bbox2d", tuple(float(x) for x in self.bbox2d))
        object.__setattr__(self, "size", tuple(float(x) for x in self.size))
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))


@dataclass(frozen=True)
class MiningConfig:
    theta_c: float = 0.4
    theta_u: float = 0.1
    theta_h: float = 2.0
    t_max: int = 10
    background_score: float = 0.2
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("theta_c", "theta_u", "theta_h", "background_score", "alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")


@dataclass
class PseudoLabelSet:
    labels_2d: list[int]
    labels_3d: list[int]
    iterations_used: int
    per_candidate_error: dict[int, float] = field(default_factory=dict)
    homographies: list[HomographyMatrix] = field(default_factory=list)
    trace: list[list[int]] = field(default_factory=list)
    fallback: bool = False

    @property
    def homography(self) -> HomographyMatrix | None:
        """Homography from the last fit, if any."""
        return self.homographies[-1] if self.homographies else None


def background_filter(dets, cfg: MiningConfig) -> list[Detection]:
    return [d for d in dets if d.score > cfg.background_score]


def select_2d(dets, cfg: MiningConfig) -> list[int]:
    return [i for i, d in enumerate(dets) if d.score >= cfg.theta_c]


def uncertainty_filter(dets, cfg: MiningConfig) -> list[int]:
    return [i for i, d in enumerate(dets) if d.sigma < cfg.theta_u]


def localization_error(M: HomographyMatrix, det: Detection, rig: CameraRig) -> float:
    """BEV gap between the model-derived and homography-mapped bottom center."""
    from_model = detection_bev_points(rig, det)[0]
    from_image = apply(M, det.keypoints_bottom[0])
    return float(np.linalg.norm(from_model - from_image))


def _fit(dets, members, rig: CameraRig) -> HomographyMatrix:
    img = np.concatenate([dets[i].keypoints_bottom for i in members])
    bev = np.concatenate([detection_bev_points(rig, dets[i]) for i in members])
    return dlt_solve(img, bev)


def _seed_fit(dets, seed, rig: CameraRig) -> HomographyMatrix:
    if len(seed) < MIN_SEED_OBJECTS:
        raise InsufficientSeed(f"{len(seed)} seed detection(s), need {MIN_SEED_OBJECTS}")
    try:
        return _fit(dets, seed, rig)
    except DegenerateConfiguration as exc:
        raise InsufficientSeed(str(exc)) from exc


def hpm_mine(dets, rig: CameraRig, cfg: MiningConfig) -> PseudoLabelSet:
    """Iterative homography-based mining of 3D pseudo-labels.

    ``dets`` should already be background-filtered; returned indices refer
    to positions in ``dets``. When the uncertainty seed cannot support a fit
    the seed is returned as-is with ``iterations_used == 0``.
    """
    dets = list(dets)
    seed = uncertainty_filter(dets, cfg)
    labels_2d = select_2d(dets, cfg)
    result = PseudoLabelSet(labels_2d=labels_2d, labels_3d=list(seed), iterations_used=0, trace=[list(seed)])

    try:
        M = _seed_fit(dets, seed, rig)
    except InsufficientSeed as exc:
        logger.debug("mining fallback: %s", exc)
        result.fallback = True
        return result

    selected = list(seed)
    in_set = set(selected)
    for t in range(1, cfg.t_max + 1):
        if t > 1:
            try:
                M = _fit(dets, selected, rig)
            except DegenerateConfiguration:
                # a superset of a fittable set; keep the previous estimate's selection
                logger.warning("DLT degenerate at iteration %d, stopping", t)
                break
        result.homographies.append(M)
        result.iterations_used = t
        added = []
        for j, det in enumerate(dets):
            if j in in_set:
                continue
            try:
                eps = localization_error(M, det, rig)
            except PointAtInfinity:
                eps = math.inf
            result.per_candidate_error[j] = eps
            if eps < cfg.theta_h:
                added.append(j)
        selected = selected + added
        in_set.update(added)
        result.trace.append(list(selected))
        if not added:
            break

    result.labels_3d = selected
    return result


def decoupled_generate(dets, rig: CameraRig, cfg: MiningConfig) -> PseudoLabelSet:
    """Background filter, then independent 2D and 3D selection.

    Indices in the result refer to positions in the raw ``dets`` list.
    """
    dets = list(dets)
    kept = [i for i, d in enumerate(dets) if d.score > cfg.background_score]
    inner = hpm_mine([dets[i] for i in kept], rig, cfg)
    return PseudoLabelSet(
        labels_2d=[kept[i] for i in inner.labels_2d],
        labels_3d=[kept[i] for i in inner.labels_3d],
        iterations_used=inner.iterations_used,
        per_candidate_error={kept[i]: e for i, e in inner.per_candidate_error.items()},
        homographies=inner.homographies,
        trace=[[kept[i] for i in step] for step in inner.trace],
        fallback=inner.fallback,
    )
