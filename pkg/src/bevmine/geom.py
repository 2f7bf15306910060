"""Pinhole camera model and box geometry.

Frames
------
LiDAR:  x forward, y left, z up; the ground is the plane z = 0.
Camera: x right, y down, z forward (optical axis).
Image:  u right, v down, pixels.

``CameraRig.R`` and ``CameraRig.T`` map LiDAR points into the camera frame,
``p_cam = R @ p_lidar + T``. Points are plain numpy arrays: image points are
``(u, v)``, camera points ``(x, y, z)`` and BEV points ``(x, y)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCamera, NonPositiveDepth

MIN_DEPTH = 1e-6
_ORTHO_TOL = 1e-9


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = -((math.pi - yaw) % (2.0 * math.pi) - math.pi)
    return float(wrapped)


@dataclass(frozen=True, eq=False)
class CameraRig:
    fx: float
    fy: float
    cx: float
    cy: float
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    T: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        R = np.asarray(self.R, dtype=float).reshape(3, 3)
        T = np.asarray(self.T, dtype=float).reshape(3)
        if np.linalg.norm(R.T @ R - np.eye(3)) > _ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise ValueError("R must be a proper rotation matrix")
        R.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "T", T)

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def K_inv(self) -> np.ndarray:
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )

    @property
    def center(self) -> np.ndarray:
        """Optical center in the LiDAR frame."""
        return -self.R.T @ self.T

    @classmethod
    def mounted(
        cls,
        fx: float,
        fy: float,
        cx: float,
        cy: float,
        height: float = 1.65,
        pitch: float = 0.0,
        yaw: float = 0.0,
        roll: float = 0.0,
        position_xy: tuple[float, float] = (0.0, 0.0),
    ) -> "CameraRig":
        """Build a rig for a camera at ``height`` above the ground.

        ``pitch`` > 0 tilts the optical axis down, ``yaw`` turns it left about
        the LiDAR up-axis, ``roll`` spins the image about the optical axis.
        """
        cp, sp = math.cos(pitch), math.sin(pitch)
        cyaw, syaw = math.cos(yaw), math.sin(yaw)
        z_axis = np.array([cp * cyaw, cp * syaw, -sp])
        x_axis = np.array([syaw, -cyaw, 0.0])
        y_axis = np.cross(z_axis, x_axis)
        cr, sr = math.cos(roll), math.sin(roll)
        x_rolled = cr * x_axis + sr * y_axis
        y_rolled = -sr * x_axis + cr * y_axis
        R = np.stack([x_rolled, y_rolled, z_axis])
        C = np.array([position_xy[0], position_xy[1], height])
        return cls(fx, fy, cx, cy, R, -R @ C)


def default_rig() -> CameraRig:
    """KITTI-like front camera, 1.65 m above the ground, level."""
    return CameraRig.mounted(721.5377, 721.5377, 609.5593, 172.854, height=1.65)


@dataclass(frozen=True)
class Box3D:
    """Ground-truth box; ``center`` is the bottom-face center in the LiDAR frame."""

    center: tuple[float, float, float]
    length: float
    width: float
    height: float
    yaw: float

    def __post_init__(self):
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError("box dimensions must be strictly positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))


def project_point(rig: CameraRig, p_lidar) -> tuple[np.ndarray, float]:
    """Project a LiDAR-frame point; returns ``(uv, depth)``."""
    p_cam = rig.R @ np.asarray(p_lidar, dtype=float) + rig.T
    z = p_cam[2]
    if not z > MIN_DEPTH:
        raise BehindCamera(f"camera-frame depth {z:.6g} is not in front of the camera")
    uv = np.array([rig.fx * p_cam[0] / z + rig.cx, rig.fy * p_cam[1] / z + rig.cy])
    return uv, float(z)


def image_to_camera(rig: CameraRig, uv, z: float) -> np.ndarray:
    """Back-project pixel ``uv`` at camera depth ``z``: K^-1 [z*u, z*v, z]."""
    if not z > 0:
        raise NonPositiveDepth(f"depth must be positive, got {z}")
    u, v = float(uv[0]), float(uv[1])
    return np.array([(u - rig.cx) * z / rig.fx, (v - rig.cy) * z / rig.fy, float(z)])


def lidar_to_camera(rig: CameraRig, p_lidar) -> np.ndarray:
    return rig.R @ np.asarray(p_lidar, dtype=float) + rig.T


def camera_to_lidar(rig: CameraRig, p_cam) -> np.ndarray:
    return rig.R.T @ (np.asarray(p_cam, dtype=float) - rig.T)


def to_bev(p_lidar) -> np.ndarray:
    p = np.asarray(p_lidar, dtype=float)
    return p[..., :2].copy()


def bottom_points_lidar(box: Box3D) -> np.ndarray:
    """Bottom center followed by the 4 bottom corners, shape (5, 3).

    Corners run counterclockwise seen from above, starting at (+l/2, +w/2)
    in the box frame.
    """
    return _bottom_points(np.asarray(box.center, dtype=float), box.length, box.width, box.yaw)


def _bottom_points(center: np.ndarray, length: float, width: float, yaw: float) -> np.ndarray:
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[0.0, 0.0], [hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s], [s, c]])
    pts = np.empty((5, 3))
    pts[:, :2] = local @ rot.T + center[:2]
    pts[:, 2] = center[2]
    return pts


def detection_bev_points(rig: CameraRig, det) -> np.ndarray:
    """BEV coordinates of a detection's 5 bottom points, shape (5, 2).

    The bottom-center keypoint is lifted to the camera frame at the predicted
    depth, moved to the LiDAR frame, and the corners are laid out around it
    from the predicted size and yaw. Only the 3D attributes decide where the
    corners land; the corner keypoints are not used.
    """
    p_cam = image_to_camera(rig, det.keypoints_bottom[0], det.depth)
    center = camera_to_lidar(rig, p_cam)
    length, width = det.size[0], det.size[1]
    return to_bev(_bottom_points(center, length, width, det.yaw))


def ray_ground_displacement_per_meter(rig: CameraRig, uv) -> float:
    """BEV distance moved per meter of camera depth along the ray through ``uv``."""
    direction = rig.R.T @ (rig.K_inv @ np.array([uv[0], uv[1], 1.0]))
    return float(np.hypot(direction[0], direction[1]))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed proper rotation (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
