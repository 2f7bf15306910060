"""Image-to-BEV homographies and their estimation by normalized DLT."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, PointAtInfinity, TooFewPoints
from .geom import CameraRig

W_EPS = 1e-12
# ratio of the two smallest singular values of the DLT system below which
# the nullspace is considered ill-determined; noisy but well-spread points
# sit around 3-20, true near-degeneracies close to 1
DEGENERACY_RATIO = 2.0
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class HomographyMatrix:
    """3x3 image->BEV map, stored with unit Frobenius norm."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(3, 3)
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def normalized(cls, m, ref_points=None) -> "HomographyMatrix":
        """Scale ``m`` to unit Frobenius norm.

        The sign is chosen so that the homogeneous w of ``ref_points`` (an
        (N, 2) array of image points) sums to a positive value.
        """
        m = np.asarray(m, dtype=float)
        norm = np.linalg.norm(m)
        if norm == 0:
            raise DegenerateConfiguration("zero homography")
        m = m / norm
        if ref_points is not None:
            ref = np.atleast_2d(np.asarray(ref_points, dtype=float))
            w = ref @ m[2, :2] + m[2, 2]
            if w.sum() < 0:
                m = -m
        return cls(m)

    def flat(self) -> list[float]:
        return [float(x) for x in self.m.ravel()]


def apply(M: HomographyMatrix, uv) -> np.ndarray:
    """Map one image point to BEV."""
    x, y, w = M.m @ np.array([uv[0], uv[1], 1.0])
    if abs(w) <= W_EPS:
        raise PointAtInfinity(f"homogeneous w={w:.3g} at image point {tuple(uv)}")
    return np.array([x / w, y / w])


def apply_many(M: HomographyMatrix, uv) -> np.ndarray:
    """Vectorized :func:`apply` over an (N, 2) array."""
    uv = np.asarray(uv, dtype=float).reshape(-1, 2)
    h = np.hstack([uv, np.ones((len(uv), 1))]) @ M.m.T
    if np.any(np.abs(h[:, 2]) <= W_EPS):
        raise PointAtInfinity("at least one image point maps to infinity")
    return h[:, :2] / h[:, 2:3]


def up_to_scale_distance(A: HomographyMatrix, B: HomographyMatrix) -> float:
    a = A.m / np.linalg.norm(A.m)
    b = B.m / np.linalg.norm(B.m)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def hartley_normalization(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Similarity moving the centroid to 0 and the mean distance to sqrt(2)."""
    centroid = pts.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(pts - centroid, axis=1))
    if mean_dist < 1e-12:
        raise DegenerateConfiguration("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    T = np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])
    return (pts - centroid) * s, T


def _dlt_system(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    n = len(src)
    u, v = src[:, 0], src[:, 1]
    x, y = dst[:, 0], dst[:, 1]
    zeros, ones = np.zeros(n), np.ones(n)
    rows_a = np.column_stack([zeros, zeros, zeros, -u, -v, -ones, y * u, y * v, y])
    rows_b = np.column_stack([u, v, ones, zeros, zeros, zeros, -x * u, -x * v, -x])
    A = np.empty((2 * n, 9))
    A[0::2] = rows_a
    A[1::2] = rows_b
    return A


def dlt_solve(img_pts, bev_pts) -> HomographyMatrix:
    """Least-squares homography mapping ``img_pts`` onto ``bev_pts``.

    Both point sets are Hartley-normalized, the 2N x 9 system is solved by
    SVD, and the result is denormalized.
    """
    src = np.asarray(img_pts, dtype=float).reshape(-1, 2)
    dst = np.asarray(bev_pts, dtype=float).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError("point sets differ in length")
    if len(src) < 4:
        raise TooFewPoints(f"need at least 4 correspondences, got {len(src)}")
    src_n, T_src = hartley_normalization(src)
    dst_n, T_dst = hartley_normalization(dst)
    A = _dlt_system(src_n, dst_n)
    if A.shape[0] < 9:
        A = np.vstack([A, np.zeros((9 - A.shape[0], 9))])
    _, s, vt = np.linalg.svd(A)
    if s[-2] < DEGENERACY_RATIO * s[-1] or s[-2] <= RANK_TOL * s[0]:
        raise DegenerateConfiguration(
            f"ill-determined nullspace (singular values {s[-2]:.3g}, {s[-1]:.3g})"
        )
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.solve(T_dst, Hn @ T_src)
    return HomographyMatrix.normalized(H, ref_points=src)


def ground_truth_homography(rig: CameraRig) -> HomographyMatrix:
    """Exact image->BEV map of the ground plane z = 0 for ``rig``."""
    plane_to_image = rig.K @ np.column_stack([rig.R[:, 0], rig.R[:, 1], rig.T])
    s = np.linalg.svd(plane_to_image, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise DegenerateConfiguration("camera center lies on the ground plane")
    M = np.linalg.inv(plane_to_image)
    return HomographyMatrix.normalized(M, ref_points=[(rig.cx, rig.cy + 100.0)])


def reprojection_residuals(M: HomographyMatrix, img_pts, bev_pts) -> np.ndarray:
    return np.linalg.norm(apply_many(M, img_pts) - np.asarray(bev_pts, dtype=float), axis=1)
