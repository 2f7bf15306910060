import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bevmine.errors import DegenerateConfiguration, PointAtInfinity, TooFewPoints
from bevmine.geom import CameraRig, default_rig, project_point, to_bev
from bevmine.homography import (
    HomographyMatrix,
    apply,
    apply_many,
    dlt_solve,
    ground_truth_homography,
    reprojection_residuals,
    up_to_scale_distance,
)

SHIFT = np.array([[1.0, 0, 5], [0, 1, -3], [0, 0, 1]])


def _w(M, uv):
    return (M.m @ np.array([uv[0], uv[1], 1.0]))[2]


def _ground_pairs(rig, rng, n, x=(5, 60), y=(-15, 15)):
    bev = np.column_stack([rng.uniform(*x, n), rng.uniform(*y, n)])
    img = np.array([project_point(rig, (px, py, 0.0))[0] for px, py in bev])
    return img, bev


class TestApply:
    def test_identity(self):
        np.testing.assert_allclose(apply(HomographyMatrix(np.eye(3)), (3, 4)), [3, 4])

    def test_translation(self):
        np.testing.assert_allclose(apply(HomographyMatrix(SHIFT), (0, 0)), [5, -3])

    def test_scaling(self):
        np.testing.assert_allclose(apply(HomographyMatrix(np.diag([2.0, 2, 1])), (3, 4)), [6, 8])

    def test_point_at_infinity(self):
        M = HomographyMatrix([[1, 0, 0], [0, 1, 0], [1, 0, 0]])
        with pytest.raises(PointAtInfinity):
            apply(M, (0.0, 5.0))
        with pytest.raises(PointAtInfinity):
            apply_many(M, [(1.0, 1.0), (0.0, 5.0)])

    @settings(max_examples=100, deadline=None)
    @given(scale=st.floats(1e-3, 1e3), u=st.floats(-500, 500), v=st.floats(-500, 500))
    def test_projective(self, scale, u, v):
        m = np.array([[1.2, 0.1, 3], [-0.2, 0.9, 1], [1e-3, 2e-3, 1]])
        if abs(np.array([u, v, 1.0]) @ m[2]) < 1e-3:
            return
        a = apply(HomographyMatrix(m), (u, v))
        b = apply(HomographyMatrix(scale * m), (u, v))
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)


class TestDistance:
    def test_reflexive_and_scale(self):
        M = HomographyMatrix(SHIFT)
        assert up_to_scale_distance(M, M) == 0
        assert up_to_scale_distance(M, HomographyMatrix(7 * SHIFT)) < 1e-15
        assert up_to_scale_distance(M, HomographyMatrix(-7 * SHIFT)) < 1e-15

    def test_formula(self):
        a = np.eye(3) / math.sqrt(3)
        b = np.diag([2.0, 2, 1]) / 3.0
        expected = np.linalg.norm(a - b)
        got = up_to_scale_distance(HomographyMatrix(np.eye(3)), HomographyMatrix(np.diag([2.0, 2, 1])))
        assert got == pytest.approx(expected, abs=1e-15)
        assert got > 0


class TestDlt:
    def test_identity(self):
        pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1.5]], dtype=float)
        M = dlt_solve(pts, pts)
        assert up_to_scale_distance(M, HomographyMatrix(np.eye(3))) <= 1e-8

    def test_translation(self):
        rng = np.random.default_rng(0)
        src = rng.uniform(-50, 50, (20, 2))
        dst = apply_many(HomographyMatrix(SHIFT), src)
        M = dlt_solve(src, dst)
        assert up_to_scale_distance(M, HomographyMatrix(SHIFT)) <= 1e-8
        assert reprojection_residuals(M, src, dst).max() <= 1e-8

    def test_collinear(self):
        u = np.linspace(0, 9, 10)
        src = np.column_stack([u, 2 * u])
        with pytest.raises(DegenerateConfiguration):
            dlt_solve(src, src * 3)

    def test_coincident(self):
        with pytest.raises(DegenerateConfiguration):
            dlt_solve(np.ones((6, 2)), np.ones((6, 2)))

    def test_too_few(self):
        with pytest.raises(TooFewPoints):
            dlt_solve(np.eye(3, 2), np.eye(3, 2))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dlt_solve(np.zeros((5, 2)), np.zeros((4, 2)))

    def test_normalized_and_signed(self):
        rng = np.random.default_rng(2)
        src = rng.uniform(0, 100, (10, 2))
        M = dlt_solve(src, apply_many(HomographyMatrix(-3 * SHIFT), src))
        assert np.linalg.norm(M.m) == pytest.approx(1.0)
        assert sum(_w(M, p) for p in src) > 0

    def test_translation_equivariance(self):
        rng = np.random.default_rng(3)
        m_star = np.array([[0.9, 0.2, 4], [-0.1, 1.1, -2], [1e-3, -5e-4, 1]])
        src = rng.uniform(0, 300, (30, 2))
        dst = apply_many(HomographyMatrix(m_star), src)
        t = np.array([123.0, -45.0])
        M = dlt_solve(src, dst)
        M_shift = dlt_solve(src + t, dst)
        back = np.array([[1, 0, -t[0]], [0, 1, -t[1]], [0, 0, 1.0]])
        assert up_to_scale_distance(M_shift, HomographyMatrix(M.m @ back)) <= 1e-7

    def test_noise_beats_identity(self):
        rig = default_rig()
        rng = np.random.default_rng(4)
        img, bev = _ground_pairs(rig, rng, 50, x=(5, 40))
        noisy = img + rng.normal(0, 0.5, img.shape)
        M = dlt_solve(noisy, bev)
        fit = reprojection_residuals(M, noisy, bev).mean()
        ident = reprojection_residuals(HomographyMatrix(np.eye(3)), noisy, bev).mean()
        assert fit < ident

    def test_single_box_is_solvable(self):
        # center of a rectangle is the diagonal intersection, so exact
        # data from one box still pins down the map
        rig = default_rig()
        corners = np.array([[20, 1, 0], [16, 1, 0], [16, -1, 0], [20, -1, 0.0]])
        pts = np.vstack([corners.mean(axis=0), corners])
        img = np.array([project_point(rig, p)[0] for p in pts])
        M = dlt_solve(img, to_bev(pts))
        assert reprojection_residuals(M, img, to_bev(pts)).max() < 1e-8


class TestGroundHomography:
    def test_maps_ground_points(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            rig = CameraRig.mounted(
                rng.uniform(500, 1500), rng.uniform(500, 1500), 600, 200,
                height=rng.uniform(1.0, 3.0), pitch=rng.uniform(-0.1, 0.3), yaw=rng.uniform(-0.3, 0.3),
            )
            M = ground_truth_homography(rig)
            img, bev = _ground_pairs(rig, rng, 30)
            assert reprojection_residuals(M, img, bev).max() <= 1e-6

    def test_level_camera_rank3(self):
        rig = CameraRig.mounted(700, 700, 600, 180, height=1.65, pitch=0.0)
        M = ground_truth_homography(rig)
        s = np.linalg.svd(M.m, compute_uv=False)
        assert s[-1] > 1e-10 * s[0]
        assert _w(M, (rig.cx, rig.cy + 100)) > 0

    def test_camera_on_ground_plane(self):
        rig = CameraRig.mounted(700, 700, 600, 180, height=0.0)
        with pytest.raises(DegenerateConfiguration):
            ground_truth_homography(rig)

    def test_dlt_agrees(self):
        rig = default_rig()
        img, bev = _ground_pairs(rig, np.random.default_rng(6), 50)
        assert up_to_scale_distance(dlt_solve(img, bev), ground_truth_homography(rig)) <= 1e-7
