"""Backprojection and normal estimation."""

import numpy as np
import pytest

from treecut import Intrinsics, InputError, estimate_normals, load_frame, pointmap_from_arrays
from treecut.pngio import write_gray16, write_rgb8

from conftest import INTR, make_pointmap


class TestBackprojection:
    def test_principal_point_ray(self):
        # A pixel at the principal point backprojects straight down the axis.
        p = INTR.backproject(INTR.cx, INTR.cy, 1.0)
        assert np.allclose(p, [0.0, 0.0, 1.0])

    def test_one_focal_length_off_axis(self):
        # Expected point computed from the scalar pinhole equations.
        u, v, z = INTR.cx + INTR.fx, INTR.cy, 2.0
        ex = ((u - INTR.cx) * z / INTR.fx, (v - INTR.cy) * z / INTR.fy, z)
        assert ex == (2.0, 0.0, 2.0)
        assert np.allclose(INTR.backproject(u, v, z), ex)

    def test_missing_depth_marks_invalid(self):
        depth = np.ones((8, 8))
        depth[3, 4] = 0.0
        pm = pointmap_from_arrays(depth, np.zeros((8, 8, 3), np.uint8), INTR)
        assert not pm.valid[3, 4]
        assert pm.valid.sum() == 63

    def test_roundtrip_project(self):
        rng = np.random.default_rng(0)
        depth = rng.uniform(0.5, 4.0, size=(32, 40))
        pm = pointmap_from_arrays(depth, np.zeros((32, 40, 3), np.uint8), INTR)
        us, vs = np.meshgrid(np.arange(40), np.arange(32))
        u2, v2 = INTR.project(pm.points)
        assert np.abs(u2 - us).max() < 1e-6
        assert np.abs(v2 - vs).max() < 1e-6

    def test_dimension_mismatch_rejected(self, tmp_path):
        write_rgb8(tmp_path / "rgb.png", np.zeros((8, 8, 3), np.uint8))
        write_gray16(tmp_path / "depth.png", np.full((8, 9), 1000, np.uint16))
        with pytest.raises(InputError):
            load_frame(tmp_path / "rgb.png", tmp_path / "depth.png", INTR)

    def test_load_frame_scales_depth(self, tmp_path):
        write_rgb8(tmp_path / "rgb.png", np.zeros((4, 4, 3), np.uint8))
        write_gray16(tmp_path / "depth.png", np.full((4, 4), 1500, np.uint16))
        pm = load_frame(tmp_path / "rgb.png", tmp_path / "depth.png", INTR)
        assert np.allclose(pm.points[..., 2], 1.5)

    def test_bad_intrinsics_rejected(self):
        with pytest.raises(InputError):
            Intrinsics(fx=-1.0, fy=100.0, cx=0.0, cy=0.0)
        with pytest.raises(InputError):
            Intrinsics(fx=100.0, fy=100.0, cx=0.0, cy=0.0, depth_scale=0.0)


class TestNormals:
    def test_frontal_plane(self, frontal_pointmap):
        pm = frontal_pointmap
        assert pm.valid.all()
        assert np.abs(pm.normals - np.array([0.0, 0.0, -1.0])).max() < 1e-4

    def test_single_plane_all_within_half_degree(self):
        # Tilted plane z = 1 + 0.2 x + 0.1 y, true normal along (0.2, 0.1, -1).
        us, vs = np.meshgrid(np.arange(64), np.arange(48))
        x = (us - INTR.cx) / INTR.fx
        y = (vs - INTR.cy) / INTR.fy
        depth = 1.0 / (1.0 - 0.2 * x - 0.1 * y)
        pm = make_pointmap(depth)
        true_n = np.array([0.2, 0.1, -1.0])
        true_n /= np.linalg.norm(true_n)
        cosang = pm.normals[pm.valid] @ true_n
        ang = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
        assert pm.valid.all()
        assert ang.max() < 0.5

    def test_unit_length_and_camera_facing(self):
        rng = np.random.default_rng(1)
        depth = rng.uniform(0.5, 3.0, size=(40, 40))
        depth[rng.random((40, 40)) < 0.2] = 0.0
        pm = make_pointmap(depth)
        n = pm.normals[pm.valid]
        p = pm.points[pm.valid]
        assert np.abs(np.linalg.norm(n, axis=1) - 1.0).max() < 1e-6
        assert (np.einsum("ij,ij->i", n, p) <= 0).all()

    def test_isolated_pixel_invalidated(self):
        depth = np.zeros((15, 15))
        depth[7, 7] = 1.0
        pm = make_pointmap(depth, window=3)
        assert not pm.valid.any()

    def test_window_validation(self, frontal_pointmap):
        with pytest.raises(InputError):
            estimate_normals(frontal_pointmap, window=4)
        with pytest.raises(InputError):
            estimate_normals(frontal_pointmap, window=1)

    def test_input_not_mutated(self):
        pm = make_pointmap(np.ones((16, 16)), normals=False)
        estimate_normals(pm)
        assert np.all(pm.normals == 0.0)
