"""Gesture-to-plane constructors and the manual plane parameterization."""

import numpy as np
import pytest

from tiltshift.errors import CollinearPoints, InvalidPixel, OutOfRange
from tiltshift.geometry import CameraCalibration, RefocusPlane, make_intrinsics
from tiltshift.interaction import (
    ManualPlaneState,
    adjust_plane,
    manual_from_plane,
    plane_from_click,
    plane_from_manual,
    plane_from_three_points,
)
from tiltshift.pointcloud import build_point_cloud, estimate_normals, raster_normal_map
from tiltshift.refocus import make_aperture, refocus_generalized
from tiltshift.synthetic import make_scene, psnr, render_scene


def _cal(t=(0, 0, 0), R=None):
    return CameraCalibration(K=make_intrinsics(100.0, 100.0, 16.0, 16.0),
                             R=np.eye(3) if R is None else R,
                             t=np.asarray(t, dtype=np.float64))


@pytest.fixture(scope="module")
def clickable_scene():
    scene = make_scene(image_size=(32, 32), plane_depth=2.0)
    ds = render_scene(scene)
    cloud = estimate_normals(build_point_cloud(ds, views="reference"), k=8, ds=ds)
    nmap = raster_normal_map(cloud, ds.width, ds.height)
    return scene, ds, nmap


class TestPlaneFromClick:
    def test_click_recovers_ground_truth(self, clickable_scene):
        scene, ds, nmap = clickable_scene
        plane = plane_from_click(ds, (1, 1), (16, 16), nmap)
        assert plane.p[2] == pytest.approx(2.0, abs=1e-3)
        # normal is camera-facing, ground truth up to sign
        angle = np.degrees(np.arccos(abs(plane.n @ scene.plane.n)))
        assert angle <= 2.0
        out = refocus_generalized(ds, make_aperture(ds, (1, 1), 2.0), plane,
                                  ds.calibrations[(1, 1)])
        assert psnr(out.image, ds.views[(1, 1)], out.coverage > 0) >= 40.0

    def test_click_on_invalid_region(self, clickable_scene):
        scene, ds, nmap = clickable_scene
        hole = np.array(nmap.valid_mask)
        hole[4:18, 4:18] = False  # bigger than the 3 px search radius
        broken = type(nmap)(normals=nmap.normals, valid_mask=hole)
        with pytest.raises(InvalidPixel):
            plane_from_click(ds, (1, 1), (11, 11), broken)

    def test_click_outside_image(self, clickable_scene):
        _, ds, nmap = clickable_scene
        with pytest.raises(InvalidPixel):
            plane_from_click(ds, (1, 1), (500, 4), nmap)

    def test_adjacent_clicks_agree(self, clickable_scene):
        # flat synthetic surface: planes from neighboring pixels must match
        # to 2 degrees and 1 percent in distance
        scene, ds, nmap = clickable_scene
        ref_cal = ds.calibrations[(1, 1)]
        p1 = plane_from_click(ds, (1, 1), (15, 16), nmap)
        p2 = plane_from_click(ds, (1, 1), (16, 16), nmap)
        angle = np.degrees(np.arccos(np.clip(abs(p1.n @ p2.n), -1, 1)))
        assert angle <= 2.0
        d1 = abs((p1.p - ref_cal.t) @ p1.n)
        d2 = abs((p2.p - ref_cal.t) @ p2.n)
        assert abs(d1 - d2) <= 0.01 * d1

    def test_small_mask_hole_recovered(self, clickable_scene):
        # a single invalid pixel within the search radius still resolves
        scene, ds, nmap = clickable_scene
        hole = np.array(nmap.valid_mask)
        hole[16, 16] = False
        patched = type(nmap)(normals=nmap.normals, valid_mask=hole)
        plane = plane_from_click(ds, (1, 1), (16, 16), patched)
        assert plane.p[2] == pytest.approx(2.0, abs=1e-3)


class TestPlaneFromThreePoints:
    def test_canonical_triangle(self):
        plane = plane_from_three_points((0, 0, 0), (1, 0, 0), (0, 1, 0))
        np.testing.assert_allclose(np.abs(plane.n), [0, 0, 1])
        for x in [(0, 0, 0), (1, 0, 0), (0, 1, 0)]:
            assert plane.signed_distance(np.asarray(x, float)) == 0.0

    def test_collinear(self):
        with pytest.raises(CollinearPoints):
            plane_from_three_points((0, 0, 0), (1, 0, 0), (2, 0, 0))

    def test_residuals_vanish_on_random_triples(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            a, b, c = rng.uniform(-5, 5, size=(3, 3))
            try:
                plane = plane_from_three_points(a, b, c)
            except CollinearPoints:
                continue
            for x in (a, b, c):
                assert abs(plane.signed_distance(x)) <= 1e-12

    def test_permutation_equivalent(self):
        from itertools import permutations
        rng = np.random.default_rng(4)
        pts = rng.uniform(-2, 2, size=(3, 3))
        probe = rng.uniform(-2, 2, size=(20, 3))
        reference = None
        for perm in permutations(range(3)):
            plane = plane_from_three_points(*pts[list(perm)])
            dists = np.abs(plane.signed_distance(probe))
            if reference is None:
                reference = dists
            np.testing.assert_allclose(dists, reference, atol=1e-12)

    def test_camera_facing_flip(self):
        plane = plane_from_three_points((0, 0, 2), (1, 0, 2), (0, 1, 2),
                                        camera_center=(0, 0, 0))
        assert plane.n @ np.array([0, 0, -2.0]) > 0


class TestPlaneFromManual:
    def test_zero_rotation_frontoparallel(self):
        plane = plane_from_manual(ManualPlaneState(z=2.0), _cal())
        np.testing.assert_allclose(plane.p, [0, 0, 2])
        np.testing.assert_allclose(plane.n, [0, 0, 1])

    def test_rot_y_45(self):
        # n = R_y(45) e_z = (sin 45, 0, cos 45) in the reference frame
        plane = plane_from_manual(ManualPlaneState(z=2.0, rot_y=45.0), _cal())
        s = np.sin(np.pi / 4)
        np.testing.assert_allclose(plane.n, [s, 0, s], atol=1e-12)

    def test_z_step_decoupled(self):
        a = plane_from_manual(ManualPlaneState(z=2.0, rot_y=30.0), _cal())
        b = plane_from_manual(ManualPlaneState(z=2.1, rot_y=30.0), _cal())
        np.testing.assert_allclose(b.p - a.p, [0, 0, 0.1], atol=1e-12)
        np.testing.assert_allclose(a.n, b.n)

    def test_rotated_reference_camera(self):
        # the manual plane lives in the reference camera frame
        from tiltshift.geometry import rotation_y
        R = rotation_y(30.0).T  # world-to-camera
        cal = _cal(t=(0.5, 0, 0), R=R)
        plane = plane_from_manual(ManualPlaneState(z=2.0), cal)
        np.testing.assert_allclose(plane.p, cal.t + 2.0 * cal.optical_axis)
        np.testing.assert_allclose(plane.n, cal.optical_axis, atol=1e-12)

    def test_rot_z_inert(self):
        a = plane_from_manual(ManualPlaneState(z=2.0, rot_x=10.0, rot_y=20.0), _cal())
        b = plane_from_manual(
            ManualPlaneState(z=2.0, rot_x=10.0, rot_y=20.0, rot_z=77.0), _cal())
        np.testing.assert_allclose(a.n, b.n)
        np.testing.assert_allclose(a.p, b.p)

    def test_invariants(self):
        with pytest.raises(OutOfRange):
            ManualPlaneState(z=-1.0)
        with pytest.raises(OutOfRange):
            ManualPlaneState(z=1.0, rot_x=90.0)


class TestAdjustPlane:
    def test_zero_delta_identity(self):
        cal = _cal()
        plane = plane_from_manual(ManualPlaneState(z=2.0, rot_x=5.0, rot_y=-12.0), cal)
        again = adjust_plane(plane, cal)
        np.testing.assert_allclose(again.p, plane.p, atol=1e-12)
        np.testing.assert_allclose(again.n, plane.n, atol=1e-12)

    def test_zero_delta_preserves_clicked_plane_geometry(self, clickable_scene):
        scene, ds, nmap = clickable_scene
        ref_cal = ds.calibrations[(1, 1)]
        clicked = plane_from_click(ds, (1, 1), (16, 16), nmap)
        adjusted = adjust_plane(clicked, ref_cal)
        probe = np.random.default_rng(0).uniform(-1, 1, size=(20, 3))
        np.testing.assert_allclose(np.abs(adjusted.signed_distance(probe)),
                                   np.abs(clicked.signed_distance(probe)), atol=1e-9)

    def test_step_and_back(self):
        cal = _cal()
        plane = plane_from_manual(ManualPlaneState(z=2.0, rot_y=10.0), cal)
        there = adjust_plane(plane, cal, drot_y=5.0)
        back = adjust_plane(there, cal, drot_y=-5.0)
        np.testing.assert_allclose(back.p, plane.p, atol=1e-9)
        np.testing.assert_allclose(back.n, plane.n, atol=1e-9)

    def test_canonicalization_roundtrip(self):
        cal = _cal(t=(0.2, -0.1, 0.0))
        for rx, ry, z in [(0, 0, 1.5), (15, -30, 2.2), (-45, 44, 0.7)]:
            state = ManualPlaneState(z=z, rot_x=rx, rot_y=ry)
            plane = plane_from_manual(state, cal)
            again = manual_from_plane(plane, cal)
            assert again.z == pytest.approx(z, abs=1e-9)
            assert again.rot_x == pytest.approx(rx, abs=1e-9)
            assert again.rot_y == pytest.approx(ry, abs=1e-9)

    def test_axis_parallel_plane_has_no_manual_form(self):
        plane = RefocusPlane(p=np.array([1.0, 0, 0]), n=np.array([1.0, 0, 0]))
        with pytest.raises(OutOfRange):
            manual_from_plane(plane, _cal())

    def test_step_out_of_range(self):
        cal = _cal()
        plane = plane_from_manual(ManualPlaneState(z=0.05), cal)
        with pytest.raises(OutOfRange):
            adjust_plane(plane, cal, dz=-0.1)
