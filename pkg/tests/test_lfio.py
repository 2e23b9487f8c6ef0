"""Dataset layout, manifest validation, and image/PFM round trips."""

import json

import numpy as np
import pytest

from tiltshift.errors import (
    DimensionMismatch,
    IoFailure,
    MalformedCalibration,
    MalformedManifest,
    MissingView,
)
from tiltshift.geometry import CameraCalibration, make_intrinsics
from tiltshift.lfio import (
    DisparityMap,
    LightFieldDataset,
    float_to_uint8,
    load_dataset,
    load_image,
    read_pfm,
    save_dataset,
    save_image,
    write_pfm,
)


def _mini_dataset(rows=3, cols=3, w=8, h=6, with_disp=False):
    rng = np.random.default_rng(42)
    views, cals, disps = {}, {}, {}
    for s in range(rows):
        for t in range(cols):
            views[(s, t)] = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            cals[(s, t)] = CameraCalibration(
                K=make_intrinsics(100.0, 100.0, w / 2, h / 2),
                R=np.eye(3),
                t=np.array([-0.1 * s, -0.1 * t, 0.0]),
            )
            if with_disp:
                vals = rng.uniform(1.0, 5.0, size=(h, w)).astype(np.float32)
                mask = np.ones((h, w), dtype=bool)
                mask[0, 0] = False
                disps[(s, t)] = DisparityMap(values=vals, valid_mask=mask)
    return LightFieldDataset(grid_rows=rows, grid_cols=cols, views=views,
                             calibrations=cals, disparities=disps)


class TestRoundTrips:
    def test_png_preserves_pixels(self, tmp_path):
        checker = np.array([[[0, 0, 0], [255, 255, 255]],
                            [[255, 255, 255], [0, 0, 0]]], dtype=np.uint8)
        path = tmp_path / "checker.png"
        save_image(checker, path)
        np.testing.assert_array_equal(load_image(path), checker)

    def test_png_unwritable_path(self, tmp_path):
        img = np.zeros((2, 2, 3), dtype=np.uint8)
        with pytest.raises(IoFailure):
            save_image(img, tmp_path / "no_such_dir" / "x.png")

    def test_pfm_preserves_floats_and_mask(self, tmp_path):
        vals = np.array([[1.5, -2.25], [0.0, 1e-3], [7.0, 3.0]], dtype=np.float32)
        mask = np.array([[True, True], [False, True], [True, True]])
        path = tmp_path / "d.pfm"
        write_pfm(path, vals, mask)
        disp = read_pfm(path)
        np.testing.assert_array_equal(disp.valid_mask, mask)
        np.testing.assert_array_equal(disp.values[mask], vals[mask])

    def test_dataset_save_load_identity(self, tmp_path):
        ds = _mini_dataset(with_disp=True)
        root = save_dataset(ds, tmp_path / "lf")
        again = load_dataset(root)
        assert again.grid_rows == 3 and again.grid_cols == 3
        for st in ds.views:
            np.testing.assert_array_equal(again.views[st], ds.views[st])
            np.testing.assert_allclose(again.calibrations[st].t, ds.calibrations[st].t)
            np.testing.assert_array_equal(again.disparities[st].valid_mask,
                                          ds.disparities[st].valid_mask)

    def test_float_to_uint8_rounds_half_away_from_zero(self):
        # 0.5/255-boundary: 127.5/255 must round to 128, not banker's 127
        x = np.array([[[127.5 / 255] * 3]], dtype=np.float64)
        assert float_to_uint8(x)[0, 0, 0] == 128


class TestValidation:
    def test_smallest_complete_grid(self, tmp_path):
        root = save_dataset(_mini_dataset(), tmp_path / "lf")
        ds = load_dataset(root)
        assert len(ds.views) == 9

    def test_missing_view_named(self, tmp_path):
        root = save_dataset(_mini_dataset(), tmp_path / "lf")
        (root / "view_1_2.png").unlink()
        with pytest.raises(MissingView, match=r"\(1, 2\)"):
            load_dataset(root)

    def test_zero_focal_rejected(self, tmp_path):
        root = save_dataset(_mini_dataset(), tmp_path / "lf")
        manifest = json.loads((root / "lightfield.json").read_text())
        manifest["calibrations"]["0_0"]["fx"] = 0.0
        (root / "lightfield.json").write_text(json.dumps(manifest))
        with pytest.raises(MalformedCalibration):
            load_dataset(root)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MalformedManifest):
            load_dataset(tmp_path)

    def test_garbage_manifest(self, tmp_path):
        (tmp_path / "lightfield.json").write_text("{not json")
        with pytest.raises(MalformedManifest):
            load_dataset(tmp_path)

    def test_dimension_mismatch(self, tmp_path):
        root = save_dataset(_mini_dataset(), tmp_path / "lf")
        save_image(np.zeros((4, 4, 3), dtype=np.uint8), root / "view_0_0.png")
        with pytest.raises(DimensionMismatch):
            load_dataset(root)

    def test_disparity_dimension_mismatch(self):
        ds = _mini_dataset()
        bad = DisparityMap(values=np.ones((2, 2), np.float32),
                           valid_mask=np.ones((2, 2), bool))
        with pytest.raises(DimensionMismatch):
            LightFieldDataset(
                grid_rows=ds.grid_rows, grid_cols=ds.grid_cols, views=ds.views,
                calibrations=ds.calibrations, disparities={(0, 0): bad},
            )

    def test_grid_cell_without_view_rejected(self):
        ds = _mini_dataset()
        views = dict(ds.views)
        del views[(2, 2)]
        with pytest.raises(MissingView):
            LightFieldDataset(grid_rows=3, grid_cols=3, views=views,
                              calibrations=ds.calibrations)


class TestDatasetHelpers:
    def test_baseline_step(self):
        # adjacent cameras sit 0.1 m apart in _mini_dataset
        assert _mini_dataset().baseline_step() == pytest.approx(0.1)

    def test_grid_center(self):
        assert _mini_dataset().grid_center == (1.0, 1.0)

    def test_nearest_view_clamps(self):
        ds = _mini_dataset()
        assert ds.nearest_view(-1.0, 5.0) == (0, 2)
