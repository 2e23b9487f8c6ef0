"""Session service endpoint contract (in-process via TestClient)."""

import io
import struct

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from tiltshift.service import _POINT_DTYPE, create_app
from tiltshift.synthetic import psnr


@pytest.fixture()
def client(frontoparallel_dataset_dir):
    with TestClient(create_app()) as c:
        c.dataset_dir = str(frontoparallel_dataset_dir)
        yield c


def _create(client, path=None):
    resp = client.post("/sessions", json={"dataset_path": path or client.dataset_dir})
    assert resp.status_code == 201, resp.text
    return resp.json()


def _decode_cloud(payload: bytes):
    (count,) = struct.unpack_from("<I", payload)
    records = np.frombuffer(payload[4:], dtype=_POINT_DTYPE)
    assert len(records) == count
    return records


def _decode_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))


class TestSessions:
    def test_create_reports_grid(self, client):
        state = _create(client)
        assert state["grid_rows"] == 3 and state["grid_cols"] == 3
        assert state["width"] == 64 and state["height"] == 64
        assert state["has_disparity"] is True
        assert state["plane"] is None
        # default aperture covers the whole grid from the center
        assert len(state["aperture"]["members"]) == 9
        assert state["virtual_ref"] == [1.0, 1.0]
        # camera centers ship with the session so clients never derive them
        assert len(state["cameras"]) == 9
        assert {"s", "t", "center"} <= set(state["cameras"][0])

    def test_bad_path_is_404(self, client):
        resp = client.post("/sessions", json={"dataset_path": "/no/such/dir"})
        assert resp.status_code == 404
        assert resp.json()["error"]["type"] == "MalformedManifest"

    def test_sessions_are_isolated(self, client):
        a = _create(client)["session_id"]
        b = _create(client)["session_id"]
        client.post(f"/sessions/{a}/plane", json={"mode": "manual", "z": 2.0})
        state_a = client.get(f"/sessions/{a}").json()
        state_b = client.get(f"/sessions/{b}").json()
        assert state_a["plane"] is not None
        assert state_b["plane"] is None

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/deadbeef").status_code == 404


class TestPointcloud:
    def test_decimated_points_on_plane(self, client):
        sid = _create(client)["session_id"]
        resp = client.get(f"/sessions/{sid}/pointcloud", params={"max_points": 1000})
        assert resp.status_code == 200
        records = _decode_cloud(resp.content)
        assert 0 < len(records) <= 1000
        np.testing.assert_allclose(records["xyz"][:, 2], 2.0, atol=1e-3)
        lengths = np.linalg.norm(records["nrm"], axis=1)
        np.testing.assert_allclose(lengths, 1.0, atol=1e-5)

    def test_repeated_call_byte_identical(self, client):
        sid = _create(client)["session_id"]
        a = client.get(f"/sessions/{sid}/pointcloud", params={"max_points": 500})
        b = client.get(f"/sessions/{sid}/pointcloud", params={"max_points": 500})
        assert a.content == b.content

    def test_no_disparity_rejected(self, client, tmp_path):
        from tiltshift.lfio import LightFieldDataset, load_dataset, save_dataset
        ds = load_dataset(client.dataset_dir)
        bare = LightFieldDataset(grid_rows=ds.grid_rows, grid_cols=ds.grid_cols,
                                 views=ds.views, calibrations=ds.calibrations)
        save_dataset(bare, tmp_path / "bare")
        sid = _create(client, str(tmp_path / "bare"))["session_id"]
        resp = client.get(f"/sessions/{sid}/pointcloud")
        assert resp.status_code == 400
        assert resp.json()["error"]["type"] == "NoDisparity"


class TestPlaneGestures:
    def test_click_recovers_plane(self, client):
        sid = _create(client)["session_id"]
        resp = client.post(f"/sessions/{sid}/plane",
                           json={"mode": "click", "uv": [32, 32]})
        assert resp.status_code == 200
        summary = resp.json()
        # scene plane is z=2 frontoparallel; normal is camera-facing
        n = np.asarray(summary["n"])
        angle = np.degrees(np.arccos(abs(n @ [0, 0, 1.0])))
        assert angle <= 2.0
        assert abs(summary["d"]) == pytest.approx(2.0, abs=0.02)  # d is signed
        assert len(summary["corners"]) == 4

    def test_collinear_points_rejected(self, client):
        sid = _create(client)["session_id"]
        resp = client.post(f"/sessions/{sid}/plane", json={
            "mode": "three_points",
            "points": [[0, 0, 2], [1, 0, 2], [2, 0, 2]],
        })
        assert resp.status_code == 400
        assert resp.json()["error"]["type"] == "CollinearPoints"

    def test_zero_adjust_keeps_summary(self, client):
        sid = _create(client)["session_id"]
        before = client.post(f"/sessions/{sid}/plane",
                             json={"mode": "manual", "z": 2.0, "rot_y": 10.0}).json()
        after = client.post(f"/sessions/{sid}/plane", json={"mode": "adjust"}).json()
        np.testing.assert_allclose(after["p"], before["p"], atol=1e-9)
        np.testing.assert_allclose(after["n"], before["n"], atol=1e-9)

    def test_adjust_without_plane(self, client):
        sid = _create(client)["session_id"]
        resp = client.post(f"/sessions/{sid}/plane", json={"mode": "adjust"})
        assert resp.status_code == 400
        assert resp.json()["error"]["type"] == "NoPlane"


class TestViewpoint:
    def test_full_grid_membership(self, client):
        sid = _create(client)["session_id"]
        resp = client.post(f"/sessions/{sid}/view",
                           json={"virtual_ref": [1, 1], "radius": 3.0})
        assert len(resp.json()["members"]) == 9

    def test_single_member_at_node(self, client):
        sid = _create(client)["session_id"]
        resp = client.post(f"/sessions/{sid}/view",
                           json={"virtual_ref": [1, 1], "radius": 0.5})
        members = resp.json()["members"]
        assert members == [{"s": 1, "t": 1, "weight": 1.0}]

    def test_membership_matches_make_aperture(self, client):
        from tiltshift.lfio import load_dataset
        from tiltshift.refocus import make_aperture
        ds = load_dataset(client.dataset_dir)
        sid = _create(client)["session_id"]
        got = client.post(f"/sessions/{sid}/view",
                          json={"virtual_ref": [1, 2], "radius": 1.0}).json()
        expected = make_aperture(ds, (1, 2), 1.0)
        assert [(m["s"], m["t"]) for m in got["members"]] == \
            [list(st) for st in expected.members] or \
            [(m["s"], m["t"]) for m in got["members"]] == expected.members

    def test_out_of_hull(self, client):
        sid = _create(client)["session_id"]
        resp = client.post(f"/sessions/{sid}/view",
                           json={"virtual_ref": [5, 1], "radius": 1.0})
        assert resp.status_code == 400
        assert resp.json()["error"]["type"] == "OutOfHull"

    def test_view_fetch_is_png(self, client):
        sid = _create(client)["session_id"]
        resp = client.get(f"/sessions/{sid}/views/1/1")
        assert resp.headers["content-type"] == "image/png"
        assert _decode_png(resp.content).shape == (64, 64, 3)


class TestRender:
    def test_render_before_plane(self, client):
        sid = _create(client)["session_id"]
        resp = client.post(f"/sessions/{sid}/render", json={"quality": "full"})
        assert resp.status_code == 400
        assert resp.json()["error"]["type"] == "NoPlane"

    def test_cache_hit_is_byte_identical(self, client):
        sid = _create(client)["session_id"]
        client.post(f"/sessions/{sid}/plane", json={"mode": "manual", "z": 2.0})
        first = client.post(f"/sessions/{sid}/render", json={"quality": "full"}).json()
        second = client.post(f"/sessions/{sid}/render", json={"quality": "full"}).json()
        assert first["cached"] is False
        assert second["cached"] is True
        assert first["render_id"] == second["render_id"]
        a = client.get(f"/renders/{first['render_id']}").content
        b = client.get(f"/renders/{second['render_id']}").content
        assert a == b

    def test_render_has_coverage_headers(self, client):
        sid = _create(client)["session_id"]
        client.post(f"/sessions/{sid}/plane", json={"mode": "manual", "z": 2.0})
        rid = client.post(f"/sessions/{sid}/render", json={"quality": "full"}).json()["render_id"]
        resp = client.get(f"/renders/{rid}")
        assert float(resp.headers["X-Coverage-Mean"]) > 0.5
        assert "X-Zero-Coverage-Fraction" in resp.headers

    def test_preview_matches_downsampled_full(self, client):
        sid = _create(client)["session_id"]
        client.post(f"/sessions/{sid}/plane", json={"mode": "manual", "z": 2.0})
        full_id = client.post(f"/sessions/{sid}/render", json={"quality": "full"}).json()["render_id"]
        prev_id = client.post(f"/sessions/{sid}/render", json={"quality": "preview"}).json()["render_id"]
        full = _decode_png(client.get(f"/renders/{full_id}").content) / 255.0
        prev = _decode_png(client.get(f"/renders/{prev_id}").content) / 255.0
        assert prev.shape == (32, 32, 3)
        down = (full[0::2, 0::2] + full[1::2, 0::2] + full[0::2, 1::2] + full[1::2, 1::2]) / 4
        assert psnr(prev, down) >= 30.0

    def test_plane_change_invalidates_cache(self, client):
        sid = _create(client)["session_id"]
        client.post(f"/sessions/{sid}/plane", json={"mode": "manual", "z": 2.0})
        first = client.post(f"/sessions/{sid}/render", json={"quality": "full"}).json()
        client.post(f"/sessions/{sid}/plane", json={"mode": "manual", "z": 2.4})
        third = client.post(f"/sessions/{sid}/render", json={"quality": "full"}).json()
        assert third["cached"] is False
        assert third["render_id"] != first["render_id"]
