"""Session-oriented HTTP service for interactive refocusing.

Endpoints (schemas documented in docs/service_api.md):

    POST /sessions                      create a session from a dataset path
    GET  /sessions/{id}                 session state summary
    GET  /sessions/{id}/pointcloud      binary decimated cloud (?max_points=N)
    GET  /sessions/{id}/views/{s}/{t}   one source view as PNG
    POST /sessions/{id}/plane           set the plane via any gesture
    POST /sessions/{id}/view            move the virtual viewpoint / aperture
    POST /sessions/{id}/render          render (preview or full), returns id
    GET  /renders/{rid}                 fetch rendered PNG + coverage stats

Sessions serialize gesture handling and renders behind a per-session lock;
datasets are immutable and shared. Renders are pure functions of
(dataset, plane, aperture, virtual_ref, quality) and are cached by a hash
of exactly those inputs, so cache hits are byte-identical to recomputation.
"""

from __future__ import annotations

import hashlib
import io
import struct
import threading
import time
import uuid
from dataclasses import dataclass, field as dc_field

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from PIL import Image
from pydantic import BaseModel

from .errors import NoDisparity, NoPlane, TiltShiftError
from .geometry import CameraCalibration, RefocusPlane, plane_distance, scale_calibration
from .interaction import (
    ManualPlaneState,
    adjust_plane,
    plane_from_click,
    plane_from_manual,
    plane_from_three_points,
)
from .lfio import LightFieldDataset, float_to_uint8, image_to_float, load_dataset
from .pointcloud import (
    PointCloud,
    build_point_cloud,
    decimate,
    default_stride,
    estimate_normals,
    raster_normal_map,
)
from .refocus import (
    Aperture,
    RefocusImage,
    make_aperture,
    refocus_generalized,
    virtual_calibration,
)

DEFAULT_IDLE_TIMEOUT = 30 * 60  # seconds
PREVIEW_MAX_VIEWS = 9

_NOT_FOUND = ("MalformedManifest", "MissingView", "UnknownSession",
              "UnknownRender", "UnknownView")


class CreateSessionBody(BaseModel):
    dataset_path: str


class PlaneGestureBody(BaseModel):
    mode: str
    uv: list[float] | None = None            # click
    points: list[list[float]] | None = None  # three_points
    z: float | None = None                   # manual
    rot_x: float = 0.0
    rot_y: float = 0.0
    rot_z: float = 0.0
    dz: float = 0.0                           # adjust
    drot_x: float = 0.0
    drot_y: float = 0.0


class ViewpointBody(BaseModel):
    virtual_ref: list[float]
    radius: float
    profile: str = "uniform"


class RenderBody(BaseModel):
    quality: str = "full"


@dataclass
class Session:
    dataset: LightFieldDataset
    aperture: Aperture
    virtual_ref: tuple[float, float]
    plane: RefocusPlane | None = None
    lock: threading.Lock = dc_field(default_factory=threading.Lock)
    last_access: float = dc_field(default_factory=time.time)
    render_keys: dict[str, str] = dc_field(default_factory=dict)
    _click_support: tuple | None = None
    _preview_dataset: LightFieldDataset | None = None

    def reference_cal(self) -> CameraCalibration:
        return virtual_calibration(self.dataset, *self.virtual_ref)

    def click_support(self):
        """Reference-view cloud with normals plus its raster normal map,
        built lazily; stride capped so the 3 px click search always lands."""
        if self._click_support is None:
            ds = self.dataset
            stride = min(default_stride(ds, n_views=1), 4)
            cloud = build_point_cloud(ds, views="reference", stride=stride)
            cloud = estimate_normals(cloud, k=8, ds=ds)
            nmap = raster_normal_map(cloud, ds.width, ds.height)
            self._click_support = (cloud, nmap)
        return self._click_support

    def preview_dataset(self) -> LightFieldDataset:
        """Half-resolution dataset (2x2 box filter) for preview renders."""
        if self._preview_dataset is None:
            ds = self.dataset
            h2, w2 = (ds.height // 2) * 2, (ds.width // 2) * 2
            views, cals = {}, {}
            for st, img in ds.views.items():
                f = image_to_float(img[:h2, :w2])
                half = (f[0::2, 0::2] + f[1::2, 0::2] + f[0::2, 1::2] + f[1::2, 1::2]) / 4.0
                views[st] = float_to_uint8(half)
                cals[st] = scale_calibration(ds.calibrations[st], 0.5)
            self._preview_dataset = LightFieldDataset(
                grid_rows=ds.grid_rows, grid_cols=ds.grid_cols,
                views=views, calibrations=cals,
            )
        return self._preview_dataset


@dataclass
class RenderRecord:
    png: bytes
    stats: dict


class ServiceState:
    def __init__(self, idle_timeout: float = DEFAULT_IDLE_TIMEOUT):
        self.idle_timeout = idle_timeout
        self.sessions: dict[str, Session] = {}
        self.renders: dict[str, RenderRecord] = {}
        self._lock = threading.Lock()

    def purge_idle(self):
        now = time.time()
        with self._lock:
            dead = [sid for sid, s in self.sessions.items()
                    if now - s.last_access > self.idle_timeout]
            for sid in dead:
                del self.sessions[sid]

    def get(self, session_id: str) -> Session:
        self.purge_idle()
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id}")
        session.last_access = time.time()
        return session


class UnknownSession(TiltShiftError):
    pass


class UnknownRender(TiltShiftError):
    pass


class UnknownView(TiltShiftError):
    pass


def _plane_corners(plane: RefocusPlane, ref_cal: CameraCalibration,
                   cloud: PointCloud | None) -> list[list[float]]:
    """Quad for the UI overlay: a plane patch centered near the scene,
    sized to the cloud bounding box (or the plane distance without one)."""
    n = plane.n
    seed = np.array([1.0, 0.0, 0.0])
    if abs(seed @ n) > 0.9:
        seed = np.array([0.0, 1.0, 0.0])
    e1 = seed - (seed @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    if cloud is not None and len(cloud) > 0:
        lo = cloud.points.min(axis=0)
        hi = cloud.points.max(axis=0)
        box_center = (lo + hi) / 2.0
        half = float(np.linalg.norm(hi - lo)) / 2.0 or 1.0
    else:
        box_center = plane.p
        half = abs(plane_distance(plane, ref_cal)) / 2.0
    anchor = box_center - plane.signed_distance(box_center) * n
    corners = [anchor + sx * half * e1 + sy * half * e2
               for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
    return [[float(x) for x in c] for c in corners]


def _plane_summary(session: Session) -> dict | None:
    if session.plane is None:
        return None
    plane = session.plane
    ref_cal = session.reference_cal()
    cloud = None
    if session.dataset.disparities:
        cloud, _ = session.click_support()
    return {
        "p": [float(x) for x in plane.p],
        "n": [float(x) for x in plane.n],
        "d": plane_distance(plane, ref_cal),
        "corners": _plane_corners(plane, ref_cal, cloud),
    }


def _aperture_summary(aperture: Aperture) -> dict:
    return {
        "reference": [aperture.reference[0], aperture.reference[1]],
        "radius": aperture.radius,
        "members": [{"s": st[0], "t": st[1], "weight": w}
                    for st, w in aperture.entries],
    }


def _session_summary(session_id: str, session: Session) -> dict:
    ds = session.dataset
    return {
        "session_id": session_id,
        "grid_rows": ds.grid_rows,
        "grid_cols": ds.grid_cols,
        "width": ds.width,
        "height": ds.height,
        "has_disparity": bool(ds.disparities),
        "virtual_ref": [session.virtual_ref[0], session.virtual_ref[1]],
        "cameras": [{"s": s, "t": t, "center": [float(x) for x in cal.t]}
                    for (s, t), cal in sorted(ds.calibrations.items())],
        "aperture": _aperture_summary(session.aperture),
        "plane": _plane_summary(session),
    }


_POINT_DTYPE = np.dtype([("xyz", "<f4", 3), ("rgb", "u1", 3), ("nrm", "<f4", 3)])


def _cloud_payload(cloud: PointCloud) -> bytes:
    """count:u32le then per point x,y,z:f32le r,g,b:u8 nx,ny,nz:f32le."""
    records = np.empty(len(cloud), dtype=_POINT_DTYPE)
    records["xyz"] = cloud.points
    records["rgb"] = cloud.colors
    records["nrm"] = cloud.normals if cloud.normals is not None else 0.0
    return struct.pack("<I", len(cloud)) + records.tobytes()


def _png_bytes(img: np.ndarray) -> bytes:
    out = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(out, format="PNG")
    return out.getvalue()


def _decimate_aperture(aperture: Aperture, max_views: int) -> Aperture:
    if len(aperture.entries) <= max_views:
        return aperture
    ranked = sorted(aperture.entries, key=lambda e: (-e[1], e[0]))[:max_views]
    total = sum(w for _, w in ranked)
    return Aperture(reference=aperture.reference,
                    entries=tuple(sorted((st, w / total) for st, w in ranked)),
                    radius=aperture.radius)


def _render_key(session: Session, quality: str) -> str:
    h = hashlib.sha256()
    h.update(session.plane.p.tobytes())
    h.update(session.plane.n.tobytes())
    for (s, t), w in session.aperture.entries:
        h.update(struct.pack("<iid", s, t, w))
    h.update(struct.pack("<dd", *session.virtual_ref))
    h.update(quality.encode())
    return h.hexdigest()[:16]


def _run_render(session: Session, quality: str) -> RenderRecord:
    if quality == "preview":
        ds = session.preview_dataset()
        aperture = _decimate_aperture(session.aperture, PREVIEW_MAX_VIEWS)
    else:
        ds = session.dataset
        aperture = session.aperture
    ref_cal = virtual_calibration(ds, *session.virtual_ref)
    result: RefocusImage = refocus_generalized(ds, aperture, session.plane, ref_cal)
    png = _png_bytes(float_to_uint8(result.image))
    stats = {
        "coverage_min": float(result.coverage.min()),
        "coverage_mean": float(result.coverage.mean()),
        "zero_coverage_fraction": 1.0 - result.covered_fraction,
        "width": int(result.image.shape[1]),
        "height": int(result.image.shape[0]),
    }
    return RenderRecord(png=png, stats=stats)


def create_app(idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
               dataset: LightFieldDataset | None = None) -> FastAPI:
    """Build the service; a preloaded dataset (optional) short-circuits
    dataset_path == "preloaded" for tests and the CLI."""
    state = ServiceState(idle_timeout=idle_timeout)
    app = FastAPI(title="tiltshift service")
    app.state.service = state
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(TiltShiftError)
    def _tiltshift_error(_request: Request, exc: TiltShiftError):
        status = 404 if type(exc).__name__ in _NOT_FOUND else 400
        return JSONResponse(
            status_code=status,
            content={"error": {"type": type(exc).__name__, "message": str(exc)}},
        )

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if dataset is not None and body.dataset_path == "preloaded":
            ds = dataset
        else:
            ds = load_dataset(body.dataset_path)
        reference = ds.grid_center
        radius = float(np.hypot(ds.grid_rows - 1, ds.grid_cols - 1)) + 1.0
        session = Session(
            dataset=ds,
            aperture=make_aperture(ds, reference, radius=radius),
            virtual_ref=reference,
        )
        session_id = uuid.uuid4().hex[:12]
        state.sessions[session_id] = session
        return _session_summary(session_id, session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = state.get(session_id)
        with session.lock:
            return _session_summary(session_id, session)

    @app.get("/sessions/{session_id}/pointcloud")
    def get_pointcloud(session_id: str, max_points: int = Query(100_000, ge=1)):
        session = state.get(session_id)
        with session.lock:
            if not session.dataset.disparities:
                raise NoDisparity("dataset has no disparity maps")
            cloud, _ = session.click_support()
            payload = _cloud_payload(decimate(cloud, max_points))
        return Response(content=payload, media_type="application/octet-stream",
                        headers={"X-Point-Count": str(struct.unpack_from('<I', payload)[0])})

    @app.get("/sessions/{session_id}/views/{s}/{t}")
    def get_view(session_id: str, s: int, t: int):
        session = state.get(session_id)
        view = session.dataset.views.get((s, t))
        if view is None:
            raise UnknownView(f"no view ({s}, {t})")
        return Response(content=_png_bytes(view), media_type="image/png")

    @app.post("/sessions/{session_id}/plane")
    def set_plane(session_id: str, body: PlaneGestureBody):
        session = state.get(session_id)
        with session.lock:
            ds = session.dataset
            ref_cal = session.reference_cal()
            if body.mode == "click":
                if body.uv is None or len(body.uv) != 2:
                    raise TiltShiftError("click gesture needs uv: [u, v]")
                _, nmap = session.click_support()
                ref_view = ds.nearest_view(*session.virtual_ref)
                session.plane = plane_from_click(ds, ref_view, tuple(body.uv), nmap)
            elif body.mode == "three_points":
                if body.points is None or len(body.points) != 3:
                    raise TiltShiftError("three_points gesture needs points: [[x,y,z] x3]")
                a, b, c = body.points
                session.plane = plane_from_three_points(a, b, c,
                                                        camera_center=ref_cal.t)
            elif body.mode == "manual":
                if body.z is None:
                    raise TiltShiftError("manual gesture needs z")
                manual = ManualPlaneState(z=body.z, rot_x=body.rot_x,
                                          rot_y=body.rot_y, rot_z=body.rot_z)
                session.plane = plane_from_manual(manual, ref_cal)
            elif body.mode == "adjust":
                if session.plane is None:
                    raise NoPlane("adjust requires an existing plane")
                session.plane = adjust_plane(session.plane, ref_cal, dz=body.dz,
                                             drot_x=body.drot_x, drot_y=body.drot_y)
            else:
                raise TiltShiftError(f"unknown gesture mode {body.mode!r}")
            return _plane_summary(session)

    @app.post("/sessions/{session_id}/view")
    def set_view(session_id: str, body: ViewpointBody):
        session = state.get(session_id)
        with session.lock:
            s, t = float(body.virtual_ref[0]), float(body.virtual_ref[1])
            session.aperture = make_aperture(session.dataset, (s, t),
                                             radius=body.radius, profile=body.profile)
            session.virtual_ref = (s, t)
            return _aperture_summary(session.aperture)

    @app.post("/sessions/{session_id}/render")
    def render(session_id: str, body: RenderBody):
        session = state.get(session_id)
        if body.quality not in ("preview", "full"):
            raise TiltShiftError(f"unknown quality {body.quality!r}")
        with session.lock:
            if session.plane is None:
                raise NoPlane("set a refocus plane before rendering")
            key = _render_key(session, body.quality)
            cached = key in session.render_keys
            if not cached:
                record = _run_render(session, body.quality)
                rid = f"{session_id}-{key}"
                state.renders[rid] = record
                session.render_keys[key] = rid
            rid = session.render_keys[key]
            return {"render_id": rid, "cached": cached,
                    "stats": state.renders[rid].stats}

    @app.get("/renders/{rid}")
    def fetch_render(rid: str):
        record = state.renders.get(rid)
        if record is None:
            raise UnknownRender(f"no render {rid}")
        headers = {
            "X-Coverage-Min": f"{record.stats['coverage_min']:.9g}",
            "X-Coverage-Mean": f"{record.stats['coverage_mean']:.9g}",
            "X-Zero-Coverage-Fraction": f"{record.stats['zero_coverage_fraction']:.9g}",
        }
        return Response(content=record.png, media_type="image/png", headers=headers)

    return app


def main(host: str = "127.0.0.1", port: int = 8089,
         idle_timeout: float = DEFAULT_IDLE_TIMEOUT):
    import uvicorn

    uvicorn.run(create_app(idle_timeout=idle_timeout), host=host, port=port,
                log_level="warning")
