"""Depth-driven scene geometry: disparity to depth, pixel reprojection,
point-cloud assembly, neighborhood-PCA normal estimation, PLY export.

Depth model: for rectified equal-focal arrays, z = f * B / disparity with B
the baseline per angular step and disparity in pixels per step. For general
calibrations the fallback triangulates the disparity-displaced pixel in the
adjacent view. Normals come from a plane fit (principal component analysis)
over k nearest neighbors, oriented toward the observing camera.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree

from .errors import IoFailure, NonPositiveDepth, NoDisparity, TooFewPoints, ZeroDisparity
from .geometry import CameraCalibration, Vec3
from .lfio import LightFieldDataset

DISPARITY_EPSILON = 1e-9
# Target size for interactively built clouds (see default_stride).
INTERACTIVE_POINT_BUDGET = 300_000


@dataclass(frozen=True)
class PointCloud:
    """World-frame points with colors, optional normals, and pixel provenance.

    source_pixels rows are (s, t, u, v): the grid view and pixel each point
    came from.
    """
    points: NDArray[np.float64]                 # (N, 3) meters
    colors: NDArray[np.uint8]                   # (N, 3) RGB
    normals: NDArray[np.float64] | None = None  # (N, 3) unit vectors
    source_pixels: NDArray[np.int32] | None = None  # (N, 4) as (s, t, u, v)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        cols = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        if len(cols) != len(pts):
            raise ValueError("points and colors must have equal length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "colors", cols)
        if self.normals is not None:
            nrm = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if len(nrm) != len(pts):
                raise ValueError("normals must match point count")
            lengths = np.linalg.norm(nrm, axis=1)
            if np.any(np.abs(lengths - 1.0) > 1e-6):
                raise ValueError("normals must be unit length")
            object.__setattr__(self, "normals", nrm)
        if self.source_pixels is not None:
            src = np.asarray(self.source_pixels, dtype=np.int32).reshape(-1, 4)
            if len(src) != len(pts):
                raise ValueError("source_pixels must match point count")
            object.__setattr__(self, "source_pixels", src)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class NormalMap:
    """Per-pixel unit normals for one view; valid only where the cloud sampled."""
    normals: NDArray[np.float64]   # (H, W, 3)
    valid_mask: NDArray[np.bool_]  # (H, W)

    @property
    def height(self) -> int:
        return self.normals.shape[0]

    @property
    def width(self) -> int:
        return self.normals.shape[1]


def disparity_to_depth(disp: float, focal: float, baseline: float) -> float:
    """Metric depth z = f * B / disparity.

    Raises:
        ZeroDisparity: |disp| < 1e-9 (point at infinity).
    """
    if not np.isfinite(disp):
        raise ZeroDisparity("disparity must be finite")
    if abs(disp) < DISPARITY_EPSILON:
        raise ZeroDisparity("zero disparity has no finite depth")
    return focal * baseline / disp


def reproject_pixel(uv, z: float, cal: CameraCalibration) -> Vec3:
    """Lift pixel (u, v) at depth z to a world point: z * K^-1 (u, v, 1), then
    the camera-to-world rigid transform.

    Raises:
        NonPositiveDepth: z <= 0.
    """
    if z <= 0:
        raise NonPositiveDepth(f"depth must be positive, got {z}")
    u, v = float(uv[0]), float(uv[1])
    cam = z * (cal.K_inv @ np.array([u, v, 1.0]))
    return cal.R.T @ cam + cal.t


def _reproject_grid(us, vs, zs, cal: CameraCalibration) -> NDArray[np.float64]:
    """Vectorized reproject_pixel over parallel arrays of u, v, z."""
    ones = np.ones_like(us, dtype=np.float64)
    pix = np.stack([us.astype(np.float64), vs.astype(np.float64), ones], axis=-1)
    cam = (pix @ cal.K_inv.T) * zs[..., None]
    return cam @ cal.R + cal.t


def _triangulate_displaced(uv, disp_px: float, cal: CameraCalibration,
                           neighbor: CameraCalibration) -> float:
    """Depth by triangulating pixel uv against (u + disp, v) in the neighbor view.

    Midpoint of the closest points between the two rays; used when the rig
    is not rectified enough for the f*B/disparity shortcut.
    """
    d0 = cal.R.T @ (cal.K_inv @ np.array([uv[0], uv[1], 1.0]))
    d1 = neighbor.R.T @ (neighbor.K_inv @ np.array([uv[0] + disp_px, uv[1], 1.0]))
    o0, o1 = cal.t, neighbor.t
    # Solve min ||(o0 + a d0) - (o1 + b d1)||
    A = np.array([[d0 @ d0, -(d0 @ d1)], [d0 @ d1, -(d1 @ d1)]])
    rhs = np.array([(o1 - o0) @ d0, (o1 - o0) @ d1])
    try:
        a, _ = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ZeroDisparity("parallel rays, disparity carries no depth") from exc
    point = o0 + a * d0
    z = float((cal.R @ (point - cal.t))[2])
    if z <= 0:
        raise NonPositiveDepth("triangulated point behind the camera")
    return z


def _is_rectified(ds: LightFieldDataset, tol: float = 1e-9) -> bool:
    cals = list(ds.calibrations.values())
    ref = cals[0]
    for cal in cals[1:]:
        if np.max(np.abs(cal.K - ref.K)) > tol * max(1.0, abs(ref.K[0, 0])):
            return False
        if np.max(np.abs(cal.R - ref.R)) > tol:
            return False
    return True


def depth_at(ds: LightFieldDataset, st, uv) -> float:
    """Depth for one valid disparity pixel of view st, honoring disparity_scale."""
    disp_map = ds.disparities.get(tuple(st))
    if disp_map is None:
        raise NoDisparity(f"view {tuple(st)} has no disparity map")
    u, v = int(round(uv[0])), int(round(uv[1]))
    if not disp_map.valid_mask[v, u]:
        raise ZeroDisparity(f"pixel ({u}, {v}) has no valid disparity")
    disp = float(disp_map.values[v, u]) * ds.disparity_scale
    cal = ds.calibrations[tuple(st)]
    if _is_rectified(ds):
        return disparity_to_depth(disp, cal.K[0, 0], ds.baseline_step())
    s, t = tuple(st)
    neighbor_st = (s + 1, t) if (s + 1, t) in ds.calibrations else (s - 1, t)
    sign = 1.0 if neighbor_st[0] > s else -1.0
    return _triangulate_displaced(uv, sign * disp, cal, ds.calibrations[neighbor_st])


def default_stride(ds: LightFieldDataset, n_views: int,
                   budget: int = INTERACTIVE_POINT_BUDGET) -> int:
    """Smallest stride keeping the (upper-bound) point count within budget."""
    stride = 1
    while ((ds.width + stride - 1) // stride) * ((ds.height + stride - 1) // stride) * n_views > budget:
        stride += 1
    return stride


def build_point_cloud(
    ds: LightFieldDataset,
    views: str | list = "reference",
    stride: int = 1,
) -> PointCloud:
    """One world point per valid strided disparity pixel of the selected views.

    views: "reference" (grid-center view, the default), "all", or an explicit
    list of (s, t) indices.

    Raises:
        NoDisparity: a selected view has no disparity map.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if views == "reference":
        selected = [ds.nearest_view(*ds.grid_center)]
    elif views == "all":
        selected = sorted(ds.disparities.keys())
        if not selected:
            raise NoDisparity("dataset has no disparity maps")
    else:
        selected = [tuple(v) for v in views]

    rectified = _is_rectified(ds)
    baseline = ds.baseline_step()

    all_pts, all_cols, all_src = [], [], []
    for st in selected:
        disp_map = ds.disparities.get(st)
        if disp_map is None:
            raise NoDisparity(f"view {st} has no disparity map")
        cal = ds.calibrations[st]
        vv, uu = np.mgrid[0:ds.height:stride, 0:ds.width:stride]
        valid = disp_map.valid_mask[vv, uu]
        disp = disp_map.values[vv, uu].astype(np.float64) * ds.disparity_scale
        valid &= np.abs(disp) > DISPARITY_EPSILON
        us, vs = uu[valid], vv[valid]
        if rectified:
            zs = cal.K[0, 0] * baseline / disp[valid]
        else:
            sign, neighbor = _s_neighbor(ds, st)
            zs = np.array([
                _triangulate_displaced((u, v), sign * d, cal, neighbor)
                for u, v, d in zip(us, vs, disp[valid])
            ])
        keep = zs > 0
        us, vs, zs = us[keep], vs[keep], zs[keep]
        pts = _reproject_grid(us, vs, zs, cal)
        all_pts.append(pts)
        all_cols.append(ds.views[st][vs, us])
        src = np.empty((len(us), 4), dtype=np.int32)
        src[:, 0], src[:, 1], src[:, 2], src[:, 3] = st[0], st[1], us, vs
        all_src.append(src)

    return PointCloud(
        points=np.concatenate(all_pts) if all_pts else np.empty((0, 3)),
        colors=np.concatenate(all_cols) if all_cols else np.empty((0, 3), np.uint8),
        source_pixels=np.concatenate(all_src) if all_src else np.empty((0, 4), np.int32),
    )


def _s_neighbor(ds: LightFieldDataset, st):
    s, t = st
    if (s + 1, t) in ds.calibrations:
        return 1.0, ds.calibrations[(s + 1, t)]
    return -1.0, ds.calibrations[(s - 1, t)]


def estimate_normals(
    cloud: PointCloud,
    k: int = 8,
    ds: LightFieldDataset | None = None,
    viewpoint=None,
) -> PointCloud:
    """Attach a unit normal per point: PCA plane fit over k nearest neighbors,
    the least-variance eigenvector, flipped to face the observing camera.

    Camera centers come from the per-point provenance when `ds` is given;
    otherwise `viewpoint` (a single world position) orients all normals.

    Raises:
        TooFewPoints: fewer than k + 1 points.
    """
    pts = cloud.points
    if len(pts) < k + 1:
        raise TooFewPoints(f"need at least {k + 1} points for k={k}")
    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k + 1)  # first neighbor is the point itself
    neighborhoods = pts[idx]
    centered = neighborhoods - neighborhoods.mean(axis=1, keepdims=True)
    covs = np.einsum("nki,nkj->nij", centered, centered)
    _, eigvecs = np.linalg.eigh(covs)
    normals = eigvecs[:, :, 0]  # smallest-eigenvalue direction

    if ds is not None and cloud.source_pixels is not None:
        centers = np.empty_like(pts)
        for st in np.unique(cloud.source_pixels[:, :2], axis=0):
            sel = np.all(cloud.source_pixels[:, :2] == st, axis=1)
            centers[sel] = ds.calibrations[(int(st[0]), int(st[1]))].t
    elif viewpoint is not None:
        centers = np.broadcast_to(np.asarray(viewpoint, dtype=np.float64), pts.shape)
    else:
        centers = np.zeros_like(pts)
    flip = np.einsum("ni,ni->n", normals, centers - pts) < 0
    normals[flip] *= -1.0
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    return PointCloud(points=pts, colors=cloud.colors, normals=normals,
                      source_pixels=cloud.source_pixels)


def raster_normal_map(cloud: PointCloud, width: int, height: int) -> NormalMap:
    """Rasterize a single-view cloud's normals back onto its pixel grid."""
    if cloud.normals is None:
        raise ValueError("cloud has no normals; run estimate_normals first")
    if cloud.source_pixels is None:
        raise ValueError("cloud has no pixel provenance")
    if len(np.unique(cloud.source_pixels[:, :2], axis=0)) > 1:
        raise ValueError("normal map needs a single-view cloud")
    normals = np.zeros((height, width, 3), dtype=np.float64)
    valid = np.zeros((height, width), dtype=bool)
    us, vs = cloud.source_pixels[:, 2], cloud.source_pixels[:, 3]
    normals[vs, us] = cloud.normals
    valid[vs, us] = True
    return NormalMap(normals=normals, valid_mask=valid)


def decimate(cloud: PointCloud, max_points: int) -> PointCloud:
    """Deterministic decimation to at most max_points, evenly spaced by index."""
    n = len(cloud)
    if n <= max_points:
        return cloud
    idx = np.linspace(0, n - 1, max_points).round().astype(np.int64)
    return PointCloud(
        points=cloud.points[idx],
        colors=cloud.colors[idx],
        normals=None if cloud.normals is None else cloud.normals[idx],
        source_pixels=None if cloud.source_pixels is None else cloud.source_pixels[idx],
    )


def export_ply(cloud: PointCloud, path: str | Path) -> None:
    """Write an ASCII PLY (grammar documented in docs/ply_format.md)."""
    has_normals = cloud.normals is not None
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
    ]
    if has_normals:
        lines += ["property float nx", "property float ny", "property float nz"]
    lines.append("end_header")
    try:
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
            for i in range(len(cloud)):
                x, y, z = cloud.points[i]
                r, g, b = cloud.colors[i]
                row = f"{x:.9g} {y:.9g} {z:.9g} {r} {g} {b}"
                if has_normals:
                    nx, ny, nz = cloud.normals[i]
                    row += f" {nx:.9g} {ny:.9g} {nz:.9g}"
                f.write(row + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_ply(path: str | Path) -> PointCloud:
    """Read back an ASCII PLY written by export_ply (round-trip helper)."""
    try:
        text = Path(path).read_text().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not text or text[0] != "ply":
        raise IoFailure(f"{path}: not a PLY file")
    n = 0
    props: list[str] = []
    body_start = 0
    for i, line in enumerate(text[1:], start=1):
        if line.startswith("element vertex"):
            n = int(line.split()[-1])
        elif line.startswith("property"):
            props.append(line.split()[-1])
        elif line == "end_header":
            body_start = i + 1
            break
    rows = [line.split() for line in text[body_start:body_start + n]]
    data = np.asarray(rows, dtype=np.float64)
    has_normals = "nx" in props
    return PointCloud(
        points=data[:, 0:3],
        colors=data[:, 3:6].astype(np.uint8),
        normals=data[:, 6:9] if has_normals else None,
    )
