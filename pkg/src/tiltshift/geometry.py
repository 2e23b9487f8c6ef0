"""Projective geometry for plane-mediated view reprojection.

Coordinate conventions (used by every module in this package):

World frame:
    Right-handed, meters. The dataset's reference camera sits at its stored
    position ``t`` with rotation ``R``; for the rigs we target the reference
    is at the origin with identity rotation, so the world frame coincides
    with the reference camera frame: x right, y down, z forward.

Camera frame (per view):
    x right, y down, z forward along the optical axis. ``R`` maps world
    directions into the camera frame; ``t`` is the camera center in the
    world frame. World-to-camera: ``X_cam = R @ (X_world - t)``.

Pixel frame:
    (u, v) = (column, row), origin at the top-left pixel center. A pixel
    (u, v) in an image array ``img`` is ``img[v, u]``.

Plane-induced reprojection:
    A refocus plane (point p, unit normal n) induces, for each view, a
    3x3 pixel-to-pixel map P from the reference view. ``projection_map``
    composes the plane homography with the intrinsics; it is exact for
    arbitrary calibrated camera pairs, which the randomized consistency
    tests pin down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import DegeneratePlane, MalformedCalibration, PointAtInfinity

Vec3 = NDArray[np.float64]  # shape (3,)
Mat3 = NDArray[np.float64]  # shape (3, 3)

# Plane closer than this to the reference camera center counts as degenerate.
EPSILON_D = 1e-6
# Homogeneous w below this magnitude maps to the plane at infinity.
EPSILON_W = 1e-12

_ORTHO_TOL = 1e-9


def _as_vec3(x) -> Vec3:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def _as_mat3(x) -> Mat3:
    m = np.asarray(x, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class CameraCalibration:
    """Pinhole calibration of one light-field view.

    Attributes:
        K: 3x3 intrinsic matrix in pixels; upper triangular, positive diagonal.
        R: 3x3 rotation mapping world directions into the camera frame.
        t: camera center in the world frame, meters. For grid view (s, t)
            this is the offset from the reference camera.
    """
    K: Mat3
    R: Mat3
    t: Vec3

    def __post_init__(self):
        K = _as_mat3(self.K)
        R = _as_mat3(self.R)
        t = _as_vec3(self.t)
        if abs(K[1, 0]) > 0 or abs(K[2, 0]) > 0 or abs(K[2, 1]) > 0:
            raise MalformedCalibration("K must be upper triangular")
        if np.any(np.diag(K) <= 0):
            raise MalformedCalibration("K diagonal must be positive")
        if not np.all(np.isfinite(K)):
            raise MalformedCalibration("K has non-finite entries")
        if np.max(np.abs(R.T @ R - np.eye(3))) > _ORTHO_TOL:
            raise MalformedCalibration("R is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise MalformedCalibration("R must be a proper rotation (det +1)")
        if not np.all(np.isfinite(t)):
            raise MalformedCalibration("t has non-finite entries")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @property
    def K_inv(self) -> Mat3:
        return np.linalg.inv(self.K)

    @property
    def center(self) -> Vec3:
        """Camera center in the world frame."""
        return self.t

    @property
    def optical_axis(self) -> Vec3:
        """World-frame direction of the camera +z axis."""
        return self.R.T @ np.array([0.0, 0.0, 1.0])

    def project(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        """Project world points, shape (..., 3), to pixel coords (..., 2)."""
        pts = np.asarray(points, dtype=np.float64)
        cam = (pts - self.t) @ self.R.T
        z = cam[..., 2]
        if np.any(np.abs(z) < EPSILON_W):
            raise PointAtInfinity("point on the camera's principal plane")
        hom = cam @ self.K.T
        return hom[..., :2] / hom[..., 2:]


@dataclass(frozen=True)
class RefocusPlane:
    """Refocus plane through point p with unit normal n (world frame).

    The normal is re-normalized on construction; a zero-length normal is
    rejected. Orientation of n carries no meaning for refocusing (flipping
    both n and the signed distance leaves the homography unchanged).
    """
    p: Vec3
    n: Vec3

    def __post_init__(self):
        p = _as_vec3(self.p)
        n = _as_vec3(self.n)
        norm = np.linalg.norm(n)
        if not np.isfinite(norm) or norm < 1e-12:
            raise ValueError("plane normal must be non-zero")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "n", n / norm)

    def signed_distance(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        """Signed point-to-plane distance, shape (...,)."""
        return (np.asarray(points, dtype=np.float64) - self.p) @ self.n


@dataclass(frozen=True)
class ProjectionMap:
    """Homogeneous pixel-to-pixel map from the reference view to a target view."""
    P: Mat3 = field()

    def __post_init__(self):
        object.__setattr__(self, "P", _as_mat3(self.P))

    @property
    def is_invertible(self) -> bool:
        return abs(np.linalg.det(self.P)) > 1e-15

    def inverse(self) -> "ProjectionMap":
        return ProjectionMap(np.linalg.inv(self.P))


def plane_distance(plane: RefocusPlane, ref_cal: CameraCalibration) -> float:
    """Signed distance d = (p - t_ref) . n from the reference camera to the plane.

    Raises:
        DegeneratePlane: |d| < EPSILON_D (plane through the camera center).
    """
    d = float((plane.p - ref_cal.t) @ plane.n)
    if abs(d) < EPSILON_D:
        raise DegeneratePlane(f"plane within {EPSILON_D} m of the reference camera center")
    return d


def homography(cal: CameraCalibration, plane: RefocusPlane, d: float) -> Mat3:
    """Plane-induced homography H = R - t n^T / d for one camera.

    Exact for rigs whose reference camera sits at the world origin with
    identity rotation (d from `plane_distance` of that reference).
    `projection_map` handles arbitrary reference cameras.
    """
    if d == 0:
        raise DegeneratePlane("plane distance d must be non-zero")
    return cal.R - np.outer(cal.t, plane.n) / d


def projection_map(
    target_cal: CameraCalibration,
    ref_cal: CameraCalibration,
    plane: RefocusPlane,
) -> ProjectionMap:
    """Pixel map P from the reference view into the target view via the plane.

    Composes K_target * H * K_ref^-1 where H is the plane-induced homography
    of the relative pose. The baseline enters expressed in the target frame
    and the normal in the reference frame, so the map is exact for rotated
    cameras as well; with identity rotations and the reference at the origin
    it reduces to K_target @ homography(target_cal, plane, d) @ K_ref^-1.

    Raises:
        DegeneratePlane: plane passes through the reference camera center.
    """
    d = plane_distance(plane, ref_cal)
    r_rel = target_cal.R @ ref_cal.R.T
    baseline_tgt = target_cal.R @ (target_cal.t - ref_cal.t)
    n_ref = ref_cal.R @ plane.n
    H = r_rel - np.outer(baseline_tgt, n_ref) / d
    P = target_cal.K @ H @ ref_cal.K_inv
    return ProjectionMap(P)


def apply_projection(pmap: ProjectionMap, uv: NDArray[np.float64]) -> NDArray[np.float64]:
    """Apply P to pixel coords, shape (..., 2) -> (..., 2), with perspective divide.

    Raises:
        PointAtInfinity: |w| < EPSILON_W for some input pixel.
    """
    pts = np.asarray(uv, dtype=np.float64)
    scalar_input = pts.ndim == 1
    pts = np.atleast_2d(pts)
    hom = np.concatenate([pts, np.ones_like(pts[..., :1])], axis=-1) @ pmap.P.T
    w = hom[..., 2]
    if np.any(np.abs(w) < EPSILON_W):
        raise PointAtInfinity("projection sent a pixel to infinity")
    out = hom[..., :2] / w[..., None]
    return out[0] if scalar_input else out


def make_intrinsics(fx: float, fy: float, cx: float, cy: float, skew: float = 0.0) -> Mat3:
    return np.array([[fx, skew, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])


def rotation_x(degrees: float) -> Mat3:
    a = np.deg2rad(degrees)
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(degrees: float) -> Mat3:
    a = np.deg2rad(degrees)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def scale_calibration(cal: CameraCalibration, factor: float) -> CameraCalibration:
    """Calibration for the same camera at `factor` times the pixel resolution.

    Honors the pixel-center origin: full-res pixel u maps to
    (u + 0.5) * factor - 0.5 at the new resolution.
    """
    S = np.array([
        [factor, 0.0, 0.5 * factor - 0.5],
        [0.0, factor, 0.5 * factor - 0.5],
        [0.0, 0.0, 1.0],
    ])
    return CameraCalibration(K=S @ cal.K, R=cal.R, t=cal.t)
