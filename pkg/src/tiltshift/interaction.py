"""Turn user gestures into refocus planes.

Three constructors mirror the interactive modes: a single click on the
reference view (depth + estimated normal at the pixel), three picked 3D
points (cross-product normal), and a manual state of distance plus tilt
angles stepped from the keyboard. `adjust_plane` converts any plane back
to the manual parameterization for incremental keyboard editing.

Manual parameterization: the plane point sits on the reference optical
axis at distance z; the normal is R_x(rot_x) @ R_y(rot_y) @ [0,0,1] in the
reference camera frame (rotation order fixed and documented). A rot_z
field is accepted for keyboard-binding symmetry but is inert: the normal
starts along the z axis, so rotating it about z first changes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import CollinearPoints, InvalidPixel, OutOfRange
from .geometry import CameraCalibration, RefocusPlane, rotation_x, rotation_y
from .lfio import LightFieldDataset
from .pointcloud import NormalMap, depth_at, reproject_pixel

# Clicks tolerate small holes in the disparity/normal masks.
CLICK_SEARCH_RADIUS = 3


@dataclass(frozen=True)
class ManualPlaneState:
    """Keyboard-mode plane parameters: axial distance and tilts in degrees.

    rot_z is accepted but inert (see module docstring).
    """
    z: float
    rot_x: float = 0.0
    rot_y: float = 0.0
    rot_z: float = 0.0

    def __post_init__(self):
        if not self.z > 0:
            raise OutOfRange(f"distance must be positive, got {self.z}")
        if not (-90.0 < self.rot_x < 90.0 and -90.0 < self.rot_y < 90.0):
            raise OutOfRange("tilt angles must lie strictly inside (-90, 90) degrees")


def _nearest_valid_pixel(mask, u: int, v: int, radius: int) -> tuple[int, int] | None:
    h, w = mask.shape
    best = None
    best_d2 = (radius + 1) ** 2
    for dv in range(-radius, radius + 1):
        for du in range(-radius, radius + 1):
            uu, vv = u + du, v + dv
            d2 = du * du + dv * dv
            if d2 > radius * radius or d2 >= best_d2:
                continue
            if 0 <= uu < w and 0 <= vv < h and mask[vv, uu]:
                best, best_d2 = (uu, vv), d2
    return best


def plane_from_click(
    ds: LightFieldDataset,
    ref_view: tuple[int, int],
    uv: tuple[float, float],
    normal_map: NormalMap,
) -> RefocusPlane:
    """Single-click mode: lift the clicked pixel to 3D via its disparity and
    take the estimated normal there. Falls back to the nearest valid pixel
    within CLICK_SEARCH_RADIUS when the exact pixel is masked out.

    Raises:
        InvalidPixel: no valid depth/normal near the click.
    """
    st = tuple(ref_view)
    disp_map = ds.disparities.get(st)
    if disp_map is None:
        raise InvalidPixel(f"view {st} has no disparity map")
    u, v = int(round(uv[0])), int(round(uv[1]))
    if not (0 <= u < ds.width and 0 <= v < ds.height):
        raise InvalidPixel(f"click ({u}, {v}) outside the image")
    usable = disp_map.valid_mask & normal_map.valid_mask
    hit = _nearest_valid_pixel(usable, u, v, CLICK_SEARCH_RADIUS)
    if hit is None:
        raise InvalidPixel(f"no valid depth/normal within {CLICK_SEARCH_RADIUS} px of ({u}, {v})")
    uu, vv = hit
    z = depth_at(ds, st, (uu, vv))
    p = reproject_pixel((uu, vv), z, ds.calibrations[st])
    return RefocusPlane(p=p, n=normal_map.normals[vv, uu])


def plane_from_three_points(a, b, c, camera_center=None) -> RefocusPlane:
    """Three-click mode: plane through three picked points, normal from the
    cross product, flipped toward camera_center when given.

    Raises:
        CollinearPoints: the points do not span a plane.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    ab, ac = b - a, c - a
    n = np.cross(ab, ac)
    if np.linalg.norm(n) < 1e-9 * np.linalg.norm(ab) * np.linalg.norm(ac):
        raise CollinearPoints("three points are collinear")
    if camera_center is not None and n @ (np.asarray(camera_center) - a) < 0:
        n = -n
    return RefocusPlane(p=a, n=n)


def plane_from_manual(state: ManualPlaneState, ref_cal: CameraCalibration) -> RefocusPlane:
    """Keyboard mode: plane at distance z along the reference optical axis,
    normal tilted by rot_x then rot_y from the optical axis."""
    axis = np.array([0.0, 0.0, 1.0])
    n_cam = rotation_x(state.rot_x) @ rotation_y(state.rot_y) @ axis
    p = ref_cal.t + state.z * ref_cal.optical_axis
    n_world = ref_cal.R.T @ n_cam
    return RefocusPlane(p=p, n=n_world)


def manual_from_plane(plane: RefocusPlane, ref_cal: CameraCalibration) -> ManualPlaneState:
    """Canonicalize a plane to the manual (z, rot_x, rot_y) parameterization.

    Raises:
        OutOfRange: plane is parallel to the optical axis, behind the
            camera, or tilted beyond the manual range.
    """
    n_cam = ref_cal.R @ plane.n
    if abs(n_cam[2]) < 1e-9:
        raise OutOfRange("plane parallel to the optical axis has no manual form")
    if n_cam[2] < 0:
        n_cam = -n_cam
    # Invert n = R_x(rx) R_y(ry) ez, i.e. n = (sin ry, -sin rx cos ry, cos rx cos ry)
    rot_y = np.degrees(np.arctan2(n_cam[0], np.hypot(n_cam[1], n_cam[2])))
    rot_x = np.degrees(np.arctan2(-n_cam[1], n_cam[2]))
    axis = ref_cal.optical_axis
    denom = axis @ plane.n
    if abs(denom) < 1e-12:
        raise OutOfRange("plane parallel to the optical axis has no manual form")
    z = float((plane.p - ref_cal.t) @ plane.n / denom)
    if z <= 0:
        raise OutOfRange("plane intersects the optical axis behind the camera")
    return ManualPlaneState(z=z, rot_x=float(rot_x), rot_y=float(rot_y))


def adjust_plane(
    plane: RefocusPlane,
    ref_cal: CameraCalibration,
    dz: float = 0.0,
    drot_x: float = 0.0,
    drot_y: float = 0.0,
) -> RefocusPlane:
    """Fine keyboard adjustment: canonicalize, step the parameters, rebuild.

    Raises:
        OutOfRange: plane has no manual form or the step leaves the range.
    """
    state = manual_from_plane(plane, ref_cal)
    stepped = replace(state, z=state.z + dz,
                      rot_x=state.rot_x + drot_x, rot_y=state.rot_y + drot_y)
    return plane_from_manual(stepped, ref_cal)
