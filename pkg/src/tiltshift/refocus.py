"""Synthetic-aperture refocusing: classic shift-and-sum, its plane-mediated
generalization, and perspective shift to intermediate viewpoints.

Both refocus paths share the same per-pixel contract, which the pointwise
oracle in `synthetic` re-implements independently:

  * output pixel (u, v) samples each view at its mapped source position by
    bilinear interpolation over the four surrounding pixel centers;
  * taps outside the image contribute weight 0, and the in-bounds weight sum
    becomes the sample's mask (fractional in a one-pixel boundary band);
  * sampled values are renormalized by that mask, so a constant-color light
    field stays exactly constant wherever coverage is non-zero;
  * per-pixel output = sum(A * mask * sample) / sum(A * mask), with the
    denominator kept as the coverage map (0 marks uncovered pixels);
  * mapped positions behind the plane horizon (non-positive homogeneous w)
    are masked out.

Views are iterated in sorted (s, t) order with float64 accumulators, so
results are deterministic and independent of any BLAS thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import EmptyAperture, OutOfHull, SingularProjection
from .geometry import (
    EPSILON_W,
    CameraCalibration,
    ProjectionMap,
    RefocusPlane,
    projection_map,
)
from .lfio import LightFieldDataset, image_to_float

GridIndex = tuple[int, int]


@dataclass(frozen=True)
class Aperture:
    """Synthetic-aperture filter: a reference angular position plus
    normalized per-view weights."""
    reference: tuple[float, float]
    entries: tuple[tuple[GridIndex, float], ...]
    radius: float

    def __post_init__(self):
        if not self.entries:
            raise EmptyAperture("aperture has no entries")
        total = sum(w for _, w in self.entries)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"aperture weights sum to {total}, expected 1")
        if any(w < 0 for _, w in self.entries):
            raise ValueError("aperture weights must be non-negative")

    @property
    def members(self) -> list[GridIndex]:
        return [st for st, _ in self.entries]


@dataclass(frozen=True)
class WarpedView:
    """One view resampled into the reference pixel grid.

    mask is the per-pixel bilinear in-bounds weight in [0, 1]; image holds
    the mask-renormalized color and is zero wherever mask is zero.
    """
    image: NDArray[np.float32]  # (H, W, 3)
    mask: NDArray[np.float32]   # (H, W)


@dataclass(frozen=True)
class RefocusImage:
    """Refocused image with its per-pixel accumulated aperture weight.

    coverage == 0 flags pixels no view could fill; image is zero there.
    """
    image: NDArray[np.float32]     # (H, W, 3), [0, 1]
    coverage: NDArray[np.float32]  # (H, W)

    @property
    def covered_fraction(self) -> float:
        return float(np.count_nonzero(self.coverage > 0) / self.coverage.size)


def make_aperture(
    ds: LightFieldDataset,
    reference: tuple[float, float],
    radius: float,
    profile: str = "uniform",
) -> Aperture:
    """All grid views within `radius` (angular units, Euclidean) of the
    reference position, with uniform or Gaussian (sigma = radius/2) weights.

    Raises:
        OutOfHull: reference outside the grid bounds (inclusive).
        EmptyAperture: no view within radius.
    """
    s_r, t_r = float(reference[0]), float(reference[1])
    if not (0.0 <= s_r <= ds.grid_rows - 1 and 0.0 <= t_r <= ds.grid_cols - 1):
        raise OutOfHull(f"reference ({s_r}, {t_r}) outside the camera grid")
    if radius <= 0:
        raise ValueError("aperture radius must be positive")
    if profile not in ("uniform", "gaussian"):
        raise ValueError(f"unknown aperture profile {profile!r}")

    entries = []
    for s in range(ds.grid_rows):
        for t in range(ds.grid_cols):
            dist = math.hypot(s - s_r, t - t_r)
            if dist <= radius:
                if profile == "uniform":
                    w = 1.0
                else:
                    sigma = radius / 2.0
                    w = math.exp(-(dist * dist) / (2.0 * sigma * sigma))
                entries.append(((s, t), w))
    if not entries:
        raise EmptyAperture(f"no view within radius {radius} of ({s_r}, {t_r})")
    total = sum(w for _, w in entries)
    entries = tuple((st, w / total) for st, w in entries)
    return Aperture(reference=(s_r, t_r), entries=entries, radius=radius)


def _sample_bilinear(
    img: NDArray[np.float32],
    xs: NDArray[np.float64],
    ys: NDArray[np.float64],
    valid: NDArray[np.bool_],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Masked bilinear sampling at continuous (xs, ys); see module docstring.

    Returns (values, mask) with values renormalized by mask where positive.
    Positions flagged invalid get mask 0.
    """
    h, w = img.shape[:2]
    xs = np.where(valid, xs, -10.0)  # park invalid samples far out of bounds
    ys = np.where(valid, ys, -10.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    value = np.zeros(xs.shape + (img.shape[2],), dtype=np.float64)
    mask = np.zeros(xs.shape, dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            inside = (xi >= 0) & (xi <= w - 1) & (yi >= 0) & (yi <= h - 1)
            wgt = np.where(inside, wgt, 0.0)
            xi = np.clip(xi, 0, w - 1)
            yi = np.clip(yi, 0, h - 1)
            value += wgt[..., None] * img[yi, xi]
            mask += wgt
    covered = mask > 0
    value[covered] /= mask[covered, None]
    return value, mask


def warp_view(view: NDArray, pmap: ProjectionMap) -> WarpedView:
    """Resample a whole view into the reference grid through P (output-driven:
    each output pixel samples the source at P(u, v)).

    Raises:
        SingularProjection: P is not invertible.
    """
    if not pmap.is_invertible:
        raise SingularProjection("projection map is singular")
    img = view if view.dtype == np.float32 else image_to_float(view)
    h, w = img.shape[:2]
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    hom = pmap.P[:, 0] * uu[..., None] + pmap.P[:, 1] * vv[..., None] + pmap.P[:, 2]
    wcoord = hom[..., 2]
    valid = wcoord > EPSILON_W
    safe_w = np.where(valid, wcoord, 1.0)
    xs = hom[..., 0] / safe_w
    ys = hom[..., 1] / safe_w
    value, mask = _sample_bilinear(img, xs, ys, valid)
    return WarpedView(image=value.astype(np.float32), mask=mask.astype(np.float32))


def _accumulate(
    shape: tuple[int, int],
    contributions,
) -> RefocusImage:
    """Weighted masked average over (weight, WarpedView) pairs."""
    h, w = shape
    num = np.zeros((h, w, 3), dtype=np.float64)
    den = np.zeros((h, w), dtype=np.float64)
    for weight, warped in contributions:
        wm = weight * warped.mask.astype(np.float64)
        num += wm[..., None] * warped.image.astype(np.float64)
        den += wm
    covered = den > 0
    out = np.zeros_like(num)
    out[covered] = num[covered] / den[covered, None]
    return RefocusImage(image=out.astype(np.float32), coverage=den.astype(np.float32))


def refocus_generalized(
    ds: LightFieldDataset,
    aperture: Aperture,
    plane: RefocusPlane,
    ref_cal: CameraCalibration,
) -> RefocusImage:
    """Refocus onto an arbitrary plane: warp every aperture view into the
    reference grid through the plane-induced projection, then average.

    Raises:
        DegeneratePlane: plane passes through the reference camera center.
    """
    def contributions():
        for st, weight in sorted(aperture.entries):
            pmap = projection_map(ds.calibrations[st], ref_cal, plane)
            yield weight, warp_view(ds.views[st], pmap)

    return _accumulate((ds.height, ds.width), contributions())


def shift_and_sum(
    ds: LightFieldDataset,
    aperture: Aperture,
    delta: float,
) -> RefocusImage:
    """Classic frontoparallel refocus: view (s, t) is sampled at
    (u + (s - s_r) * delta, v + (t - t_r) * delta) and averaged.

    Kept free of the homography machinery so it can serve as the
    independent path for the frontoparallel equivalence check.
    """
    s_r, t_r = aperture.reference
    h, w = ds.height, ds.width
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)

    def contributions():
        for (s, t), weight in sorted(aperture.entries):
            xs = uu + (s - s_r) * delta
            ys = vv + (t - t_r) * delta
            img = image_to_float(ds.views[(s, t)])
            value, mask = _sample_bilinear(img, xs, ys, np.ones_like(xs, dtype=bool))
            yield weight, WarpedView(image=value.astype(np.float32),
                                     mask=mask.astype(np.float32))

    return _accumulate((h, w), contributions())


def virtual_calibration(ds: LightFieldDataset, s: float, t: float) -> CameraCalibration:
    """Calibration for a virtual camera at continuous grid position (s, t):
    camera center bilinearly interpolated over the grid, K and R from the
    nearest discrete view (the target rigs share K and R to high precision).
    """
    if not (0.0 <= s <= ds.grid_rows - 1 and 0.0 <= t <= ds.grid_cols - 1):
        raise OutOfHull(f"virtual reference ({s}, {t}) outside the camera grid")
    s0 = int(np.clip(math.floor(s), 0, ds.grid_rows - 1))
    t0 = int(np.clip(math.floor(t), 0, ds.grid_cols - 1))
    s1 = min(s0 + 1, ds.grid_rows - 1)
    t1 = min(t0 + 1, ds.grid_cols - 1)
    fs = s - s0
    ft = t - t0
    center = (
        (1 - fs) * (1 - ft) * ds.calibrations[(s0, t0)].t
        + fs * (1 - ft) * ds.calibrations[(s1, t0)].t
        + (1 - fs) * ft * ds.calibrations[(s0, t1)].t
        + fs * ft * ds.calibrations[(s1, t1)].t
    )
    nearest = ds.calibrations[ds.nearest_view(s, t)]
    return CameraCalibration(K=nearest.K, R=nearest.R, t=center)


def refocus_at_virtual_view(
    ds: LightFieldDataset,
    virtual_ref: tuple[float, float],
    radius: float,
    plane: RefocusPlane | None = None,
    delta: float | None = None,
    profile: str = "uniform",
) -> RefocusImage:
    """Perspective shift: refocus as seen from a virtual camera at a
    continuous grid position. Exactly one of plane/delta selects the mode.

    Raises:
        OutOfHull: virtual reference outside the grid hull.
    """
    if (plane is None) == (delta is None):
        raise ValueError("specify exactly one of plane or delta")
    s, t = float(virtual_ref[0]), float(virtual_ref[1])
    if not (0.0 <= s <= ds.grid_rows - 1 and 0.0 <= t <= ds.grid_cols - 1):
        raise OutOfHull(f"virtual reference ({s}, {t}) outside the camera grid")
    aperture = make_aperture(ds, (s, t), radius, profile)
    if plane is not None:
        ref_cal = virtual_calibration(ds, s, t)
        return refocus_generalized(ds, aperture, plane, ref_cal)
    return shift_and_sum(ds, aperture, delta)
