"""Ground-truth light fields for verification: pinhole renders of a single
textured plane, analytic disparity, and a naive pointwise refocus oracle.

Scenes are rendered by ray-plane intersection, not by the engine's warps,
so they are an independent reference for the refocus pipeline. The angular
convention matches the rest of the package: stepping +1 in s (resp. t)
moves the camera by -baseline along x (resp. y), so stored disparity is
the positive quantity f * B / z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from .errors import PlaneBehindCamera
from .geometry import (
    CameraCalibration,
    RefocusPlane,
    make_intrinsics,
    projection_map,
    rotation_x,
    rotation_y,
)
from .lfio import DisparityMap, LightFieldDataset, float_to_uint8, image_to_float
from .refocus import Aperture, RefocusImage


@dataclass(frozen=True)
class SyntheticScene:
    """A textured plane observed by a rectified camera grid.

    The texture tiles the plane: plane point X maps to texture pixel
    ((X - p) . e1, (X - p) . e2) * texture_scale + texture center, wrapped.
    """
    plane: RefocusPlane
    texture: NDArray[np.float32]          # (Ht, Wt, 3) in [0, 1]
    texture_scale: float                  # texture pixels per meter on the plane
    cameras: dict[tuple[int, int], CameraCalibration]
    grid_rows: int
    grid_cols: int
    image_size: tuple[int, int]           # (width, height)
    baseline: float                       # meters per angular step

    @property
    def plane_axes(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Orthonormal in-plane axes (e1, e2) anchoring the texture frame."""
        n = self.plane.n
        seed = np.array([1.0, 0.0, 0.0])
        if abs(seed @ n) > 0.9:
            seed = np.array([0.0, 1.0, 0.0])
        e1 = seed - (seed @ n) * n
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return e1, e2

    def reference_index(self) -> tuple[int, int]:
        return ((self.grid_rows - 1) // 2, (self.grid_cols - 1) // 2)


def make_texture(
    size: int = 256,
    seed: int = 0,
    noise_cell: int = 4,
    checker_cell: int = 16,
    checker_contrast: float = 0.2,
    edge_softness: float = 1.5,
) -> NDArray[np.float32]:
    """Deterministic test texture: band-limited RGB noise plus a softened
    checkerboard. The noise carries the PSNR discrimination; the checker
    adds visible structure. Cell sizes in texture pixels.

    The defaults balance two pulls: smooth enough that refocusing at the
    true plane survives the double interpolation (render + warp) above
    40 dB, sharp enough that sub-pixel misfocus costs several dB.
    """
    rng = np.random.default_rng(seed)
    coarse = rng.random((size // noise_cell, size // noise_cell, 3))
    noise = ndimage.zoom(coarse, (noise_cell, noise_cell, 1), order=1, mode="grid-wrap")
    yy, xx = np.mgrid[0:size, 0:size]
    checker = (((xx // checker_cell) + (yy // checker_cell)) % 2).astype(np.float64)
    checker = ndimage.gaussian_filter(checker, edge_softness, mode="wrap")
    tex = 0.25 + 0.5 * noise + checker_contrast * (checker[..., None] - 0.5)
    return np.clip(tex, 0.0, 1.0).astype(np.float32)


def make_scene(
    grid_rows: int = 3,
    grid_cols: int = 3,
    image_size: tuple[int, int] = (64, 64),
    focal: float = 100.0,
    baseline: float = 0.1,
    plane_depth: float = 2.0,
    tilt_x: float = 0.0,
    tilt_y: float = 0.0,
    seed: int = 0,
    texture_magnification: float = 1.0,
    texture_size: int = 256,
) -> SyntheticScene:
    """Standard test scene: rectified grid centered on the world origin,
    plane on the optical axis at plane_depth, tilted by the given angles.

    texture_magnification is the number of view pixels per texture pixel at
    the plane center; larger values give a smoother (more band-limited)
    scene.
    """
    w, h = image_size
    K = make_intrinsics(focal, focal, (w - 1) / 2.0, (h - 1) / 2.0)
    s_c = (grid_rows - 1) / 2.0
    t_c = (grid_cols - 1) / 2.0
    cameras = {}
    for s in range(grid_rows):
        for t in range(grid_cols):
            center = np.array([-(s - s_c) * baseline, -(t - t_c) * baseline, 0.0])
            cameras[(s, t)] = CameraCalibration(K=K, R=np.eye(3), t=center)
    normal = rotation_x(tilt_x) @ rotation_y(tilt_y) @ np.array([0.0, 0.0, 1.0])
    plane = RefocusPlane(p=np.array([0.0, 0.0, plane_depth]), n=normal)
    texture = make_texture(size=texture_size, seed=seed)
    texture_scale = focal / (plane_depth * texture_magnification)
    return SyntheticScene(
        plane=plane,
        texture=texture,
        texture_scale=texture_scale,
        cameras=cameras,
        grid_rows=grid_rows,
        grid_cols=grid_cols,
        image_size=image_size,
        baseline=baseline,
    )


def _sample_texture_wrapped(tex: NDArray[np.float32], xs, ys) -> NDArray[np.float64]:
    """Bilinear sample of a tiling texture at continuous coordinates."""
    th, tw = tex.shape[:2]
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    x0m, x1m = x0 % tw, (x0 + 1) % tw
    y0m, y1m = y0 % th, (y0 + 1) % th
    top = (1 - fx) * tex[y0m, x0m] + fx * tex[y0m, x1m]
    bot = (1 - fx) * tex[y1m, x0m] + fx * tex[y1m, x1m]
    return (1 - fy) * top + fy * bot


def render_view(scene: SyntheticScene, cal: CameraCalibration):
    """Render one camera: returns (uint8 image, float64 depth map)."""
    w, h = scene.image_size
    vv, uu = np.mgrid[0:h, 0:w].astype(np.float64)
    ones = np.ones_like(uu)
    dirs_cam = np.stack([uu, vv, ones], axis=-1) @ cal.K_inv.T
    dirs_world = dirs_cam @ cal.R  # R^T applied to each direction
    denom = dirs_world @ scene.plane.n
    if np.any(np.abs(denom) < 1e-12):
        raise PlaneBehindCamera("a view ray is parallel to the plane")
    lam = ((scene.plane.p - cal.t) @ scene.plane.n) / denom
    if np.any(lam <= 0):
        raise PlaneBehindCamera("plane is not fully in front of the camera")
    points = cal.t + lam[..., None] * dirs_world
    e1, e2 = scene.plane_axes
    rel = points - scene.plane.p
    tx = (rel @ e1) * scene.texture_scale + scene.texture.shape[1] / 2.0
    ty = (rel @ e2) * scene.texture_scale + scene.texture.shape[0] / 2.0
    colors = _sample_texture_wrapped(scene.texture, tx, ty)
    # dirs_cam has z == 1, so the ray parameter is the camera-frame depth
    return float_to_uint8(colors), lam


def render_scene(scene: SyntheticScene) -> LightFieldDataset:
    """Render every grid view with its exact analytic disparity map."""
    views = {}
    disparities = {}
    for st in sorted(scene.cameras):
        cal = scene.cameras[st]
        img, depth = render_view(scene, cal)
        views[st] = img
        disp = cal.K[0, 0] * scene.baseline / depth
        disparities[st] = DisparityMap(
            values=disp.astype(np.float32),
            valid_mask=np.ones_like(disp, dtype=bool),
        )
    return LightFieldDataset(
        grid_rows=scene.grid_rows,
        grid_cols=scene.grid_cols,
        views=views,
        calibrations=dict(scene.cameras),
        disparities=disparities,
        disparity_scale=1.0,
        meta={
            "name": "synthetic",
            "ground_truth": {
                "plane_p": [float(x) for x in scene.plane.p],
                "plane_n": [float(x) for x in scene.plane.n],
                "baseline": scene.baseline,
            },
        },
    )


def psnr(image, reference, mask=None) -> float:
    """Peak signal-to-noise ratio in dB between [0, 1] float images.

    uint8 inputs are rescaled; mask (H, W) restricts the comparison, e.g.
    to covered refocus pixels. Returns inf for identical images.
    """
    a = image_to_float(image) if np.asarray(image).dtype == np.uint8 else np.asarray(image, np.float64)
    b = image_to_float(reference) if np.asarray(reference).dtype == np.uint8 else np.asarray(reference, np.float64)
    if mask is not None:
        a = a[np.asarray(mask, bool)]
        b = b[np.asarray(mask, bool)]
    mse = float(np.mean((np.asarray(a, np.float64) - np.asarray(b, np.float64)) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def oracle_refocus(
    ds: LightFieldDataset,
    aperture: Aperture,
    plane: RefocusPlane,
    ref_cal: CameraCalibration,
) -> RefocusImage:
    """Direct pointwise evaluation of generalized refocus: per output pixel,
    per view, apply the projection, bilinear-sample, and take the weighted
    masked sum. No whole-view warps; this is the slow reference the engine
    is checked against.
    """
    h, w = ds.height, ds.width
    num = np.zeros((h, w, 3), dtype=np.float64)
    den = np.zeros((h, w), dtype=np.float64)
    for st, weight in sorted(aperture.entries):
        P = projection_map(ds.calibrations[st], ref_cal, plane).P
        img = image_to_float(ds.views[st])
        for v in range(h):
            for u in range(w):
                hx = P[0, 0] * u + P[0, 1] * v + P[0, 2]
                hy = P[1, 0] * u + P[1, 1] * v + P[1, 2]
                hw = P[2, 0] * u + P[2, 1] * v + P[2, 2]
                if hw <= 1e-12:
                    continue
                x = hx / hw
                y = hy / hw
                x0, y0 = int(np.floor(x)), int(np.floor(y))
                fx, fy = x - x0, y - y0
                val = np.zeros(3, dtype=np.float64)
                msk = 0.0
                for dy, wy in ((0, 1.0 - fy), (1, fy)):
                    for dx, wx in ((0, 1.0 - fx), (1, fx)):
                        xi, yi = x0 + dx, y0 + dy
                        if 0 <= xi <= w - 1 and 0 <= yi <= h - 1:
                            val += wx * wy * img[yi, xi]
                            msk += wx * wy
                if msk > 0:
                    num[v, u] += weight * val  # val/msk * msk: renormalization cancels
                    den[v, u] += weight * msk
    covered = den > 0
    out = np.zeros_like(num)
    out[covered] = num[covered] / den[covered, None]
    return RefocusImage(image=out.astype(np.float32), coverage=den.astype(np.float32))
