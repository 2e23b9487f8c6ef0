"""Self-check suite: the equivalences that pin down the engine's conventions.

Four checks, each printing its maximum deviation:

  * homography consistency: chaining a reference pixel through the
    plane-induced map equals direct projection of on-plane 3D points;
  * frontoparallel equivalence: generalized refocus with n = (0,0,1)
    equals classic shift-and-sum with delta = f * B / d;
  * oracle equivalence: whole-view warping equals the naive pointwise
    evaluation;
  * reference identity: a single-view aperture returns the reference view.

The frontoparallel check is the one that fails loudly if the translation
sign convention is broken (the verify CLI exposes a hook to do exactly
that as a negative control).
"""

from __future__ import annotations

import numpy as np

from .geometry import CameraCalibration, RefocusPlane, make_intrinsics, projection_map, apply_projection
from .lfio import LightFieldDataset, image_to_float
from .refocus import make_aperture, refocus_generalized, shift_and_sum
from .synthetic import make_scene, oracle_refocus, render_scene

PIXEL_TOL = 1e-6
IMAGE_TOL = 1e-6


def _report(name: str, deviation: float, tol: float) -> bool:
    ok = deviation <= tol
    print(f"{'PASS' if ok else 'FAIL'}  {name}: max deviation {deviation:.3e} "
          f"(tolerance {tol:.0e})")
    return ok


def _crop_dataset(ds: LightFieldDataset, size: int = 32) -> LightFieldDataset:
    """Center-crop all views (intrinsics shifted accordingly) so the slow
    pointwise oracle stays fast on real datasets."""
    if ds.width <= size and ds.height <= size:
        return ds
    u0 = (ds.width - size) // 2
    v0 = (ds.height - size) // 2
    views, cals = {}, {}
    for st, img in ds.views.items():
        views[st] = np.ascontiguousarray(img[v0:v0 + size, u0:u0 + size])
        cal = ds.calibrations[st]
        K = cal.K.copy()
        K[0, 2] -= u0
        K[1, 2] -= v0
        cals[st] = CameraCalibration(K=K, R=cal.R, t=cal.t)
    return LightFieldDataset(grid_rows=ds.grid_rows, grid_cols=ds.grid_cols,
                             views=views, calibrations=cals)


def check_homography_consistency(seed: int = 0, n_points: int = 1000) -> float:
    """Max pixel-chaining error over random on-plane points (rectified rig
    plus randomized plane orientations)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    K = make_intrinsics(120.0, 110.0, 31.5, 31.5)
    for _ in range(n_points):
        ref = CameraCalibration(K=K, R=np.eye(3), t=rng.uniform(-0.2, 0.2, 3))
        tgt = CameraCalibration(K=K, R=np.eye(3), t=rng.uniform(-0.2, 0.2, 3))
        n = rng.normal(size=3)
        n[2] = rng.uniform(1.0, 3.0)
        plane = RefocusPlane(p=np.array([0.0, 0.0, rng.uniform(1.5, 4.0)]), n=n)
        e1, e2 = np.linalg.svd(plane.n[None, :])[2][1:]
        X = plane.p + rng.uniform(-0.8, 0.8) * e1 + rng.uniform(-0.8, 0.8) * e2
        if min((c.R @ (X - c.t))[2] for c in (ref, tgt)) < 0.3:
            continue
        pmap = projection_map(tgt, ref, plane)
        err = np.abs(apply_projection(pmap, ref.project(X)) - tgt.project(X)).max()
        worst = max(worst, float(err))
    return worst


def _frontoparallel_depth(ds: LightFieldDataset) -> float:
    """Plane depth whose disparity the dataset can confirm, or a default."""
    f = next(iter(ds.calibrations.values())).K[0, 0]
    B = ds.baseline_step()
    for disp in ds.disparities.values():
        valid = disp.values[disp.valid_mask]
        if valid.size:
            med = float(np.median(valid)) * ds.disparity_scale
            if abs(med) > 1e-9:
                return f * B / med
    return f * B  # delta = 1 px per step


def check_frontoparallel_equivalence(ds: LightFieldDataset) -> float:
    ref_st = ds.nearest_view(*ds.grid_center)
    ref_cal = ds.calibrations[ref_st]
    d = _frontoparallel_depth(ds)
    plane = RefocusPlane(p=ref_cal.t + d * ref_cal.optical_axis, n=np.array([0.0, 0.0, 1.0]))
    delta = ref_cal.K[0, 0] * ds.baseline_step() / d
    aperture = make_aperture(ds, ref_st, radius=ds.grid_rows + ds.grid_cols)
    gen = refocus_generalized(ds, aperture, plane, ref_cal)
    classic = shift_and_sum(ds, aperture, delta)
    return float(max(np.abs(gen.image - classic.image).max(),
                     np.abs(gen.coverage - classic.coverage).max()))


def check_oracle_equivalence(ds: LightFieldDataset, seed: int = 0,
                             n_configs: int = 3) -> float:
    small = _crop_dataset(ds, size=32)
    rng = np.random.default_rng(seed)
    ref_st = small.nearest_view(*small.grid_center)
    ref_cal = small.calibrations[ref_st]
    d0 = _frontoparallel_depth(small)
    worst = 0.0
    for _ in range(n_configs):
        n = rng.normal(size=3) * 0.4
        n[2] = 1.0
        plane = RefocusPlane(
            p=ref_cal.t + rng.uniform(0.7, 1.3) * d0 * ref_cal.optical_axis, n=n)
        radius = rng.uniform(0.8, small.grid_rows + small.grid_cols)
        profile = rng.choice(["uniform", "gaussian"])
        aperture = make_aperture(small, small.grid_center, radius, profile)
        fast = refocus_generalized(small, aperture, plane, ref_cal)
        slow = oracle_refocus(small, aperture, plane, ref_cal)
        worst = max(worst, float(np.abs(fast.image - slow.image).max()))
    return worst


def check_reference_identity(ds: LightFieldDataset) -> float:
    ref_st = ds.nearest_view(*ds.grid_center)
    ref_cal = ds.calibrations[ref_st]
    d = _frontoparallel_depth(ds)
    plane = RefocusPlane(p=ref_cal.t + d * ref_cal.optical_axis, n=np.array([0.0, 0.0, 1.0]))
    aperture = make_aperture(ds, ref_st, radius=0.4)
    out = refocus_generalized(ds, aperture, plane, ref_cal)
    return float(np.abs(out.image - image_to_float(ds.views[ref_st])).max())


def run_checks(ds: LightFieldDataset | None = None, seed: int = 0,
               flip_translation_sign: bool = False) -> bool:
    """Run every check, printing one PASS/FAIL line each; True if all pass."""
    if ds is None:
        scene = make_scene(image_size=(48, 48), plane_depth=2.0, seed=seed)
        cameras = scene.cameras
        if flip_translation_sign:
            cameras = {st: CameraCalibration(K=c.K, R=c.R, t=-c.t)
                       for st, c in cameras.items()}
        ds = render_scene(scene)
        if flip_translation_sign:
            ds = LightFieldDataset(
                grid_rows=ds.grid_rows, grid_cols=ds.grid_cols, views=ds.views,
                calibrations=cameras, disparities=ds.disparities,
                disparity_scale=ds.disparity_scale, meta=ds.meta)

    ok = _report("homography consistency", check_homography_consistency(seed), PIXEL_TOL)
    ok &= _report("frontoparallel equivalence", check_frontoparallel_equivalence(ds), IMAGE_TOL)
    ok &= _report("oracle equivalence", check_oracle_equivalence(ds, seed), IMAGE_TOL)
    ok &= _report("reference identity", check_reference_identity(ds), IMAGE_TOL)
    return bool(ok)
