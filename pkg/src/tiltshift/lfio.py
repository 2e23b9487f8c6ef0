"""Light-field dataset loading, validation, and image/disparity file IO.

On-disk layout (documented in docs/dataset_format.md): a directory with a
``lightfield.json`` manifest naming an (s, t) grid of 8-bit RGB view images,
one calibration per view, and optional per-view PFM disparity maps. Stored
disparity times the manifest's ``disparity_scale`` is pixels per unit
angular step; NaN marks invalid pixels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from PIL import Image

from .errors import (
    DimensionMismatch,
    IoFailure,
    MalformedCalibration,
    MalformedManifest,
    MissingView,
)
from .geometry import CameraCalibration, make_intrinsics

MANIFEST_NAME = "lightfield.json"

GridIndex = tuple[int, int]


@dataclass(frozen=True)
class DisparityMap:
    """Per-pixel signed disparity in stored units (see dataset meta).

    values[v, u] * disparity_scale is the pixel displacement of the scene
    point per +1 angular step; valid_mask marks pixels that carry depth.
    """
    values: NDArray[np.float32]
    valid_mask: NDArray[np.bool_]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        mask = np.asarray(self.valid_mask, dtype=bool)
        if values.shape != mask.shape or values.ndim != 2:
            raise DimensionMismatch("disparity values and mask shapes differ")
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("disparity must be finite where valid")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LightFieldDataset:
    """A calibrated grid of views: the sampled 4D light field L(s, t, u, v).

    Grid index (s, t) with 0 <= s < grid_rows, 0 <= t < grid_cols. By the
    package's angular convention, stepping +1 in s (resp. t) moves the
    camera by one negative baseline along its x (resp. y) axis, which makes
    disparity positive for scenes in front of the rig.
    """
    grid_rows: int
    grid_cols: int
    views: dict[GridIndex, NDArray[np.uint8]]
    calibrations: dict[GridIndex, CameraCalibration]
    disparities: dict[GridIndex, DisparityMap] = field(default_factory=dict)
    disparity_scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise MalformedManifest("grid must be at least 1x1")
        shape = None
        for s in range(self.grid_rows):
            for t in range(self.grid_cols):
                if (s, t) not in self.views:
                    raise MissingView(f"grid cell ({s}, {t}) has no view")
                if (s, t) not in self.calibrations:
                    raise MalformedCalibration(f"grid cell ({s}, {t}) has no calibration")
                img = self.views[(s, t)]
                if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
                    raise DimensionMismatch(f"view ({s}, {t}) is not 8-bit RGB")
                if shape is None:
                    shape = img.shape
                elif img.shape != shape:
                    raise DimensionMismatch(
                        f"view ({s}, {t}) is {img.shape[1]}x{img.shape[0]}, "
                        f"expected {shape[1]}x{shape[0]}"
                    )
        for st, disp in self.disparities.items():
            if st not in self.views:
                raise MalformedManifest(f"disparity for unknown view {st}")
            if (disp.height, disp.width) != shape[:2]:
                raise DimensionMismatch(f"disparity {st} does not match view dimensions")

    @property
    def height(self) -> int:
        return next(iter(self.views.values())).shape[0]

    @property
    def width(self) -> int:
        return next(iter(self.views.values())).shape[1]

    @property
    def grid_center(self) -> tuple[float, float]:
        return ((self.grid_rows - 1) / 2.0, (self.grid_cols - 1) / 2.0)

    def nearest_view(self, s: float, t: float) -> GridIndex:
        si = int(np.clip(round(s), 0, self.grid_rows - 1))
        ti = int(np.clip(round(t), 0, self.grid_cols - 1))
        return (si, ti)

    def baseline_step(self) -> float:
        """Median camera-center spacing between angularly adjacent views, meters."""
        gaps = []
        for (s, t), cal in self.calibrations.items():
            if (s + 1, t) in self.calibrations:
                gaps.append(np.linalg.norm(self.calibrations[(s + 1, t)].t - cal.t))
            if (s, t + 1) in self.calibrations:
                gaps.append(np.linalg.norm(self.calibrations[(s, t + 1)].t - cal.t))
        if not gaps:
            return 0.0
        return float(np.median(gaps))


def image_to_float(img: NDArray[np.uint8]) -> NDArray[np.float32]:
    """8-bit RGB to float32 in [0, 1]."""
    return np.asarray(img, dtype=np.float32) / 255.0


def float_to_uint8(img: NDArray) -> NDArray[np.uint8]:
    """Float [0, 1] to 8-bit, rounding half away from zero."""
    x = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(x * 255.0 + 0.5).astype(np.uint8)


def save_image(img: NDArray[np.uint8], path: str | Path) -> None:
    """Write an 8-bit RGB image as a lossless PNG."""
    arr = np.asarray(img)
    if arr.size == 0:
        raise ValueError("refusing to save an empty image")
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("save_image expects an (H, W, 3) uint8 array")
    try:
        Image.fromarray(arr, mode="RGB").save(str(path), format="PNG")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_image(path: str | Path) -> NDArray[np.uint8]:
    """Read an image file as (H, W, 3) uint8 RGB."""
    try:
        with Image.open(str(path)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def write_pfm(path: str | Path, values: NDArray, valid_mask: NDArray | None = None) -> None:
    """Write a grayscale PFM (little-endian float32, bottom-up rows).

    Invalid pixels (valid_mask False) are stored as NaN.
    """
    data = np.asarray(values, dtype=np.float32).copy()
    if data.ndim != 2:
        raise ValueError("PFM writer expects a 2D array")
    if valid_mask is not None:
        data[~np.asarray(valid_mask, dtype=bool)] = np.nan
    h, w = data.shape
    try:
        with open(path, "wb") as f:
            f.write(b"Pf\n")
            f.write(f"{w} {h}\n".encode("ascii"))
            f.write(b"-1.0\n")  # negative scale: little-endian
            f.write(np.flipud(data).astype("<f4").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_pfm(path: str | Path) -> DisparityMap:
    """Read a grayscale PFM into a DisparityMap (NaN pixels become invalid)."""
    try:
        with open(path, "rb") as f:
            header = f.readline().strip()
            if header != b"Pf":
                raise MalformedManifest(f"{path}: not a grayscale PFM")
            dims = f.readline().split()
            if len(dims) != 2:
                raise MalformedManifest(f"{path}: bad PFM dimension line")
            w, h = int(dims[0]), int(dims[1])
            scale = float(f.readline())
            dtype = "<f4" if scale < 0 else ">f4"
            raw = np.frombuffer(f.read(w * h * 4), dtype=dtype)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if raw.size != w * h:
        raise MalformedManifest(f"{path}: truncated PFM payload")
    data = np.flipud(raw.reshape(h, w)).astype(np.float32)
    valid = np.isfinite(data)
    safe = np.where(valid, data, np.float32(0.0))
    return DisparityMap(values=safe, valid_mask=valid)


def _format_indexed(pattern: str, s: int, t: int) -> str:
    if "{s}" not in pattern or "{t}" not in pattern:
        raise MalformedManifest(f"pattern {pattern!r} must contain {{s}} and {{t}}")
    return pattern.replace("{s}", str(s)).replace("{t}", str(t))


def _parse_calibration(key: str, obj: dict) -> tuple[GridIndex, CameraCalibration]:
    try:
        s_str, t_str = key.split("_")
        st = (int(s_str), int(t_str))
        K = make_intrinsics(float(obj["fx"]), float(obj["fy"]),
                            float(obj["cx"]), float(obj["cy"]))
        R = np.asarray(obj["R"], dtype=np.float64).reshape(3, 3)
        t = np.asarray(obj["t"], dtype=np.float64).reshape(3)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedManifest(f"bad calibration entry {key!r}: {exc}") from exc
    return st, CameraCalibration(K=K, R=R, t=t)


def load_dataset(path: str | Path) -> LightFieldDataset:
    """Load and fully validate a light-field dataset directory.

    Raises:
        MalformedManifest: missing/invalid lightfield.json.
        MissingView: a declared grid cell has no image file.
        DimensionMismatch: view or disparity dimensions disagree.
        MalformedCalibration: calibration invariants violated.
    """
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise MalformedManifest(f"no {MANIFEST_NAME} in {root}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedManifest(f"cannot parse {manifest_path}: {exc}") from exc

    try:
        rows = int(manifest["grid_rows"])
        cols = int(manifest["grid_cols"])
        view_pattern = str(manifest["view_pattern"])
        cal_entries = manifest["calibrations"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedManifest(f"{manifest_path}: {exc}") from exc
    disparity_pattern = manifest.get("disparity_pattern")
    disparity_scale = float(manifest.get("disparity_scale", 1.0))
    meta = dict(manifest.get("meta", {}))
    if "name" in manifest:
        meta.setdefault("name", manifest["name"])

    if not isinstance(cal_entries, dict):
        raise MalformedManifest("calibrations must map 's_t' keys to entries")
    calibrations: dict[GridIndex, CameraCalibration] = {}
    for key, entry in cal_entries.items():
        st, cal = _parse_calibration(key, entry)
        calibrations[st] = cal

    views: dict[GridIndex, NDArray[np.uint8]] = {}
    disparities: dict[GridIndex, DisparityMap] = {}
    for s in range(rows):
        for t in range(cols):
            view_path = root / _format_indexed(view_pattern, s, t)
            if not view_path.is_file():
                raise MissingView(f"view ({s}, {t}) missing: {view_path.name}")
            views[(s, t)] = load_image(view_path)
            if disparity_pattern:
                disp_path = root / _format_indexed(disparity_pattern, s, t)
                if disp_path.is_file():
                    disparities[(s, t)] = read_pfm(disp_path)

    return LightFieldDataset(
        grid_rows=rows,
        grid_cols=cols,
        views=views,
        calibrations=calibrations,
        disparities=disparities,
        disparity_scale=disparity_scale,
        meta=meta,
    )


def save_dataset(ds: LightFieldDataset, path: str | Path, name: str = "lightfield") -> Path:
    """Write a dataset directory in the documented layout; returns the root."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    cal_entries = {}
    for (s, t), cal in sorted(ds.calibrations.items()):
        cal_entries[f"{s}_{t}"] = {
            "fx": cal.K[0, 0], "fy": cal.K[1, 1],
            "cx": cal.K[0, 2], "cy": cal.K[1, 2],
            "R": [float(x) for x in cal.R.reshape(-1)],
            "t": [float(x) for x in cal.t],
        }
    manifest = {
        "name": name,
        "grid_rows": ds.grid_rows,
        "grid_cols": ds.grid_cols,
        "view_pattern": "view_{s}_{t}.png",
        "calibrations": cal_entries,
        "disparity_scale": ds.disparity_scale,
        "meta": ds.meta,
    }
    if ds.disparities:
        manifest["disparity_pattern"] = "disp_{s}_{t}.pfm"
    for (s, t), img in ds.views.items():
        save_image(img, root / f"view_{s}_{t}.png")
    for (s, t), disp in ds.disparities.items():
        write_pfm(root / f"disp_{s}_{t}.pfm", disp.values, disp.valid_mask)
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))
    return root
