"""Light-field tilt-shift refocus toolkit.

Refocus a calibrated light field onto arbitrary planes via plane-induced
homographies (a generalization of classic shift-and-sum), build point
clouds from disparity for depth-driven plane placement, and serve an
interactive session API.
"""

from . import errors
from .geometry import (
    CameraCalibration,
    ProjectionMap,
    RefocusPlane,
    apply_projection,
    homography,
    plane_distance,
    projection_map,
)
from .interaction import (
    ManualPlaneState,
    adjust_plane,
    plane_from_click,
    plane_from_manual,
    plane_from_three_points,
)
from .lfio import (
    DisparityMap,
    LightFieldDataset,
    load_dataset,
    save_dataset,
    save_image,
)
from .pointcloud import (
    NormalMap,
    PointCloud,
    build_point_cloud,
    disparity_to_depth,
    estimate_normals,
    export_ply,
    raster_normal_map,
    reproject_pixel,
)
from .refocus import (
    Aperture,
    RefocusImage,
    WarpedView,
    make_aperture,
    refocus_at_virtual_view,
    refocus_generalized,
    shift_and_sum,
    warp_view,
)
from .synthetic import SyntheticScene, make_scene, oracle_refocus, render_scene

__version__ = "0.1.0"

__all__ = [
    "errors",
    "CameraCalibration",
    "ProjectionMap",
    "RefocusPlane",
    "apply_projection",
    "homography",
    "plane_distance",
    "projection_map",
    "ManualPlaneState",
    "adjust_plane",
    "plane_from_click",
    "plane_from_manual",
    "plane_from_three_points",
    "DisparityMap",
    "LightFieldDataset",
    "load_dataset",
    "save_dataset",
    "save_image",
    "NormalMap",
    "PointCloud",
    "build_point_cloud",
    "disparity_to_depth",
    "estimate_normals",
    "export_ply",
    "raster_normal_map",
    "reproject_pixel",
    "Aperture",
    "RefocusImage",
    "WarpedView",
    "make_aperture",
    "refocus_at_virtual_view",
    "refocus_generalized",
    "shift_and_sum",
    "warp_view",
    "SyntheticScene",
    "make_scene",
    "oracle_refocus",
    "render_scene",
]
