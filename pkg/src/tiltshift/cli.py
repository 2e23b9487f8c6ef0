"""Command-line access to the refocus engine.

    tiltshift refocus    render a refocus image from a dataset
    tiltshift pointcloud build and export a PLY point cloud
    tiltshift synth      write a synthetic ground-truth dataset
    tiltshift verify     run the oracle- and frontoparallel-equivalence checks
    tiltshift serve      start the interactive session service

Exit codes: 0 success, 1 engine/data error, 2 usage error. Heavy imports
happen after argument parsing so --threads can cap the numeric thread
pools before they initialize.
"""

from __future__ import annotations

import argparse
import os
import sys


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _pair(text: str, n: int = 2):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return parts


def _plane_spec(text: str):
    # grammar: px,py,pz:nx,ny,nz
    try:
        point_part, normal_part = text.split(":")
        p = [float(x) for x in point_part.split(",")]
        n = [float(x) for x in normal_part.split(",")]
        if len(p) != 3 or len(n) != 3:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected px,py,pz:nx,ny,nz, got {text!r}") from None
    return p, n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiltshift",
                                     description="Light-field tilt-shift refocus")
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="cap numeric thread pools")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ref = sub.add_parser("refocus", help="render a refocus image")
    p_ref.add_argument("--lf", required=True, help="dataset directory")
    p_ref.add_argument("--out", required=True, help="output PNG path")
    mode = p_ref.add_mutually_exclusive_group(required=True)
    mode.add_argument("--disparity", type=float,
                      help="classic shift-and-sum disparity")
    mode.add_argument("--plane", type=_plane_spec, metavar="PX,PY,PZ:NX,NY,NZ",
                      help="refocus plane as point:normal")
    mode.add_argument("--click", type=_pair, metavar="U,V",
                      help="single-click plane from the reference view")
    mode.add_argument("--manual", type=lambda s: _pair(s, 3), metavar="Z,RX,RY",
                      help="manual plane: distance and tilts in degrees")
    p_ref.add_argument("--reference", type=_pair, default=None, metavar="S,T",
                       help="angular reference position (default: grid center)")
    p_ref.add_argument("--radius", type=float, default=None,
                       help="aperture radius (default: whole grid)")
    p_ref.add_argument("--profile", choices=("uniform", "gaussian"),
                       default="uniform")

    p_pc = sub.add_parser("pointcloud", help="export a PLY point cloud")
    p_pc.add_argument("--lf", required=True)
    p_pc.add_argument("--out", required=True, help="output PLY path")
    p_pc.add_argument("--stride", type=_positive_int, default=1)
    p_pc.add_argument("--views", default="reference", choices=("reference", "all"))
    p_pc.add_argument("--k", type=_positive_int, default=8,
                      help="neighbors for normal estimation")
    p_pc.add_argument("--no-normals", action="store_true",
                      help="skip normal estimation")

    p_sy = sub.add_parser("synth", help="write a synthetic dataset")
    p_sy.add_argument("--out", required=True, help="output directory")
    p_sy.add_argument("--size", type=_positive_int, default=64, help="view size in px")
    p_sy.add_argument("--grid", type=_positive_int, default=3, help="grid rows and cols")
    p_sy.add_argument("--depth", type=float, default=2.0, help="plane depth in m")
    p_sy.add_argument("--tilt-x", type=float, default=0.0, help="plane tilt about x, deg")
    p_sy.add_argument("--tilt-y", type=float, default=0.0, help="plane tilt about y, deg")
    p_sy.add_argument("--focal", type=float, default=100.0, help="focal length in px")
    p_sy.add_argument("--baseline", type=float, default=0.1, help="m per angular step")
    p_sy.add_argument("--seed", type=int, default=0)

    p_ver = sub.add_parser("verify", help="run equivalence checks")
    p_ver.add_argument("--lf", default=None,
                       help="rectified dataset to verify (default: built-in synthetic)")
    p_ver.add_argument("--seed", type=int, default=0)
    # negative-control hook: breaks the translation convention on purpose
    p_ver.add_argument("--flip-translation-sign", action="store_true",
                       help=argparse.SUPPRESS)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=_positive_int, default=8089)
    p_srv.add_argument("--idle-timeout", type=float, default=1800.0,
                       help="session expiry in seconds")

    return parser


def _cap_threads(n: int | None):
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def cmd_refocus(args) -> int:
    import numpy as np

    from .interaction import ManualPlaneState, plane_from_click, plane_from_manual
    from .lfio import float_to_uint8, load_dataset, save_image
    from .pointcloud import build_point_cloud, default_stride, estimate_normals, raster_normal_map
    from .geometry import RefocusPlane
    from .refocus import make_aperture, refocus_generalized, shift_and_sum, virtual_calibration

    ds = load_dataset(args.lf)
    reference = tuple(args.reference) if args.reference else ds.grid_center
    radius = args.radius if args.radius is not None else \
        float(np.hypot(ds.grid_rows - 1, ds.grid_cols - 1)) + 1.0
    aperture = make_aperture(ds, reference, radius, args.profile)
    ref_cal = virtual_calibration(ds, *reference)

    if args.disparity is not None:
        result = shift_and_sum(ds, aperture, args.disparity)
    else:
        if args.plane is not None:
            p, n = args.plane
            plane = RefocusPlane(p=np.asarray(p), n=np.asarray(n))
        elif args.click is not None:
            stride = min(default_stride(ds, n_views=1), 4)
            cloud = estimate_normals(
                build_point_cloud(ds, views="reference", stride=stride), k=8, ds=ds)
            nmap = raster_normal_map(cloud, ds.width, ds.height)
            plane = plane_from_click(ds, ds.nearest_view(*reference),
                                     tuple(args.click), nmap)
        else:
            z, rx, ry = args.manual
            plane = plane_from_manual(ManualPlaneState(z=z, rot_x=rx, rot_y=ry),
                                      ref_cal)
        result = refocus_generalized(ds, aperture, plane, ref_cal)

    save_image(float_to_uint8(result.image), args.out)
    print(f"wrote {args.out}")
    print(f"coverage: min={result.coverage.min():.4f} "
          f"mean={result.coverage.mean():.4f} "
          f"empty={1.0 - result.covered_fraction:.4f}")
    return 0


def cmd_pointcloud(args) -> int:
    from .lfio import load_dataset
    from .pointcloud import build_point_cloud, estimate_normals, export_ply

    ds = load_dataset(args.lf)
    cloud = build_point_cloud(ds, views=args.views, stride=args.stride)
    if not args.no_normals:
        cloud = estimate_normals(cloud, k=args.k, ds=ds)
    export_ply(cloud, args.out)
    print(f"wrote {args.out} ({len(cloud)} points)")
    return 0


def cmd_synth(args) -> int:
    from .lfio import save_dataset
    from .synthetic import make_scene, render_scene

    scene = make_scene(
        grid_rows=args.grid, grid_cols=args.grid,
        image_size=(args.size, args.size),
        focal=args.focal, baseline=args.baseline, plane_depth=args.depth,
        tilt_x=args.tilt_x, tilt_y=args.tilt_y, seed=args.seed,
    )
    root = save_dataset(render_scene(scene), args.out, name="synthetic")
    print(f"wrote {root} ({args.grid}x{args.grid} views, {args.size}x{args.size} px)")
    return 0


def cmd_verify(args) -> int:
    import numpy as np

    from .geometry import CameraCalibration
    from .lfio import LightFieldDataset, load_dataset
    from .verify import run_checks

    ds = None
    if args.lf is not None:
        if not os.path.isdir(args.lf):
            print(f"error: dataset directory not found: {args.lf}", file=sys.stderr)
            return 2
        ds = load_dataset(args.lf)
        if args.flip_translation_sign:
            flipped = {st: CameraCalibration(K=c.K, R=c.R, t=-np.asarray(c.t))
                       for st, c in ds.calibrations.items()}
            ds = LightFieldDataset(
                grid_rows=ds.grid_rows, grid_cols=ds.grid_cols, views=ds.views,
                calibrations=flipped, disparities=ds.disparities,
                disparity_scale=ds.disparity_scale, meta=ds.meta)
    ok = run_checks(ds, seed=args.seed,
                    flip_translation_sign=args.flip_translation_sign and ds is None)
    return 0 if ok else 1


def cmd_serve(args) -> int:
    from .service import main as serve_main

    serve_main(host=args.host, port=args.port, idle_timeout=args.idle_timeout)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _cap_threads(args.threads)

    handler = {
        "refocus": cmd_refocus,
        "pointcloud": cmd_pointcloud,
        "synth": cmd_synth,
        "verify": cmd_verify,
        "serve": cmd_serve,
    }[args.command]

    from .errors import TiltShiftError
    try:
        return handler(args)
    except TiltShiftError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
