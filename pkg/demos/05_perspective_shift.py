"""Perspective shift: place the virtual viewpoint anywhere inside the
camera grid, not just at a captured view. As the viewpoint moves, the
synthetic aperture recruits different cameras.
"""

from pathlib import Path

import numpy as np

from tiltshift import make_aperture, make_scene, refocus_at_virtual_view, render_scene
from tiltshift.lfio import float_to_uint8, save_image

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

scene = make_scene(image_size=(96, 96), tilt_y=30.0)
ds = render_scene(scene)

# sweep the virtual camera across the middle row of the grid
frames = []
for t_pos in (0.0, 0.5, 1.0, 1.5, 2.0):
    members = make_aperture(ds, (1.0, t_pos), radius=1.0).members
    out = refocus_at_virtual_view(ds, (1.0, t_pos), radius=1.0, plane=scene.plane)
    frames.append(float_to_uint8(out.image))
    print(f"virtual reference (1.0, {t_pos}): aperture uses {members}")

save_image(np.concatenate(frames, axis=1), out_dir / "viewpoint_sweep.png")
print(f"wrote {out_dir / 'viewpoint_sweep.png'}")
