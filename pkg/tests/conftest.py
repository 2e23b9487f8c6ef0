import pytest

from tiltshift.lfio import save_dataset
from tiltshift.synthetic import make_scene, render_scene


@pytest.fixture(scope="session")
def frontoparallel_dataset_dir(tmp_path_factory):
    """3x3 rectified grid, 64x64 views, textured plane at z=2 (f*B/z = 5)."""
    scene = make_scene(image_size=(64, 64), plane_depth=2.0)
    root = tmp_path_factory.mktemp("lf") / "fronto"
    save_dataset(render_scene(scene), root, name="fronto-z2")
    return root


@pytest.fixture(scope="session")
def tilted_dataset_dir(tmp_path_factory):
    """Same rig with the plane tilted 30 degrees about y."""
    scene = make_scene(image_size=(64, 64), tilt_y=30.0)
    root = tmp_path_factory.mktemp("lf") / "tilted"
    save_dataset(render_scene(scene), root, name="tilted-30y")
    return root
