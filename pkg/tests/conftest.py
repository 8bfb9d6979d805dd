import hypothesis
import numpy as np
import pytest

from treecut import Intrinsics, estimate_normals, pointmap_from_arrays

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.load_profile("ci")


INTR = Intrinsics(fx=100.0, fy=100.0, cx=31.5, cy=23.5, depth_scale=1000.0)


def make_pointmap(depth_m, rgb=None, intr=INTR, normals=True, window=9):
    """PointMap from a metric depth array; uniform gray image unless given."""
    depth_m = np.asarray(depth_m, dtype=np.float64)
    if rgb is None:
        rgb = np.full(depth_m.shape + (3,), 128, dtype=np.uint8)
    pm = pointmap_from_arrays(depth_m, rgb, intr)
    if normals:
        pm = estimate_normals(pm, window)
    return pm


@pytest.fixture
def intr():
    return INTR


@pytest.fixture
def frontal_pointmap():
    """Noiseless fronto-parallel plane at z = 1 m, 48x64."""
    return make_pointmap(np.ones((48, 64)))


@pytest.fixture(scope="session")
def scene_dirs(tmp_path_factory):
    """Written synthetic scene fixtures, generated once per session."""
    from treecut import synth

    root = tmp_path_factory.mktemp("scenes")
    out = {}
    for name in ("floor_wall", "box_on_floor", "two_boxes_table"):
        out[name] = synth(name, root / name)
    out["box_on_floor_noisy"] = synth("box_on_floor", root / "box_on_floor_noisy", noise_mm=5.0, seed=123)
    return out
