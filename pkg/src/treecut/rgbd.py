"""RGB-D frame ingestion: depth backprojection, HSV colors, windowed surface normals."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from skimage.color import rgb2hsv

from . import pngio
from .camera import Intrinsics
from .errors import InputError

DEFAULT_NORMAL_WINDOW = 9


@dataclass
class PointMap:
    """Per-pixel 3D points, unit normals and HSV colors for one RGB-D frame.

    ``points`` are camera-frame meters (camera looks down +z).  ``normals`` are
    unit length, oriented toward the camera (normal . point <= 0), and all-zero
    until :func:`estimate_normals` has run.  ``valid`` marks pixels with
    measured depth (and, after normal estimation, an estimable local plane);
    the point/normal entries of invalid pixels are meaningless and must not be
    read.
    """

    intr: Intrinsics
    points: np.ndarray   # (H, W, 3) float64
    normals: np.ndarray  # (H, W, 3) float64
    colors: np.ndarray   # (H, W, 3) float64, HSV in [0, 1]
    valid: np.ndarray    # (H, W) bool

    @property
    def height(self) -> int:
        return self.points.shape[0]

    @property
    def width(self) -> int:
        return self.points.shape[1]

    @property
    def shape(self):
        return self.points.shape[:2]


def pointmap_from_arrays(depth_m: np.ndarray, rgb: np.ndarray, intr: Intrinsics) -> PointMap:
    """Build a PointMap from a metric depth array (0 = missing) and an RGB image."""
    depth_m = np.asarray(depth_m, dtype=np.float64)
    rgb = np.asarray(rgb)
    if depth_m.ndim != 2:
        raise InputError(f"depth must be 2D, got shape {depth_m.shape}")
    if rgb.shape[:2] != depth_m.shape or rgb.ndim != 3 or rgb.shape[2] != 3:
        raise InputError(f"rgb shape {rgb.shape} does not match depth shape {depth_m.shape}")
    h, w = depth_m.shape
    valid = depth_m > 0
    us, vs = np.meshgrid(np.arange(w), np.arange(h))
    points = intr.backproject(us, vs, depth_m)
    points[~valid] = 0.0
    colors = rgb2hsv(rgb)
    normals = np.zeros_like(points)
    return PointMap(intr=intr, points=points, normals=normals, colors=colors, valid=valid)


def load_frame(rgb_path, depth_path, intr: Intrinsics) -> PointMap:
    """Load an 8-bit RGB PNG plus 16-bit depth PNG into a backprojected PointMap.

    Depth value 0 means missing; other values are divided by ``intr.depth_scale``
    to obtain meters.
    """
    rgb = pngio.read_rgb8(rgb_path)
    raw = pngio.read_gray16(depth_path)
    if raw.shape != rgb.shape[:2]:
        raise InputError(
            f"depth {depth_path} has shape {raw.shape} but rgb {rgb_path} has {rgb.shape[:2]}"
        )
    return pointmap_from_arrays(raw.astype(np.float64) / intr.depth_scale, rgb, intr)


def _box_sum(arr: np.ndarray, radius: int) -> np.ndarray:
    """Per-pixel sum of ``arr`` over (2r+1)^2 windows clipped at the image border."""
    h, w = arr.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    ii[1:, 1:] = arr.cumsum(axis=0).cumsum(axis=1)
    y0 = np.clip(np.arange(h) - radius, 0, h)
    y1 = np.clip(np.arange(h) + radius + 1, 0, h)
    x0 = np.clip(np.arange(w) - radius, 0, w)
    x1 = np.clip(np.arange(w) + radius + 1, 0, w)
    return ii[np.ix_(y1, x1)] - ii[np.ix_(y0, x1)] - ii[np.ix_(y1, x0)] + ii[np.ix_(y0, x0)]


def estimate_normals(pm: PointMap, window: int = DEFAULT_NORMAL_WINDOW) -> PointMap:
    """Per-pixel total-least-squares normals from windowed neighborhoods.

    Each valid pixel gets the smallest-eigenvector normal of the covariance of
    the valid 3D points inside its window x window neighborhood, oriented
    toward the camera.  Pixels whose neighborhood contains fewer than 3 valid
    points become invalid (never an error: degenerate neighborhoods are simply
    dropped).  Returns a new PointMap; the input is not modified.
    """
    if window < 3 or window % 2 == 0:
        raise InputError(f"normal window must be an odd integer >= 3, got {window}")
    r = window // 2
    v = pm.valid
    pts = np.where(v[..., None], pm.points, 0.0)

    cnt = _box_sum(v.astype(np.float64), r)
    ok = v & (cnt >= 3)
    idx = np.flatnonzero(ok.ravel())
    normals = np.zeros_like(pm.points)
    if idx.size == 0:
        return replace(pm, normals=normals, valid=ok)

    s1 = np.stack([_box_sum(pts[..., i], r) for i in range(3)], axis=-1)
    pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    s2 = {p: _box_sum(pts[..., p[0]] * pts[..., p[1]], r) for p in pairs}

    n_ok = cnt.ravel()[idx]
    m1 = s1.reshape(-1, 3)[idx]
    scatter = np.empty((idx.size, 3, 3), dtype=np.float64)
    for (i, j) in pairs:
        cov = s2[(i, j)].ravel()[idx] - m1[:, i] * m1[:, j] / n_ok
        scatter[:, i, j] = cov
        scatter[:, j, i] = cov

    _, vecs = np.linalg.eigh(scatter)
    n = vecs[:, :, 0]
    p = pm.points.reshape(-1, 3)[idx]
    flip = np.einsum("ij,ij->i", n, p) > 0
    n[flip] = -n[flip]
    good = np.isfinite(n).all(axis=1)

    flat = normals.reshape(-1, 3)
    flat[idx[good]] = n[good]
    valid = np.zeros_like(ok)
    valid.ravel()[idx[good]] = True
    return replace(pm, normals=normals, valid=valid)
