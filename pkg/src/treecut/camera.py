"""Pinhole camera intrinsics with backprojection/projection helpers."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole model: focal lengths and principal point in pixels.

    ``depth_scale`` is the number of stored depth units per meter (1000 for
    millimeter-encoded 16-bit depth maps, the NYU/TUM convention).
    """

    fx: float
    fy: float
    cx: float
    cy: float
    depth_scale: float = 1000.0

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise InputError(f"focal lengths must be positive (fx={self.fx}, fy={self.fy})")
        if not self.depth_scale > 0:
            raise InputError(f"depth_scale must be positive (got {self.depth_scale})")

    @classmethod
    def from_json(cls, path) -> "Intrinsics":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc
        try:
            return cls(
                fx=float(raw["fx"]),
                fy=float(raw["fy"]),
                cx=float(raw["cx"]),
                cy=float(raw["cy"]),
                depth_scale=float(raw.get("depth_scale", 1000.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: bad intrinsics ({exc})") from exc

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def backproject(self, u, v, z) -> np.ndarray:
        """Map pixel coordinates plus metric depth to camera-frame 3D points.

        Broadcasts over array inputs; returns points of shape ``(..., 3)`` with
        the camera looking down +z.
        """
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        x = (u - self.cx) * z / self.fx
        y = (v - self.cy) * z / self.fy
        return np.stack(np.broadcast_arrays(x, y, z), axis=-1)

    def project(self, points):
        """Map camera-frame 3D points to pixel coordinates ``(u, v)``."""
        p = np.asarray(points, dtype=np.float64)
        u = self.fx * p[..., 0] / p[..., 2] + self.cx
        v = self.fy * p[..., 1] / p[..., 2] + self.cy
        return u, v
