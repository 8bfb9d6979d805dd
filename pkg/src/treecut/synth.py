"""Analytic RGB-D test scenes with exact ground truth.

Each scene is raycast against a handful of world-frame planes and boxes viewed
by a pitched-down pinhole camera, yielding a color image, a depth map, a
ground-truth label image, and a boundary map whose contours separate the scene
surfaces: weak (0.3) between faces of the same object, strong (0.8) between
distinct ground-truth regions.  The generator also records the analytic plane
parameters in camera coordinates so tests can score recovered geometry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pngio
from .camera import Intrinsics
from .errors import InputError

SCENES = ("floor_wall", "box_on_floor", "two_boxes_table")

WEAK_BOUNDARY = 0.3
STRONG_BOUNDARY = 0.8

_WIDTH, _HEIGHT = 640, 480
_INTR = Intrinsics(fx=525.0, fy=525.0, cx=319.5, cy=239.5, depth_scale=1000.0)


@dataclass(frozen=True)
class _PlaneSurface:
    name: str
    region: int
    normal_w: tuple  # unit, oriented so the camera is on the positive side
    offset: float    # n . x + offset = 0, offset > 0
    color: tuple     # RGB uint8


@dataclass(frozen=True)
class _BoxSurface:
    name: str
    region: int
    lo: tuple
    hi: tuple
    base_color: tuple


@dataclass
class SceneData:
    name: str
    intr: Intrinsics
    rgb: np.ndarray        # (H, W, 3) uint8
    depth_raw: np.ndarray  # (H, W) uint16, depth_scale units, 0 = missing
    ucm: np.ndarray        # (H, W) float64 in [0, 1]
    gt_labels: np.ndarray  # (H, W) int32, region ids from 1
    meta: dict


def _pitch_rotation(pitch_rad: float) -> np.ndarray:
    """World-from-camera rotation for a camera pitched down by ``pitch_rad``.

    Camera frame: x right, y down, z forward.  The camera's forward axis maps
    to (0, sin p, cos p) in world coordinates (downward-forward; world y is
    down as well)."""
    c, s = math.cos(pitch_rad), math.sin(pitch_rad)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def _scene_layout(name: str):
    if name == "floor_wall":
        pitch = math.radians(20.0)
        planes = [
            _PlaneSurface("floor", 1, (0.0, -1.0, 0.0), 1.0, (150, 120, 90)),
            _PlaneSurface("wall", 2, (0.0, 0.0, -1.0), 3.5, (170, 180, 200)),
        ]
        boxes = []
    elif name == "box_on_floor":
        pitch = math.radians(20.0)
        planes = [
            _PlaneSurface("floor", 1, (0.0, -1.0, 0.0), 1.0, (150, 120, 90)),
            _PlaneSurface("wall", 2, (0.0, 0.0, -1.0), 3.5, (170, 180, 200)),
        ]
        boxes = [
            _BoxSurface("box", 3, (-0.16, 0.70, 1.70), (0.16, 1.00, 2.00), (205, 165, 40)),
        ]
    elif name == "two_boxes_table":
        pitch = math.radians(25.0)
        planes = [
            _PlaneSurface("table", 1, (0.0, -1.0, 0.0), 0.55, (140, 110, 80)),
            _PlaneSurface("wall", 2, (0.0, 0.0, -1.0), 2.5, (175, 185, 205)),
        ]
        boxes = [
            _BoxSurface("box_left", 3, (-0.22, 0.37, 1.15), (0.00, 0.55, 1.40), (180, 60, 50)),
            _BoxSurface("box_right", 4, (0.00, 0.42, 1.15), (0.18, 0.55, 1.38), (60, 130, 180)),
        ]
    else:
        raise InputError(f"unknown scene {name!r}; choose one of {', '.join(SCENES)}")
    return pitch, planes, boxes


def _box_face_color(base, axis: int, positive: bool):
    """Per-face shade of the box color so face boundaries carry color contrast."""
    shift = {(1, False): 25, (2, False): 0, (0, False): -20, (0, True): -35, (1, True): -50, (2, True): -10}
    d = shift[(axis, positive)]
    return tuple(int(np.clip(c + d, 0, 255)) for c in base)


def _raycast(name: str):
    """Surface-id map, per-surface records, depth (meters) and hit normals."""
    pitch, planes, boxes = _scene_layout(name)
    rot = _pitch_rotation(pitch)

    us, vs = np.meshgrid(np.arange(_WIDTH), np.arange(_HEIGHT))
    d_cam = np.stack(
        [(us - _INTR.cx) / _INTR.fx, (vs - _INTR.cy) / _INTR.fy, np.ones_like(us, dtype=np.float64)],
        axis=-1,
    )
    d_w = d_cam @ rot.T

    ts = []          # per-surface ray parameter (== camera-frame depth z)
    records = []     # dicts: name, region, normal_w, color
    for pl in planes:
        n = np.asarray(pl.normal_w)
        denom = d_w @ n
        with np.errstate(divide="ignore"):
            t = -pl.offset / denom
        t = np.where((denom < 0) & (t > 1e-9), t, np.inf)
        ts.append(t)
        records.append(
            {"name": pl.name, "owner": pl.name, "region": pl.region, "normal_w": n, "color": pl.color}
        )

    for box in boxes:
        lo = np.asarray(box.lo)
        hi = np.asarray(box.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_lo = lo / d_w
            t_hi = hi / d_w
        t_near_ax = np.fmin(t_lo, t_hi)
        t_far_ax = np.fmax(t_lo, t_hi)
        t_near = t_near_ax.max(axis=-1)
        t_far = t_far_ax.min(axis=-1)
        hit = (t_near <= t_far) & (t_near > 1e-9)
        enter_axis = t_near_ax.argmax(axis=-1)
        for axis in range(3):
            for positive in (False, True):
                # Entering through the low slab means the ray travels +axis.
                dir_sign = d_w[..., axis] > 0
                face_hit = hit & (enter_axis == axis) & (dir_sign != positive)
                if not face_hit.any():
                    continue
                t = np.where(face_hit, t_near, np.inf)
                ts.append(t)
                n = np.zeros(3)
                n[axis] = 1.0 if positive else -1.0
                records.append(
                    {
                        "name": f"{box.name}_{'xyz'[axis]}{'+' if positive else '-'}",
                        "owner": box.name,
                        "region": box.region,
                        "normal_w": n,
                        "color": _box_face_color(box.base_color, axis, positive),
                    }
                )

    t_all = np.stack(ts, axis=0)
    sid = t_all.argmin(axis=0)
    depth = np.take_along_axis(t_all, sid[None], axis=0)[0]
    if not np.isfinite(depth).all():
        raise RuntimeError(f"scene {name!r} does not cover the full view")
    return sid, records, depth, rot, pitch, planes


def _boundaries(sid: np.ndarray, region: np.ndarray) -> np.ndarray:
    """Boundary strengths from the surface-id map; both sides of every
    differing 4-adjacent pair are marked so each boundary pixel keeps its own
    surface's color."""
    ucm = np.zeros(sid.shape)
    for sl_a, sl_b in (
        ((slice(None), slice(None, -1)), (slice(None), slice(1, None))),
        ((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
    ):
        differ = sid[sl_a] != sid[sl_b]
        strong = region[sl_a] != region[sl_b]
        s = np.where(strong, STRONG_BOUNDARY, WEAK_BOUNDARY) * differ
        np.maximum(ucm[sl_a], s, out=ucm[sl_a])
        np.maximum(ucm[sl_b], s, out=ucm[sl_b])
    return ucm


def generate_scene(name: str, noise_mm: float = 0.0, seed: int = 0) -> SceneData:
    """Render one synthetic scene; ``noise_mm`` adds Gaussian depth noise."""
    sid, records, depth, rot, pitch, planes = _raycast(name)

    region = np.zeros(sid.shape, dtype=np.int32)
    rgb = np.zeros(sid.shape + (3,), dtype=np.uint8)
    for s, rec in enumerate(records):
        m = sid == s
        region[m] = rec["region"]
        rgb[m] = rec["color"]

    ucm = _boundaries(sid, region)

    if noise_mm > 0:
        rng = np.random.default_rng(seed)
        depth = depth + rng.normal(0.0, noise_mm / 1000.0, size=depth.shape)
    raw = np.clip(np.round(depth * _INTR.depth_scale), 1, 0xFFFF).astype(np.uint16)

    region_meta = []
    seen = set()
    for rec in records:
        if rec["region"] in seen:
            continue
        seen.add(rec["region"])
        entry = {"id": int(rec["region"]), "name": rec["owner"]}
        pl = next((p for p in planes if p.region == rec["region"]), None)
        if pl is not None:
            n_cam = rot.T @ np.asarray(pl.normal_w)
            entry["kind"] = "plane"
            entry["normal_cam"] = [float(x) for x in n_cam]
            entry["offset"] = float(pl.offset)
        else:
            entry["kind"] = "object"
        region_meta.append(entry)
    region_meta.sort(key=lambda r: r["id"])

    meta = {
        "scene": name,
        "seed": int(seed),
        "noise_mm": float(noise_mm),
        "width": _WIDTH,
        "height": _HEIGHT,
        "pitch_deg": math.degrees(pitch),
        "regions": region_meta,
    }
    return SceneData(
        name=name,
        intr=_INTR,
        rgb=rgb,
        depth_raw=raw,
        ucm=ucm,
        gt_labels=region,
        meta=meta,
    )


def write_scene(scene: SceneData, out_dir) -> dict:
    """Write the scene fixture files; returns a dict of paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "rgb": out / "rgb.png",
        "depth": out / "depth.png",
        "ucm": out / "ucm.png",
        "gt_labels": out / "gt_labels.png",
        "intrinsics": out / "intrinsics.json",
        "meta": out / "meta.json",
    }
    pngio.write_rgb8(paths["rgb"], scene.rgb)
    pngio.write_gray16(paths["depth"], scene.depth_raw)
    pngio.write_gray16(paths["ucm"], np.round(scene.ucm * 65535.0).astype(np.uint16))
    pngio.write_gray16(paths["gt_labels"], scene.gt_labels.astype(np.uint16))
    scene.intr.to_json(paths["intrinsics"])
    with open(paths["meta"], "w") as fh:
        json.dump(scene.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def synth(name: str, out_dir, noise_mm: float = 0.0, seed: int = 0) -> dict:
    """Generate and write one scene fixture; returns the written paths."""
    return write_scene(generate_scene(name, noise_mm=noise_mm, seed=seed), out_dir)
