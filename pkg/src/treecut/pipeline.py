"""End-to-end drive: RGB-D frame + boundary map -> tree -> energies -> optimal cut.

``run`` produces the artifacts on disk: a 16-bit label image, a color overlay,
a deterministic region report (report.json) and the per-stage wall-clock times
(timings.json, kept separate so the report stays byte-stable across runs).
"""

from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import pngio
from .camera import Intrinsics
from .errors import InputError
from .hierarchy import UcmMap, build_tree, horizontal_cut
from .metrics import LabeledMask, covering, region_fmeasure
from .objectness import ObjectnessConfig, tree_objectness
from .planes import PlaneFitConfig, collect_plane_candidates
from .rgbd import DEFAULT_NORMAL_WINDOW, estimate_normals, pointmap_from_arrays
from .solver import (
    DEFAULT_MAX_SAMPLES,
    compute_node_energies,
    cut_energy,
    optimal_cut,
    realize_segmentation,
)

log = logging.getLogger(__name__)

# Stage keys of the timing report, in pipeline order.
STAGES = ("boundary", "seg_tree", "objectness", "plane_estimation", "tree_cut")


@dataclass
class RunConfig:
    rgb: Path
    depth: Path
    ucm: Path
    intrinsics: Path
    out_dir: Path
    fit: PlaneFitConfig = field(default_factory=PlaneFitConfig)
    obj: ObjectnessConfig = field(default_factory=ObjectnessConfig)
    max_samples: int = DEFAULT_MAX_SAMPLES
    normal_window: int = DEFAULT_NORMAL_WINDOW
    baseline_level: Optional[float] = None
    workers: int = 1
    seed: int = 0
    dump_tree: bool = False
    dump_labeling: bool = False


@dataclass
class RunResult:
    seg: object
    labeling: object
    tree: object
    planes: list
    f_scores: np.ndarray
    stage_times: dict
    report: dict
    out_dir: Path


@contextmanager
def _stage(times: dict, name: str):
    t0 = time.perf_counter()
    yield
    times[name] = times.get(name, 0.0) + time.perf_counter() - t0


def render_overlay(rgb: np.ndarray, labels: np.ndarray, seed: int = 0) -> np.ndarray:
    """Blend a deterministic per-region color palette over the input image."""
    rng = np.random.default_rng(seed)
    palette = rng.integers(40, 256, size=(int(labels.max()) + 1, 3))
    tint = palette[labels]
    return np.clip(0.45 * rgb.astype(np.float64) + 0.55 * tint, 0, 255).astype(np.uint8)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [float(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _build_report(seg, planes, labeling, cfg: RunConfig, width: int, height: int) -> dict:
    regions = []
    for reg in seg.regions:
        rec = {
            "id": reg.id,
            "pixel_count": reg.pixel_count,
            "type": reg.kind,
            "energy": reg.energy,
            "objectness": reg.objectness,
        }
        if reg.plane_index is not None:
            p = planes[reg.plane_index]
            rec["plane"] = {
                "index": reg.plane_index,
                "normal": _jsonable(p.normal),
                "offset": p.offset,
                "mean_color": _jsonable(p.mean_color),
            }
        regions.append(rec)
    return {
        "width": width,
        "height": height,
        "total_energy": labeling.total_energy,
        "n_planes_retained": len(planes),
        "config": {
            "sigma_dist": cfg.fit.sigma_dist,
            "sigma_normal": cfg.fit.sigma_normal,
            "sigma_color": cfg.fit.sigma_color,
            "min_inliers": cfg.fit.min_inliers,
            "min_area_m2": cfg.fit.min_area_m2,
            "mid_level": cfg.obj.mid_level,
            "sigma_level": cfg.obj.sigma_level,
            "max_samples": cfg.max_samples,
            "normal_window": cfg.normal_window,
            "seed": cfg.seed,
        },
        "regions": regions,
    }


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run(cfg: RunConfig) -> RunResult:
    """Run the full pipeline on one frame and write the artifacts."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    times: dict = {}

    with _stage(times, "rgbd_load"):
        intr = Intrinsics.from_json(cfg.intrinsics)
        rgb = pngio.read_rgb8(cfg.rgb)
        raw = pngio.read_gray16(cfg.depth)
        if raw.shape != rgb.shape[:2]:
            raise InputError(f"depth shape {raw.shape} does not match rgb {rgb.shape[:2]}")
        pm = pointmap_from_arrays(raw.astype(np.float64) / intr.depth_scale, rgb, intr)
        pm = estimate_normals(pm, cfg.normal_window)

    with _stage(times, "boundary"):
        ucm = UcmMap.from_png(cfg.ucm)
        if ucm.shape != pm.shape:
            raise InputError(f"boundary map shape {ucm.shape} does not match frame {pm.shape}")

    degenerate = not bool(pm.valid.any())
    if degenerate:
        log.warning("frame has no valid depth; emitting an object-only segmentation")

    with _stage(times, "seg_tree"):
        tree = build_tree(ucm, colors=pm.colors)

    with _stage(times, "objectness"):
        f_scores = tree_objectness(tree, cfg.obj)

    with _stage(times, "plane_estimation"):
        planes = [] if degenerate else collect_plane_candidates(tree, pm, cfg.fit)

    with _stage(times, "tree_cut"):
        best_plane, best_energy = compute_node_energies(
            tree, pm, planes, f_scores, cfg.fit, cfg.max_samples, cfg.workers
        )
        labeling = optimal_cut(tree, best_plane, best_energy)
        seg = realize_segmentation(tree, labeling, objectness_scores=f_scores)

    report = _build_report(seg, planes, labeling, cfg, pm.width, pm.height)

    if cfg.baseline_level is not None:
        baseline = horizontal_cut(tree, cfg.baseline_level)
        baseline_sel = [r.node_id for r in baseline.regions]
        report["baseline"] = {
            "level": cfg.baseline_level,
            "n_regions": baseline.n_regions,
            "energy": cut_energy(tree.children, tree.root, best_energy, baseline_sel),
        }
        baseline.save_png(out_dir / "baseline_labels.png")

    seg.save_png(out_dir / "labels.png")
    pngio.write_rgb8(out_dir / "overlay.png", render_overlay(rgb, seg.labels, cfg.seed))
    _write_json(out_dir / "report.json", report)
    _write_json(out_dir / "timings.json", {"stage_times": times})
    if cfg.dump_tree:
        tree.dump_json(out_dir / "tree.json")
    if cfg.dump_labeling:
        labeling.dump_json(out_dir / "labeling.json")

    log.info(
        "segmented %dx%d frame into %d regions (%d planes retained); stages: %s",
        pm.width,
        pm.height,
        seg.n_regions,
        len(planes),
        ", ".join(f"{k}={times.get(k, 0.0):.2f}s" for k in STAGES),
    )
    return RunResult(
        seg=seg,
        labeling=labeling,
        tree=tree,
        planes=planes,
        f_scores=f_scores,
        stage_times=times,
        report=report,
        out_dir=out_dir,
    )


def run_hcut(ucm_path, level: float, out_path, rgb_path=None) -> int:
    """Write the single-threshold segmentation of a boundary map; returns the
    region count."""
    ucm = UcmMap.from_png(ucm_path)
    colors = None
    if rgb_path is not None:
        from skimage.color import rgb2hsv

        rgb = pngio.read_rgb8(rgb_path)
        if rgb.shape[:2] != ucm.shape:
            raise InputError(f"rgb shape {rgb.shape[:2]} does not match boundary map {ucm.shape}")
        colors = rgb2hsv(rgb)
    tree = build_tree(ucm, colors=colors)
    seg = horizontal_cut(tree, level)
    seg.save_png(out_path)
    return seg.n_regions


def _eval_pair(pred_path, gt_path, ignore_value: int) -> dict:
    pred = LabeledMask.from_png(pred_path, ignore_value=ignore_value)
    gt = LabeledMask.from_png(gt_path, ignore_value=ignore_value)
    return {"ssc": covering(pred, gt), "f_region": region_fmeasure(pred, gt)}


def evaluate(pred_path, gt_path, ignore_value: int = 0) -> dict:
    """Score a prediction against ground truth.

    With two files, returns {"ssc", "f_region"}.  With two directories, scores
    every ground-truth *.png against the same-named prediction and adds the
    arithmetic mean over frames.
    """
    pred_path, gt_path = Path(pred_path), Path(gt_path)
    if pred_path.is_dir() != gt_path.is_dir():
        raise InputError("prediction and ground truth must both be files or both directories")
    if not pred_path.is_dir():
        return _eval_pair(pred_path, gt_path, ignore_value)

    names = sorted(p.name for p in gt_path.glob("*.png"))
    if not names:
        raise InputError(f"no *.png ground-truth files in {gt_path}")
    frames = []
    for name in names:
        if not (pred_path / name).exists():
            raise InputError(f"missing prediction for {name} in {pred_path}")
        scores = _eval_pair(pred_path / name, gt_path / name, ignore_value)
        frames.append({"name": name, **scores})
    return {
        "frames": frames,
        "mean": {
            "ssc": float(np.mean([f["ssc"] for f in frames])),
            "f_region": float(np.mean([f["f_region"] for f in frames])),
        },
    }
