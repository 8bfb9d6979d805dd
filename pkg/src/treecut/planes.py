"""Plane candidates: total-least-squares fits to tree nodes, pruning, and the
per-pixel plane membership likelihood."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

# Likelihoods are clamped to [LIKELIHOOD_FLOOR, 1] so log-energies stay finite.
LIKELIHOOD_FLOOR = 1e-6

# Contribution of a pixel without depth to a plane's log-likelihood sum.
# Neutral evidence: the membership likelihood is undefined without a 3D point,
# and a constant avoids biasing plane versus object labels on depth holes.
MISSING_DEPTH_LOGLIK = math.log(0.5)

_COS_DUP = math.cos(math.radians(5.0))


@dataclass(frozen=True)
class PlaneFitConfig:
    """Likelihood bandwidths and candidate retention thresholds.

    ``sigma_dist`` is in meters, ``sigma_normal`` acts on (1 - normal dot) and
    ``sigma_color`` on Euclidean HSV distance.  Candidates with fewer than
    ``min_inliers`` inlier pixels or less than ``min_area_m2`` square meters of
    physical extent are discarded.
    """

    sigma_dist: float = 0.02
    sigma_normal: float = 0.3
    sigma_color: float = 0.1
    min_inliers: int = 5000
    min_area_m2: float = 0.5

    def __post_init__(self):
        for name in ("sigma_dist", "sigma_normal", "sigma_color", "min_inliers", "min_area_m2"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be strictly positive, got {getattr(self, name)}")


@dataclass(eq=False)
class PlaneCandidate:
    """Plane as coefficients [nx, ny, nz, d] with unit normal oriented toward
    the camera; the signed point distance is dot(x, normal) + d (meters)."""

    coeffs: np.ndarray      # (4,) float64
    mean_color: np.ndarray  # (3,) HSV of the inlier pixels
    inlier_count: int
    area_m2: float
    source_node: int = -1

    @property
    def normal(self) -> np.ndarray:
        return self.coeffs[:3]

    @property
    def offset(self) -> float:
        return float(self.coeffs[3])


def fit_plane(pixel_idx, pm, cfg: PlaneFitConfig = PlaneFitConfig(), source_node: int = -1):
    """Total-least-squares plane through the valid 3D points of a pixel set.

    Plane = centroid plus smallest-eigenvector of the scatter matrix, normal
    oriented toward the camera.  Inliers are the set's valid pixels within
    2 * sigma_dist of the plane whose normals agree with it (dot >= 0.8); the
    mean color is taken over inliers and the physical area is the summed
    per-pixel metric footprint z^2 / (fx * fy) of the inliers.  Returns None
    for fewer than 3 valid points or a degenerate scatter.
    """
    idx = np.asarray(pixel_idx, dtype=np.int64)
    val = pm.valid.ravel()[idx]
    sel = idx[val]
    if sel.size < 3:
        return None
    pts = pm.points.reshape(-1, 3)[sel]
    centroid = pts.mean(axis=0)
    q = pts - centroid
    scatter = q.T @ q
    if not np.isfinite(scatter).all():
        return None
    evals, evecs = np.linalg.eigh(scatter)
    if evals[1] <= 1e-12 * max(evals[2], 1.0):
        return None  # collinear points do not determine a plane
    n = evecs[:, 0]
    if n @ centroid > 0:
        n = -n
    d = -float(n @ centroid)

    dist = pts @ n + d
    agree = pm.normals.reshape(-1, 3)[sel] @ n
    inl = (np.abs(dist) <= 2.0 * cfg.sigma_dist) & (agree >= 0.8)
    count = int(inl.sum())
    colors = pm.colors.reshape(-1, 3)[sel]
    if count:
        mean_color = colors[inl].mean(axis=0)
        area = float((pts[inl, 2] ** 2).sum() / (pm.intr.fx * pm.intr.fy))
    else:
        mean_color = colors.mean(axis=0)
        area = 0.0
    return PlaneCandidate(
        coeffs=np.concatenate([n, [d]]),
        mean_color=mean_color,
        inlier_count=count,
        area_m2=area,
        source_node=source_node,
    )


def plane_likelihood(point, normal, color, plane: PlaneCandidate, cfg: PlaneFitConfig = PlaneFitConfig()):
    """Likelihood in [1e-6, 1] that a pixel belongs to a plane; broadcasts.

    Product of squared-exponential terms over the point-plane distance, the
    normal agreement and the HSV color difference to the plane's mean color.
    Callers must pass valid pixels only: the result is meaningless for pixels
    without depth.
    """
    dist = np.asarray(point, dtype=np.float64) @ plane.normal + plane.offset
    d_term = np.exp(-((dist / cfg.sigma_dist) ** 2))
    agree = np.asarray(normal, dtype=np.float64) @ plane.normal
    n_term = np.exp(-(((1.0 - agree) / cfg.sigma_normal) ** 2))
    cdist2 = ((np.asarray(color, dtype=np.float64) - plane.mean_color) ** 2).sum(axis=-1)
    c_term = np.exp(-cdist2 / cfg.sigma_color**2)
    return np.clip(d_term * n_term * c_term, LIKELIHOOD_FLOOR, 1.0)


def plane_log_likelihood_map(pm, plane: PlaneCandidate, cfg: PlaneFitConfig = PlaneFitConfig()) -> np.ndarray:
    """Flat (H*W,) array of log-likelihoods for one plane.

    Valid pixels get log of the clamped likelihood; missing-depth pixels carry
    the neutral MISSING_DEPTH_LOGLIK constant.
    """
    out = np.full(pm.valid.size, MISSING_DEPTH_LOGLIK)
    val = pm.valid.ravel()
    if val.any():
        g = plane_likelihood(
            pm.points.reshape(-1, 3)[val],
            pm.normals.reshape(-1, 3)[val],
            pm.colors.reshape(-1, 3)[val],
            plane,
            cfg,
        )
        out[val] = np.log(g)
    return out


def prune_planes(candidates, cfg: PlaneFitConfig = PlaneFitConfig()):
    """Retain candidates meeting both thresholds, then drop near-duplicates.

    Two candidates are duplicates when their normals agree within 5 degrees and
    their offsets within 2 * sigma_dist; the one with more inliers wins.  The
    result is ordered by descending inlier count (ties by source node id).
    """
    kept = [
        c
        for c in candidates
        if c.inlier_count >= cfg.min_inliers and c.area_m2 >= cfg.min_area_m2
    ]
    kept.sort(key=lambda c: (-c.inlier_count, c.source_node))
    out = []
    for c in kept:
        dup = any(
            float(c.normal @ k.normal) >= _COS_DUP
            and abs(c.offset - k.offset) <= 2.0 * cfg.sigma_dist
            for k in out
        )
        if not dup:
            out.append(c)
    return out


def collect_plane_candidates(tree, pm, cfg: PlaneFitConfig = PlaneFitConfig()):
    """Fit a plane to every tree node that could survive pruning; return the
    pruned, deduplicated candidate set.

    A node's inlier count is bounded by its valid-pixel count, so nodes with
    fewer than min_inliers valid pixels are skipped outright.
    """
    flat_valid = pm.valid.ravel()
    leaf_valid = np.bincount(
        tree.leaf_labels.ravel()[flat_valid], minlength=tree.n_leaves
    ).astype(np.int64)
    n_valid = np.zeros(tree.n_nodes, dtype=np.int64)
    n_valid[: tree.n_leaves] = leaf_valid
    for i in range(tree.n_leaves, tree.n_nodes):
        n_valid[i] = n_valid[list(tree.children[i])].sum()

    candidates = []
    for i in range(tree.n_nodes):
        if n_valid[i] < cfg.min_inliers:
            continue
        cand = fit_plane(tree.node_pixels(i), pm, cfg, source_node=i)
        if cand is not None:
            candidates.append(cand)
    return prune_planes(candidates, cfg)
