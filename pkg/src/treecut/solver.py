"""Per-node label energies and the exact optimal tree cut.

Every node competes between being one whole object (size * log objectness) and
taking each retained plane label (sum of per-pixel log plane likelihoods).  A
bottom-up pass computes the best achievable energy of every subtree, then a
top-down pass selects the maximal antichain realizing it; both passes are O(K)
in the node count and the result is exact, which the tests check against
exhaustive antichain enumeration.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .planes import MISSING_DEPTH_LOGLIK, PlaneFitConfig, plane_likelihood, plane_log_likelihood_map
from .segmentation import FlatSegmentation, Region

# Per-node pixel budget for plane-energy sums; larger regions are evaluated on
# a uniform stride and rescaled to full size.
DEFAULT_MAX_SAMPLES = 2000


def sample_pixels(pixel_idx: np.ndarray, max_samples: int) -> np.ndarray:
    """Deterministic uniform-stride subsample of at most max_samples entries."""
    n = pixel_idx.shape[0]
    if n <= max_samples:
        return pixel_idx
    stride = -(-n // max_samples)
    return pixel_idx[::stride]


def _log_likelihoods_at(pm, idx, plane, cfg) -> np.ndarray:
    """Log plane likelihood at the given flat pixel indices (missing depth
    contributes the neutral constant)."""
    val = pm.valid.ravel()[idx]
    out = np.full(idx.shape[0], MISSING_DEPTH_LOGLIK)
    if val.any():
        sel = idx[val]
        g = plane_likelihood(
            pm.points.reshape(-1, 3)[sel],
            pm.normals.reshape(-1, 3)[sel],
            pm.colors.reshape(-1, 3)[sel],
            plane,
            cfg,
        )
        out[val] = np.log(g)
    return out


def node_energy(
    pixel_idx,
    pm,
    planes,
    f_score: float,
    cfg: PlaneFitConfig = PlaneFitConfig(),
    max_samples: int = DEFAULT_MAX_SAMPLES,
    log_maps=None,
):
    """Best label for one region: its own objectness versus every retained plane.

    The object energy is size * log(f_score); each plane energy is the mean
    log-likelihood over a strided pixel subsample rescaled by the region size.
    Returns ``(plane_index, energy)`` where plane_index is None for the object
    label.  With an empty plane set the object label wins by default.  Ties
    keep the earlier option (object first, then planes in order).
    """
    idx = np.asarray(pixel_idx, dtype=np.int64)
    size = idx.shape[0]
    best = size * math.log(f_score)
    best_plane: Optional[int] = None
    if planes:
        s = sample_pixels(idx, max_samples)
        for k, plane in enumerate(planes):
            vals = log_maps[k][s] if log_maps is not None else _log_likelihoods_at(pm, s, plane, cfg)
            e = size * float(vals.mean())
            if e > best:
                best, best_plane = e, k
    return best_plane, best


def compute_node_energies(
    tree,
    pm,
    planes,
    f_scores,
    cfg: PlaneFitConfig = PlaneFitConfig(),
    max_samples: int = DEFAULT_MAX_SAMPLES,
    workers: int = 1,
):
    """Best label and energy for every tree node.

    Per-node evaluations are independent and may run on a thread pool; results
    land in preallocated arrays indexed by node, so the output is identical for
    any worker count.  Returns (best_plane int array with -1 = object,
    best_energy float array).
    """
    log_maps = [plane_log_likelihood_map(pm, p, cfg) for p in planes]
    n = tree.n_nodes
    best_plane = np.full(n, -1, dtype=np.int32)
    best_energy = np.empty(n, dtype=np.float64)

    def work(i: int) -> None:
        bp, be = node_energy(
            tree.node_pixels(i), pm, planes, float(f_scores[i]), cfg, max_samples, log_maps
        )
        best_plane[i] = -1 if bp is None else bp
        best_energy[i] = be

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(n)))
    else:
        for i in range(n):
            work(i)
    return best_plane, best_energy


def _preorder(children, root: int) -> list:
    order = []
    stack = [root]
    while stack:
        i = stack.pop()
        order.append(i)
        stack.extend(children[i])
    return order


def solve_tree_cut(children, root: int, energies):
    """Exact maximum-energy antichain of a tree.

    ``children[i]`` lists node i's children in ascending id order and
    ``energies[i]`` is its best single-label energy.  Bottom-up, each subtree's
    best energy is max(own energy, sum of the children's subtree energies);
    top-down, a node is selected when its own energy reaches its children's
    total (ties prefer the node, i.e. the coarser region).  Returns
    (selected ids ascending, subtree energies, total).
    """
    e = np.asarray(energies, dtype=np.float64)
    n = e.shape[0]
    sub = np.empty(n, dtype=np.float64)
    child_sum = np.zeros(n, dtype=np.float64)

    order = _preorder(children, root)
    for i in reversed(order):  # children before parents
        ch = children[i]
        if not ch:
            sub[i] = e[i]
            continue
        cs = 0.0
        for c in ch:
            cs += sub[c]
        child_sum[i] = cs
        sub[i] = e[i] if e[i] >= cs else cs

    selected = []
    stack = [root]
    while stack:
        i = stack.pop()
        if not children[i] or e[i] >= child_sum[i]:
            selected.append(i)
        else:
            stack.extend(children[i])
    selected.sort()
    return selected, sub, float(sub[root])


def cut_energy(children, root: int, energies, selected) -> float:
    """Total energy of an arbitrary valid cut, accumulated in the same nested
    tree order as the forward pass so comparisons against the optimum are
    float-exact."""
    e = np.asarray(energies, dtype=np.float64)
    sel = set(int(s) for s in selected)
    # walk from the root, stopping at selected nodes
    order = []
    seen_sel = set()
    stack = [root]
    while stack:
        i = stack.pop()
        order.append(i)
        if i in sel:
            seen_sel.add(i)
        elif children[i]:
            stack.extend(children[i])
        else:
            raise ValueError(f"leaf {i} is not covered by the cut")
    if seen_sel != sel:
        raise ValueError(f"selected nodes {sorted(sel - seen_sel)} are below the cut")
    val = np.zeros(e.shape[0], dtype=np.float64)
    for i in reversed(order):
        if i in sel:
            val[i] = e[i]
        else:
            cs = 0.0
            for c in children[i]:
                cs += val[c]
            val[i] = cs
    return float(val[root])


@dataclass
class NodeLabeling:
    """Solved cut: per-node best labels and energies plus the selected antichain.

    ``best_plane[i]`` is a retained-plane index or -1 for the object label;
    nodes outside ``selected`` are unselected in the realized segmentation.
    """

    best_plane: np.ndarray     # (K,) int32
    best_energy: np.ndarray    # (K,) float64
    subtree_energy: np.ndarray  # (K,) float64
    selected: np.ndarray       # sorted node ids
    total_energy: float

    def to_json_dict(self) -> dict:
        out = []
        for i in self.selected:
            i = int(i)
            rec = {
                "node_id": i,
                "label_type": "plane" if self.best_plane[i] >= 0 else "object",
                "energy": float(self.best_energy[i]),
            }
            if self.best_plane[i] >= 0:
                rec["plane_index"] = int(self.best_plane[i])
            out.append(rec)
        return {"total_energy": float(self.total_energy), "selected": out}

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def optimal_cut(tree, best_plane, best_energy) -> NodeLabeling:
    """Exact optimal cut of a segmentation tree given per-node best labels."""
    selected, sub, total = solve_tree_cut(tree.children, tree.root, best_energy)
    return NodeLabeling(
        best_plane=np.asarray(best_plane, dtype=np.int32),
        best_energy=np.asarray(best_energy, dtype=np.float64),
        subtree_energy=sub,
        selected=np.asarray(selected, dtype=np.int64),
        total_energy=total,
    )


def realize_segmentation(tree, labeling: NodeLabeling, objectness_scores=None) -> FlatSegmentation:
    """Turn a solved cut into a flat segmentation.

    Every pixel inherits its selected ancestor's region id.  Plane-labeled
    regions keep distinct region ids even when they share one plane index, so
    disconnected fragments of the same surface stay separate regions carrying
    the same plane reference.
    """
    labels = tree.flatten(labeling.selected)
    regions = []
    for r, nid in enumerate(labeling.selected, start=1):
        nid = int(nid)
        k = int(labeling.best_plane[nid])
        regions.append(
            Region(
                id=r,
                node_id=nid,
                pixel_count=int(tree.pixel_count[nid]),
                kind="plane" if k >= 0 else "object",
                plane_index=k if k >= 0 else None,
                energy=float(labeling.best_energy[nid]),
                objectness=None if objectness_scores is None else float(objectness_scores[nid]),
            )
        )
    seg = FlatSegmentation(labels=labels, regions=regions)
    seg.validate()
    return seg
