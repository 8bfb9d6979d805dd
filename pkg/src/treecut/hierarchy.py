"""Region hierarchies from boundary maps.

A boundary-strength image is turned into a tree of nested regions: zero-strength
pixels form the leaf regions, boundary pixels are attached to the neighboring
region with the closest color, and regions merge bottom-up at the minimum
boundary strength separating them.  Thresholding the finished tree at any level
reproduces flat single-threshold merging exactly, which the test suite checks
against an independent union-find oracle.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InputError
from .segmentation import FlatSegmentation, Region

log = logging.getLogger(__name__)

# Strengths below one 16-bit quantization step count as region interior.
LEAF_EPS = 1.0 / 65535.0

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)


@dataclass(frozen=True)
class UcmMap:
    """Per-pixel boundary strength in [0, 1] on the frame's pixel grid."""

    strength: np.ndarray  # (H, W) float64

    def __post_init__(self):
        s = self.strength
        if s.ndim != 2:
            raise InputError(f"boundary map must be 2D, got shape {s.shape}")
        if s.size and (s.min() < 0.0 or s.max() > 1.0):
            raise InputError("boundary strengths must lie in [0, 1]")

    @classmethod
    def from_array(cls, arr) -> "UcmMap":
        return cls(np.asarray(arr, dtype=np.float64))

    @classmethod
    def from_png(cls, path) -> "UcmMap":
        from . import pngio

        raw = pngio.read_gray16(path)
        return cls(raw.astype(np.float64) / 65535.0)

    def to_png(self, path) -> None:
        from . import pngio

        pngio.write_gray16(path, np.round(self.strength * 65535.0).astype(np.uint16))

    @property
    def shape(self):
        return self.strength.shape


class SegTree:
    """Hierarchy of image regions.

    Node ids run 0..n_nodes-1 with the leaves first (0..n_leaves-1) and every
    child id strictly smaller than its parent id; the root is the last node.
    ``level`` is the boundary strength at which a node was created (0 for
    leaves), ``b_ex`` the level at which it merges into its parent (1.0 for the
    root) and ``b_in`` the minimum creation level among its children (0 for
    leaves).  ``leaf_labels`` maps every pixel to its leaf id, so any node's
    pixel set is the union of the leaves below it.
    """

    def __init__(self, level, parent, children, leaf_labels):
        self.level = np.asarray(level, dtype=np.float64)
        self.parent = np.asarray(parent, dtype=np.int32)
        self.children = tuple(tuple(c) for c in children)
        self.leaf_labels = np.asarray(leaf_labels, dtype=np.int32)
        self.n_nodes = self.level.shape[0]
        self.n_leaves = sum(1 for c in self.children if not c)
        self.root = self.n_nodes - 1
        self.shape = self.leaf_labels.shape

        self.b_in = np.zeros(self.n_nodes)
        for i, ch in enumerate(self.children):
            if ch:
                self.b_in[i] = self.level[list(ch)].min()
        self.b_ex = np.where(self.parent >= 0, self.level[self.parent], 1.0)

        counts = np.bincount(self.leaf_labels.ravel(), minlength=self.n_leaves)
        self.pixel_count = np.zeros(self.n_nodes, dtype=np.int64)
        self.pixel_count[: self.n_leaves] = counts
        for i in range(self.n_leaves, self.n_nodes):
            self.pixel_count[i] = self.pixel_count[list(self.children[i])].sum()

        self._leaf_pixels = None

    def is_leaf(self, i: int) -> bool:
        return not self.children[i]

    def leaves_under(self, i: int) -> np.ndarray:
        """Leaf ids below (or equal to) node i, in depth-first child order."""
        out = []
        stack = [i]
        while stack:
            j = stack.pop()
            ch = self.children[j]
            if ch:
                stack.extend(reversed(ch))
            else:
                out.append(j)
        return np.asarray(out, dtype=np.int64)

    def _leaf_pixel_arrays(self):
        if self._leaf_pixels is None:
            flat = self.leaf_labels.ravel()
            order = np.argsort(flat, kind="stable").astype(np.int64)
            counts = np.bincount(flat, minlength=self.n_leaves)
            self._leaf_pixels = np.split(order, np.cumsum(counts)[:-1])
        return self._leaf_pixels

    def node_pixels(self, i: int) -> np.ndarray:
        """Flat pixel indices of node i (grouped by leaf, ascending inside each)."""
        leaf_px = self._leaf_pixel_arrays()
        leaves = self.leaves_under(i)
        if leaves.size == 1:
            return leaf_px[leaves[0]]
        return np.concatenate([leaf_px[l] for l in leaves])

    def flatten(self, selected) -> np.ndarray:
        """Region-id image (ids 1..n ascending by node id) for a cut.

        ``selected`` must be a maximal antichain: the selected nodes' pixel sets
        partition the image.  Raises RuntimeError otherwise.
        """
        sel = np.sort(np.asarray(list(selected), dtype=np.int64))
        region_of = np.full(self.n_nodes, -1, dtype=np.int64)
        region_of[sel] = np.arange(1, sel.size + 1)
        if int(self.pixel_count[sel].sum()) != int(self.leaf_labels.size):
            raise RuntimeError("selected nodes do not partition the image")
        # Children always precede parents, so a descending sweep propagates
        # region ids from each selected node down to its leaves.
        for i in range(self.n_nodes - 1, -1, -1):
            p = self.parent[i]
            if region_of[i] < 0 and p >= 0 and region_of[p] > 0:
                region_of[i] = region_of[p]
        leaf_region = region_of[: self.n_leaves]
        if (leaf_region <= 0).any():
            raise RuntimeError("selected nodes do not cover every leaf")
        return leaf_region[self.leaf_labels].astype(np.int32)

    def to_json_dict(self) -> dict:
        return {
            "n_nodes": int(self.n_nodes),
            "n_leaves": int(self.n_leaves),
            "root": int(self.root),
            "nodes": [
                {
                    "id": int(i),
                    "level": float(self.level[i]),
                    "parent": int(self.parent[i]),
                    "children": [int(c) for c in self.children[i]],
                    "pixel_count": int(self.pixel_count[i]),
                }
                for i in range(self.n_nodes)
            ],
        }

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra
        return ra


def _assign_leaves(strength: np.ndarray, colors) -> np.ndarray:
    """Label every pixel with a leaf region id.

    Interior (zero-strength) pixels are 4-connected components; boundary pixels
    are attached wave by wave to the adjacent already-labeled region whose mean
    interior color is closest to theirs (ties break toward the smaller label).
    """
    core = strength < LEAF_EPS
    lab, n = ndimage.label(core, structure=_FOUR_CONN)
    if n == 0:
        # Degenerate map with no interior pixels: a single leaf covers everything.
        log.warning("boundary map has no zero-strength pixels; using a single leaf")
        return np.zeros_like(strength, dtype=np.int32)
    lab = lab.astype(np.int32) - 1  # -1 marks unassigned boundary pixels

    if colors is None:
        means = np.zeros((n, 3))
        col = np.zeros(strength.shape + (3,))
    else:
        col = np.asarray(colors, dtype=np.float64)
        sums = np.zeros((n, 3))
        for c in range(3):
            sums[:, c] = np.bincount(lab[core], weights=col[..., c][core], minlength=n)
        counts = np.bincount(lab[core], minlength=n).astype(np.float64)
        means = sums / counts[:, None]

    h, w = strength.shape
    big = np.iinfo(np.int32).max
    while True:
        un = lab < 0
        if not un.any():
            break
        best_cost = np.full((h, w), np.inf)
        best_lab = np.full((h, w), big, dtype=np.int32)
        for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nb = np.full((h, w), -1, dtype=np.int32)
            ys = slice(max(dy, 0), h + min(dy, 0))
            yd = slice(max(-dy, 0), h + min(-dy, 0))
            xs = slice(max(dx, 0), w + min(dx, 0))
            xd = slice(max(-dx, 0), w + min(-dx, 0))
            nb[yd, xd] = lab[ys, xs]
            cand = un & (nb >= 0)
            if not cand.any():
                continue
            cost = np.full((h, w), np.inf)
            cost[cand] = ((col[cand] - means[nb[cand]]) ** 2).sum(axis=-1)
            upd = cand & ((cost < best_cost) | ((cost == best_cost) & (nb < best_lab)))
            best_cost[upd] = cost[upd]
            best_lab[upd] = nb[upd]
        newly = un & (best_lab < big)
        if not newly.any():  # isolated unassigned islands cannot occur on a grid
            raise RuntimeError("boundary pixel assignment stalled")
        lab[newly] = best_lab[newly]
    return lab


def _region_edges(lab: np.ndarray, strength: np.ndarray, n_leaves: int):
    """Adjacency edges between leaf regions.

    The weight between two regions is the minimum, over all 4-adjacent pixel
    pairs straddling them, of the pairwise maximum boundary strength.  Returned
    sorted ascending by (weight, a, b) with a < b.
    """
    los, his, ws = [], [], []
    for a, b, ua, ub in (
        (lab[:, :-1], lab[:, 1:], strength[:, :-1], strength[:, 1:]),
        (lab[:-1, :], lab[1:, :], strength[:-1, :], strength[1:, :]),
    ):
        m = a != b
        if not m.any():
            continue
        pa, pb = a[m], b[m]
        los.append(np.minimum(pa, pb))
        his.append(np.maximum(pa, pb))
        ws.append(np.maximum(ua[m], ub[m]))
    if not los:
        return (np.empty(0), np.empty(0, np.int64), np.empty(0, np.int64))
    lo = np.concatenate(los).astype(np.int64)
    hi = np.concatenate(his).astype(np.int64)
    w = np.concatenate(ws)

    key = lo * n_leaves + hi
    order = np.lexsort((w, key))
    key, lo, hi, w = key[order], lo[order], hi[order], w[order]
    first = np.ones(key.size, dtype=bool)
    first[1:] = key[1:] != key[:-1]
    lo, hi, w = lo[first], hi[first], w[first]

    order = np.lexsort((hi, lo, w))
    return w[order], lo[order], hi[order]


def build_tree(ucm: UcmMap, colors=None) -> SegTree:
    """Build the region hierarchy of a boundary map.

    Merge events are processed in ascending strength; events of identical
    strength that join the same surviving regions collapse into a single
    multi-child node, so child levels are strictly below their parent's.
    ``colors`` (optional HSV image) steers the attachment of boundary pixels to
    leaf regions.
    """
    strength = ucm.strength
    if colors is not None and np.asarray(colors).shape[:2] != strength.shape:
        raise InputError(
            f"colors shape {np.asarray(colors).shape[:2]} does not match boundary map {strength.shape}"
        )
    lab = _assign_leaves(strength, colors)
    n_leaves = int(lab.max()) + 1

    levels = [0.0] * n_leaves
    children: list = [()] * n_leaves
    parents = [-1] * n_leaves
    uf = _UnionFind(n_leaves)
    node_of_root = list(range(n_leaves))  # current node id per union-find root
    rep_leaf = list(range(n_leaves))      # any leaf inside each node

    w, lo, hi = _region_edges(lab, strength, n_leaves)
    i = 0
    while i < w.size:
        wv = w[i]
        j = i
        while j < w.size and w[j] == wv:
            j += 1
        # Graph over the nodes surviving before this strength level.
        adj: dict = {}
        for k in range(i, j):
            na = node_of_root[uf.find(int(lo[k]))]
            nb = node_of_root[uf.find(int(hi[k]))]
            if na == nb:
                continue
            adj.setdefault(na, set()).add(nb)
            adj.setdefault(nb, set()).add(na)
        seen = set()
        for start in sorted(adj):
            if start in seen:
                continue
            comp = [start]
            seen.add(start)
            q = [start]
            while q:
                x = q.pop()
                for y in sorted(adj[x]):
                    if y not in seen:
                        seen.add(y)
                        comp.append(y)
                        q.append(y)
            comp.sort()
            nid = len(levels)
            levels.append(float(wv))
            children.append(tuple(comp))
            parents.append(-1)
            for c in comp:
                parents[c] = nid
            r = uf.find(rep_leaf[comp[0]])
            for c in comp[1:]:
                r = uf.union(r, uf.find(rep_leaf[c]))
            node_of_root[uf.find(rep_leaf[comp[0]])] = nid
            rep_leaf.append(rep_leaf[comp[0]])
        i = j

    roots = {node_of_root[uf.find(l)] for l in range(n_leaves)}
    if len(roots) != 1:
        raise RuntimeError(f"merge produced {len(roots)} roots; the pixel grid should be connected")
    return SegTree(levels, parents, children, lab)


def horizontal_cut(tree: SegTree, t: float) -> FlatSegmentation:
    """Flat segmentation at a single threshold: the nodes alive at level t.

    Selects every node with level <= t whose parent was created above t (the
    root counts as alive at any t >= its level).
    """
    parent_level = np.where(tree.parent >= 0, tree.level[tree.parent], np.inf)
    selected = np.flatnonzero((tree.level <= t) & (parent_level > t))
    labels = tree.flatten(selected)
    regions = [
        Region(id=r + 1, node_id=int(n), pixel_count=int(tree.pixel_count[n]))
        for r, n in enumerate(selected)
    ]
    return FlatSegmentation(labels=labels, regions=regions)
