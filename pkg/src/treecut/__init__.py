"""Joint plane/object segmentation of RGB-D frames.

A boundary-strength map turns one frame into a hierarchy of nested regions;
every node is scored both as a whole object (from boundary-strength gaps) and
against a set of plane candidates fit to the tree (from point-plane distance,
normal agreement and color).  An exact O(K) dynamic program picks the tree cut
maximizing the total log-likelihood, yielding a flat segmentation whose regions
are tagged as object instances or plane surfaces.
"""

from .camera import Intrinsics
from .errors import InputError
from .hierarchy import SegTree, UcmMap, build_tree, horizontal_cut
from .metrics import LabeledMask, covering, region_fmeasure
from .objectness import ObjectnessConfig, objectness, tree_objectness
from .pipeline import RunConfig, RunResult, evaluate, run
from .planes import (
    PlaneCandidate,
    PlaneFitConfig,
    collect_plane_candidates,
    fit_plane,
    plane_likelihood,
    prune_planes,
)
from .rgbd import PointMap, estimate_normals, load_frame, pointmap_from_arrays
from .segmentation import FlatSegmentation, Region, load_label_png
from .solver import (
    NodeLabeling,
    compute_node_energies,
    cut_energy,
    node_energy,
    optimal_cut,
    realize_segmentation,
    solve_tree_cut,
)
from .synth import SCENES, generate_scene, synth

__version__ = "0.1.0"

__all__ = [
    "FlatSegmentation",
    "InputError",
    "Intrinsics",
    "LabeledMask",
    "NodeLabeling",
    "ObjectnessConfig",
    "PlaneCandidate",
    "PlaneFitConfig",
    "PointMap",
    "Region",
    "RunConfig",
    "RunResult",
    "SCENES",
    "SegTree",
    "UcmMap",
    "build_tree",
    "collect_plane_candidates",
    "compute_node_energies",
    "covering",
    "cut_energy",
    "estimate_normals",
    "evaluate",
    "fit_plane",
    "generate_scene",
    "horizontal_cut",
    "load_frame",
    "load_label_png",
    "node_energy",
    "objectness",
    "optimal_cut",
    "plane_likelihood",
    "pointmap_from_arrays",
    "prune_planes",
    "realize_segmentation",
    "region_fmeasure",
    "run",
    "solve_tree_cut",
    "synth",
    "tree_objectness",
]
