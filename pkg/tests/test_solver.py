"""Node energies and the optimal-cut dynamic program."""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecut import (
    PlaneFitConfig,
    UcmMap,
    build_tree,
    compute_node_energies,
    cut_energy,
    horizontal_cut,
    node_energy,
    optimal_cut,
    realize_segmentation,
    solve_tree_cut,
    tree_objectness,
)
from treecut.planes import MISSING_DEPTH_LOGLIK
from treecut.solver import NodeLabeling, sample_pixels

from conftest import make_pointmap
from oracles import best_cut_bruteforce, cut_energy_treewise, random_tree
from test_planes import make_candidate

CFG = PlaneFitConfig()

# HSV of the uniform-gray (128) fixture images
GRAY = (0.0, 0.0, 128 / 255)


class TestNodeEnergy:
    def test_on_plane_region_prefers_plane(self):
        pm = make_pointmap(np.full((30, 30), 2.0))
        cand = make_candidate(color=GRAY)  # matches the gray fixture exactly
        idx = np.arange(900)
        k, e = node_energy(idx, pm, [cand], f_score=0.9, cfg=CFG)
        assert k == 0
        assert e == pytest.approx(0.0, abs=1e-9)

    def test_no_plane_fits_prefers_object(self):
        pm = make_pointmap(np.full((30, 30), 2.0))
        cand = make_candidate(offset=5.0)  # 3 m away: likelihood at the floor
        idx = np.arange(900)
        k, e = node_energy(idx, pm, [cand], f_score=1.0, cfg=CFG)
        assert k is None
        assert e == 0.0

    def test_empty_plane_set_defaults_to_object(self):
        pm = make_pointmap(np.full((10, 10), 2.0))
        k, e = node_energy(np.arange(100), pm, [], f_score=0.5, cfg=CFG)
        assert k is None
        assert e == pytest.approx(100 * math.log(0.5), rel=1e-12)

    def test_ten_pixel_arithmetic(self):
        # 10 pixels, f = 0.5 vs one plane of uniform likelihood 0.6:
        # -10 ln 2 = -6.931 loses to 10 ln 0.6 = -5.108.
        pm = make_pointmap(np.full((2, 5), 2.0))
        dist = CFG.sigma_dist * math.sqrt(-math.log(0.6))
        cand = make_candidate(offset=2.0 + dist, color=GRAY)
        idx = np.arange(10)
        k, e = node_energy(idx, pm, [cand], f_score=0.5, cfg=CFG)
        assert k == 0
        assert e == pytest.approx(10 * math.log(0.6), rel=1e-12)
        expected_obj = 10 * math.log(0.5)
        assert e > expected_obj
        # per-pixel exhaustive summation agrees
        from treecut import plane_likelihood

        total = sum(
            math.log(
                float(
                    plane_likelihood(
                        pm.points.reshape(-1, 3)[i], pm.normals.reshape(-1, 3)[i],
                        pm.colors.reshape(-1, 3)[i], cand, CFG,
                    )
                )
            )
            for i in idx
        )
        assert e == pytest.approx(total, rel=1e-9)

    def test_missing_depth_contributes_neutral_constant(self):
        depth = np.full((4, 5), 2.0)
        depth[0, :] = 0.0  # 5 invalid pixels
        pm = make_pointmap(depth, window=3)
        cand = make_candidate(color=GRAY)
        k, e = node_energy(np.arange(20), pm, [cand], f_score=1e-6, cfg=CFG)
        assert k == 0
        assert e == pytest.approx(20 * (5 * MISSING_DEPTH_LOGLIK + 15 * 0.0) / 20, abs=1e-6)

    def test_subsample_rescales_to_region_size(self):
        pm = make_pointmap(np.full((40, 50), 2.0))
        cand = make_candidate(offset=2.0 + CFG.sigma_dist, color=GRAY)
        idx = np.arange(2000)
        k_full, e_full = node_energy(idx, pm, [cand], 0.05, CFG, max_samples=2000)
        k_sub, e_sub = node_energy(idx, pm, [cand], 0.05, CFG, max_samples=137)
        assert k_full == k_sub == 0
        # uniform likelihood, so the subsampled estimate is exact
        assert e_sub == pytest.approx(e_full, rel=1e-12)
        assert e_full == pytest.approx(2000 * -1.0, rel=1e-12)

    def test_sample_pixels_strides(self):
        idx = np.arange(10)
        assert sample_pixels(idx, 20).tolist() == idx.tolist()
        s = sample_pixels(np.arange(100), 10)
        assert len(s) <= 10
        assert s.tolist() == list(range(0, 100, 10))


class TestSolveTreeCut:
    def test_single_node(self):
        sel, sub, total = solve_tree_cut([()], 0, [-2.5])
        assert sel == [0]
        assert total == -2.5

    def test_two_leaves_beat_root(self):
        children = [(), (), (0, 1)]
        sel, sub, total = solve_tree_cut(children, 2, [-0.3, -0.4, -1.0])
        assert sel == [0, 1]
        assert total == pytest.approx(-0.7)

    def test_root_beats_leaves(self):
        children = [(), (), (0, 1)]
        sel, sub, total = solve_tree_cut(children, 2, [-0.6, -0.5, -1.0])
        assert sel == [2]
        assert total == -1.0

    def test_tie_prefers_parent(self):
        children = [(), (), (0, 1)]
        sel, _, total = solve_tree_cut(children, 2, [-0.5, -0.5, -1.0])
        assert sel == [2]
        assert total == -1.0

    def test_matches_bruteforce_on_random_trees(self):
        rng = np.random.default_rng(31)
        for _ in range(60):
            children, root = random_tree(rng, max_nodes=12)
            energies = rng.uniform(-10.0, 0.0, size=len(children))
            sel, _, total = solve_tree_cut(children, root, energies)
            best, _ = best_cut_bruteforce(children, root, energies)
            assert total == best  # exact float equality
            assert cut_energy_treewise(children, root, energies, sel) == total

    @given(st.integers(0, 10_000))
    @settings(max_examples=40)
    def test_hypothesis_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        children, root = random_tree(rng, max_nodes=12)
        energies = rng.uniform(-10.0, 0.0, size=len(children))
        _, _, total = solve_tree_cut(children, root, energies)
        best, _ = best_cut_bruteforce(children, root, energies)
        assert total == best

    def test_monotone_response(self):
        rng = np.random.default_rng(32)
        for _ in range(30):
            children, root = random_tree(rng, max_nodes=12)
            energies = rng.uniform(-10.0, 0.0, size=len(children))
            _, _, total = solve_tree_cut(children, root, energies)
            bumped = energies.copy()
            i = int(rng.integers(0, len(children)))
            bumped[i] += float(rng.uniform(0.0, 5.0))
            _, _, total2 = solve_tree_cut(children, root, bumped)
            assert total2 >= total

    def test_selected_is_maximal_antichain(self):
        rng = np.random.default_rng(33)
        for _ in range(30):
            children, root = random_tree(rng, max_nodes=12)
            parent = {}
            for i, ch in enumerate(children):
                for c in ch:
                    parent[c] = i
            energies = rng.uniform(-10.0, 0.0, size=len(children))
            sel, _, _ = solve_tree_cut(children, root, energies)
            sel_set = set(sel)
            for i in sel:
                j = parent.get(i)
                while j is not None:
                    assert j not in sel_set
                    j = parent.get(j)
            leaves = [i for i, ch in enumerate(children) if not ch]
            for leaf in leaves:
                covered = 0
                j = leaf
                while j is not None:
                    covered += j in sel_set
                    j = parent.get(j)
                assert covered == 1

    def test_linear_scaling_sanity(self):
        # chains of 2k and 4k nodes should both solve fast; loose wall bound
        def chain(n_leaves):
            children = [() for _ in range(n_leaves)]
            prev = 0
            for leaf in range(1, n_leaves):
                children.append((min(prev, leaf), max(prev, leaf)))
                prev = len(children) - 1
            return children, len(children) - 1

        for n in (2000, 4000):
            children, root = chain(n)
            energies = np.random.default_rng(0).uniform(-10, 0, len(children))
            t0 = time.perf_counter()
            solve_tree_cut(children, root, energies)
            assert time.perf_counter() - t0 < 1.5


class TestCutEnergy:
    def test_matches_selection_total(self):
        rng = np.random.default_rng(34)
        children, root = random_tree(rng, max_nodes=12)
        energies = rng.uniform(-10.0, 0.0, size=len(children))
        sel, _, total = solve_tree_cut(children, root, energies)
        assert cut_energy(children, root, energies, sel) == total

    def test_rejects_uncovered_leaf(self):
        children = [(), (), (0, 1)]
        with pytest.raises(ValueError):
            cut_energy(children, 2, [-1.0, -1.0, -1.0], [0])


class TestEndToEndSolve:
    def _fixture(self):
        u = np.zeros((24, 24))
        u[:, 8] = 0.3
        u[12, :] = 0.8
        ucm = UcmMap.from_array(u)
        pm = make_pointmap(np.full((24, 24), 2.0))
        tree = build_tree(ucm, colors=pm.colors)
        return tree, pm

    def test_optimal_cut_dominates_horizontal_cuts(self):
        tree, pm = self._fixture()
        f = tree_objectness(tree)
        planes = [make_candidate(color=GRAY)]
        bp, be = compute_node_energies(tree, pm, planes, f, CFG)
        labeling = optimal_cut(tree, bp, be)
        for t in np.linspace(0.0, 1.0, 21):
            hsel = [r.node_id for r in horizontal_cut(tree, float(t)).regions]
            assert labeling.total_energy >= cut_energy(tree.children, tree.root, be, hsel)

    def test_workers_do_not_change_energies(self):
        tree, pm = self._fixture()
        f = tree_objectness(tree)
        planes = [make_candidate(color=GRAY), make_candidate(normal=(0, -1, 0), offset=1.0)]
        bp1, be1 = compute_node_energies(tree, pm, planes, f, CFG, workers=1)
        bp4, be4 = compute_node_energies(tree, pm, planes, f, CFG, workers=4)
        assert np.array_equal(bp1, bp4)
        assert np.array_equal(be1, be4)

    def test_realize_root_cut(self):
        tree, pm = self._fixture()
        n = tree.n_nodes
        labeling = NodeLabeling(
            best_plane=np.full(n, -1, np.int32),
            best_energy=np.zeros(n),
            subtree_energy=np.zeros(n),
            selected=np.array([tree.root]),
            total_energy=0.0,
        )
        seg = realize_segmentation(tree, labeling)
        assert seg.n_regions == 1
        assert (seg.labels == 1).all()
        assert seg.regions[0].kind == "object"

    def test_realize_leaf_cut(self):
        tree, pm = self._fixture()
        n = tree.n_nodes
        labeling = NodeLabeling(
            best_plane=np.full(n, -1, np.int32),
            best_energy=np.zeros(n),
            subtree_energy=np.zeros(n),
            selected=np.arange(tree.n_leaves),
            total_energy=0.0,
        )
        seg = realize_segmentation(tree, labeling)
        assert seg.n_regions == tree.n_leaves

    def test_shared_plane_label_keeps_distinct_regions(self):
        tree, pm = self._fixture()
        n = tree.n_nodes
        best_plane = np.full(n, -1, np.int32)
        # two sibling leaves both take plane 0
        leaves = list(range(tree.n_leaves))
        best_plane[leaves[0]] = 0
        best_plane[leaves[1]] = 0
        labeling = NodeLabeling(
            best_plane=best_plane,
            best_energy=np.zeros(n),
            subtree_energy=np.zeros(n),
            selected=np.arange(tree.n_leaves),
            total_energy=0.0,
        )
        seg = realize_segmentation(tree, labeling)
        plane_regions = [r for r in seg.regions if r.kind == "plane"]
        assert len(plane_regions) == 2
        assert plane_regions[0].id != plane_regions[1].id
        assert plane_regions[0].plane_index == plane_regions[1].plane_index == 0
