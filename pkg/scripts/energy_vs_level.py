#!/usr/bin/env python3
"""Compare the optimal-cut energy against single-threshold cuts of one frame.

Sweeps a grid of horizontal-cut levels, evaluates each cut under the same
per-node energies, and prints the gap to the optimal cut; optionally writes
the sweep as CSV.  Works on a generated synthetic scene or any frame given
explicitly.

    python3 scripts/energy_vs_level.py --scene box_on_floor
    python3 scripts/energy_vs_level.py --rgb f.png --depth d.png --ucm u.png --intrinsics k.json
"""

from __future__ import annotations

import argparse
import csv
import sys
import tempfile
from pathlib import Path

import numpy as np

from treecut import (
    Intrinsics,
    SCENES,
    UcmMap,
    build_tree,
    collect_plane_candidates,
    compute_node_energies,
    cut_energy,
    estimate_normals,
    horizontal_cut,
    optimal_cut,
    pointmap_from_arrays,
    synth,
    tree_objectness,
)
from treecut.pngio import read_gray16, read_rgb8


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scene", choices=SCENES, help="generate and use a synthetic scene")
    ap.add_argument("--rgb", type=Path)
    ap.add_argument("--depth", type=Path)
    ap.add_argument("--ucm", type=Path)
    ap.add_argument("--intrinsics", type=Path)
    ap.add_argument("--levels", type=int, default=21)
    ap.add_argument("--csv", type=Path, help="write the sweep to this CSV file")
    args = ap.parse_args()

    if args.scene:
        paths = synth(args.scene, Path(tempfile.mkdtemp(prefix="treecut_sweep_")))
    elif args.rgb and args.depth and args.ucm and args.intrinsics:
        paths = {"rgb": args.rgb, "depth": args.depth, "ucm": args.ucm, "intrinsics": args.intrinsics}
    else:
        ap.error("pass --scene or all of --rgb/--depth/--ucm/--intrinsics")

    intr = Intrinsics.from_json(paths["intrinsics"])
    rgb = read_rgb8(paths["rgb"])
    raw = read_gray16(paths["depth"])
    pm = estimate_normals(pointmap_from_arrays(raw / intr.depth_scale, rgb, intr))
    ucm = UcmMap.from_png(paths["ucm"])

    tree = build_tree(ucm, colors=pm.colors)
    f_scores = tree_objectness(tree)
    planes = collect_plane_candidates(tree, pm)
    best_plane, best_energy = compute_node_energies(tree, pm, planes, f_scores)
    labeling = optimal_cut(tree, best_plane, best_energy)

    rows = []
    for t in np.linspace(0.0, 1.0, args.levels):
        seg = horizontal_cut(tree, float(t))
        e = cut_energy(tree.children, tree.root, best_energy, [r.node_id for r in seg.regions])
        rows.append({"level": float(t), "regions": seg.n_regions, "energy": e,
                     "gap": labeling.total_energy - e})

    print(f"optimal cut: {len(labeling.selected)} regions, energy {labeling.total_energy:.3f}")
    print(f"{'level':>6s} {'regions':>8s} {'energy':>14s} {'gap_to_optimal':>15s}")
    for r in rows:
        print(f"{r['level']:6.2f} {r['regions']:8d} {r['energy']:14.3f} {r['gap']:15.3f}")

    worst = min(rows, key=lambda r: r["gap"])
    if worst["gap"] < 0:
        print("WARNING: a horizontal cut beat the optimal cut; this should be impossible", file=sys.stderr)
        sys.exit(2)
    best_h = max(rows, key=lambda r: r["energy"])
    print(f"\nbest horizontal cut: level {best_h['level']:.2f} with gap {best_h['gap']:.3f}")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["level", "regions", "energy", "gap"])
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
