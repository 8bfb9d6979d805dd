"""Command-line interface.

Subcommands: ``run`` (full pipeline on one frame), ``hcut`` (single-threshold
cut only), ``eval`` (score label images), ``synth`` (generate synthetic test
scenes).  Exit codes: 0 success, 1 input error, 2 internal failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

from .errors import InputError
from .objectness import ObjectnessConfig
from .pipeline import RunConfig, evaluate, run, run_hcut
from .planes import PlaneFitConfig
from .synth import SCENES, synth


def _add_run_parser(sub, common):
    p = sub.add_parser("run", help="segment one RGB-D frame", parents=[common])
    p.add_argument("--rgb", required=True, type=Path)
    p.add_argument("--depth", required=True, type=Path)
    p.add_argument("--ucm", required=True, type=Path, help="16-bit boundary-strength PNG")
    p.add_argument("--intrinsics", required=True, type=Path, help="camera intrinsics JSON")
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    p.add_argument("--sigma-dist", type=float, help="plane distance bandwidth in meters")
    p.add_argument("--sigma-normal", type=float, help="plane normal-agreement bandwidth")
    p.add_argument("--sigma-color", type=float, help="plane HSV color bandwidth")
    p.add_argument("--min-inliers", type=int, help="minimum inlier count to retain a plane")
    p.add_argument("--min-area", type=float, help="minimum plane area in square meters")
    p.add_argument("--mid-level", type=float, help="objectness level-prior peak")
    p.add_argument("--sigma-level", type=float, help="objectness level-prior width")
    p.add_argument("--subsample", type=int, help="max pixels per node for plane energies")
    p.add_argument("--normal-window", type=int, help="odd window size for normal estimation")
    p.add_argument("--baseline-level", type=float, help="also emit the single-threshold cut at this level")
    p.add_argument("--workers", type=int, help="worker threads for node energies")
    p.add_argument("--seed", type=int, help="seed for the overlay palette")
    p.add_argument("--dump-tree", action="store_true", help="write the region hierarchy as JSON")
    p.add_argument("--dump-labeling", action="store_true", help="write the solved cut as JSON")


_CONFIG_KEYS = (
    "sigma_dist",
    "sigma_normal",
    "sigma_color",
    "min_inliers",
    "min_area",
    "mid_level",
    "sigma_level",
    "subsample",
    "normal_window",
    "baseline_level",
    "workers",
    "seed",
)


def _merged_options(args) -> dict:
    """Flag > config-file > default precedence for the run options."""
    merged = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: not valid JSON ({exc})") from exc
        unknown = set(raw) - set(_CONFIG_KEYS)
        if unknown:
            raise InputError(f"{args.config}: unknown config keys {sorted(unknown)}")
        merged.update(raw)
    for key in _CONFIG_KEYS:
        val = getattr(args, key)
        if val is not None:
            merged[key] = val
    return merged


def _run_config(args) -> RunConfig:
    opts = _merged_options(args)
    fit_defaults = PlaneFitConfig()
    obj_defaults = ObjectnessConfig()
    fit = PlaneFitConfig(
        sigma_dist=opts.get("sigma_dist", fit_defaults.sigma_dist),
        sigma_normal=opts.get("sigma_normal", fit_defaults.sigma_normal),
        sigma_color=opts.get("sigma_color", fit_defaults.sigma_color),
        min_inliers=opts.get("min_inliers", fit_defaults.min_inliers),
        min_area_m2=opts.get("min_area", fit_defaults.min_area_m2),
    )
    obj = ObjectnessConfig(
        mid_level=opts.get("mid_level", obj_defaults.mid_level),
        sigma_level=opts.get("sigma_level", obj_defaults.sigma_level),
    )
    return RunConfig(
        rgb=args.rgb,
        depth=args.depth,
        ucm=args.ucm,
        intrinsics=args.intrinsics,
        out_dir=args.out_dir,
        fit=fit,
        obj=obj,
        max_samples=opts.get("subsample", 2000),
        normal_window=opts.get("normal_window", 9),
        baseline_level=opts.get("baseline_level"),
        workers=opts.get("workers", 1),
        seed=opts.get("seed", 0),
        dump_tree=args.dump_tree,
        dump_labeling=args.dump_labeling,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecut",
        description="Joint plane/object segmentation of RGB-D frames by optimal cuts of a boundary-map region hierarchy.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_parser(sub, common)

    p = sub.add_parser("hcut", help="single-threshold cut of a boundary map", parents=[common])
    p.add_argument("--ucm", required=True, type=Path)
    p.add_argument("--level", required=True, type=float)
    p.add_argument("--out", required=True, type=Path, help="output 16-bit label PNG")
    p.add_argument("--rgb", type=Path, help="optional RGB image guiding boundary-pixel attachment")

    p = sub.add_parser("eval", help="score a predicted label image against ground truth", parents=[common])
    p.add_argument("--pred", required=True, type=Path, help="label PNG or directory of them")
    p.add_argument("--gt", required=True, type=Path, help="label PNG or directory of them")
    p.add_argument("--ignore-value", type=int, default=0, help="label excluded from scoring (negative disables)")
    p.add_argument("--out", type=Path, help="also write the scores as JSON")

    p = sub.add_parser("synth", help="generate a synthetic RGB-D test scene", parents=[common])
    p.add_argument("--scene", required=True, choices=SCENES)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--noise-mm", type=float, default=0.0, help="Gaussian depth noise in millimeters")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _dispatch(args) -> None:
    if args.command == "run":
        result = run(_run_config(args))
        print(
            f"wrote {result.out_dir / 'labels.png'}: {result.seg.n_regions} regions, "
            f"{len(result.planes)} planes retained, total energy {result.labeling.total_energy:.3f}"
        )
    elif args.command == "hcut":
        n = run_hcut(args.ucm, args.level, args.out, rgb_path=args.rgb)
        print(f"wrote {args.out}: {n} regions at level {args.level}")
    elif args.command == "eval":
        scores = evaluate(args.pred, args.gt, ignore_value=args.ignore_value)
        text = json.dumps(scores, indent=2, sort_keys=True)
        print(text)
        if args.out is not None:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
    elif args.command == "synth":
        paths = synth(args.scene, args.out_dir, noise_mm=args.noise_mm, seed=args.seed)
        print(f"wrote scene {args.scene!r} to {args.out_dir}: " + ", ".join(p.name for p in paths.values()))
    else:  # pragma: no cover - argparse enforces the choices
        raise InputError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _dispatch(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
