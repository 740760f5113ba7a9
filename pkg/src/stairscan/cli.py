"""Command-line interface.

Subcommands: detect (PCD → detection JSON), merge (two detection JSONs →
one), synth (scene spec JSON → PCD + ground truth), bench (scene spec dir →
timing/error report).

Exit codes: 0 success; 2 unreadable/invalid input file; 3 invalid
configuration or scene spec; 4 merge found no common stair.
"""
from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels, synth
from .config import RunConfig, load_config
from .detect import detect, result_from_dict, result_to_dict, staircase_to_dict
from .errors import (InvalidConfigError, InvalidSpecError, NoMatchError,
                     PcdFormatError)
from .merging import merge_staircases
from .pcd import load_pcd, save_pcd
from .ply import save_marker_ply

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_BAD_CONFIG = 3
EXIT_NO_MATCH = 4


def _fail(code: int, message: str) -> int:
    print(f"stairscan: error: {message}", file=sys.stderr)
    return code


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _dump_json(data, path):
    text = json.dumps(data, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _config_from_args(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return RunConfig()


def cmd_detect(args) -> int:
    try:
        cfg = _config_from_args(args)
        cfg.validate()
    except (InvalidConfigError, OSError) as exc:
        return _fail(EXIT_BAD_CONFIG, str(exc))
    try:
        cloud = load_pcd(args.input)
    except (PcdFormatError, OSError) as exc:
        return _fail(EXIT_BAD_INPUT, str(exc))
    result = detect(cloud, cfg)
    _dump_json(result_to_dict(result), args.out)
    if args.markers:
        save_marker_ply(args.markers, result.staircases)
    print(f"detected {len(result.staircases)} staircase(s) in "
          f"{result.timing_ms['total']:.1f} ms "
          f"({len(cloud)} points, backend={kernels.active_backend()})",
          file=sys.stderr)
    return EXIT_OK


def cmd_merge(args) -> int:
    try:
        cfg = _config_from_args(args)
        cfg.validate()
    except (InvalidConfigError, OSError) as exc:
        return _fail(EXIT_BAD_CONFIG, str(exc))
    try:
        da = _load_json(args.a)
        db = _load_json(args.b)
        ra = result_from_dict(da)
        rb = result_from_dict(db)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        return _fail(EXIT_BAD_INPUT, f"cannot read detection JSON: {exc}")
    merged = []
    used_b = set()
    matched_any = False
    for sa in ra.staircases:
        best = None
        for k, sb in enumerate(rb.staircases):
            if k in used_b:
                continue
            try:
                best = (k, merge_staircases(sa, sb, cfg.merge))
                break
            except NoMatchError:
                continue
        if best is None:
            merged.append(sa)
        else:
            used_b.add(best[0])
            merged.append(best[1])
            matched_any = True
    merged.extend(sb for k, sb in enumerate(rb.staircases) if k not in used_b)
    if not matched_any:
        return _fail(EXIT_NO_MATCH, "no staircase pair shares a common stair")
    _dump_json({"staircases": [staircase_to_dict(s) for s in merged]}, args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.canonical:
        outdir = Path(args.canonical)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, spec in synth.canonical_scene_specs().items():
            _dump_json(synth.spec_to_dict(spec), outdir / f"{name}.json")
        print(f"wrote {len(synth.canonical_scene_specs())} scene specs to {outdir}",
              file=sys.stderr)
        return EXIT_OK
    if not args.spec:
        return _fail(EXIT_BAD_INPUT, "need a scene spec file (or --canonical DIR)")
    try:
        data = _load_json(args.spec)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_BAD_INPUT, f"cannot read scene spec: {exc}")
    try:
        spec = synth.spec_from_dict(data)
    except InvalidSpecError as exc:
        return _fail(EXIT_BAD_CONFIG, str(exc))
    scene = synth.build_scene(spec)
    cloud = synth.sample_lidar(scene, spec)
    save_pcd(cloud, args.out, binary=args.binary)
    if args.truth:
        _dump_json(synth.truth_to_dict(scene.truth), args.truth)
    print(f"wrote {len(cloud)} points to {args.out}", file=sys.stderr)
    return EXIT_OK


def _match_error(result, truth):
    """|model - truth| errors of the best matching detection, or None."""
    best = None
    for s in result.staircases:
        if s.direction != truth.direction:
            continue
        gap = float(np.hypot(*(s.model.location[:2] - truth.location[:2])))
        if gap > 1.0 or abs(s.model.h - truth.h) > 0.05:
            continue
        if best is None or gap < best[0]:
            best = (gap, s)
    if best is None:
        return None
    model = best[1].model
    return (abs(model.h - truth.h), abs(model.d - truth.d),
            abs(model.w - truth.w))


def cmd_bench(args) -> int:
    scene_dir = Path(args.scenes)
    spec_paths = sorted(scene_dir.glob("*.json"))
    if not spec_paths:
        return _fail(EXIT_BAD_INPUT, f"no scene specs (*.json) in {scene_dir}")
    try:
        cfg = _config_from_args(args)
        cfg.validate()
    except (InvalidConfigError, OSError) as exc:
        return _fail(EXIT_BAD_CONFIG, str(exc))
    rows = []
    for path in spec_paths:
        try:
            spec = synth.spec_from_dict(_load_json(path))
        except (OSError, json.JSONDecodeError) as exc:
            return _fail(EXIT_BAD_INPUT, f"{path}: {exc}")
        except InvalidSpecError as exc:
            return _fail(EXIT_BAD_CONFIG, f"{path}: {exc}")
        scene = synth.build_scene(spec)
        cloud = synth.sample_lidar(scene, spec)
        times = []
        result = None
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            result = detect(cloud, cfg)
            times.append((time.perf_counter() - t0) * 1e3)
        errs = _match_error(result, scene.truth) if scene.truth else None
        rows.append({
            "scene": path.stem,
            "time_ms": statistics.median(times),
            "err_h_cm": None if errs is None else errs[0] * 100,
            "err_d_cm": None if errs is None else errs[1] * 100,
            "err_w_cm": None if errs is None else errs[2] * 100,
        })
    header = f"{'scene':<14} {'time_ms':>8} {'err_h_cm':>9} {'err_d_cm':>9} {'err_w_cm':>9}"
    print(header)
    print("-" * len(header))
    for row in rows:
        def fmt(v):
            return "-" if v is None else f"{v:.2f}"
        print(f"{row['scene']:<14} {row['time_ms']:>8.2f} "
              f"{fmt(row['err_h_cm']):>9} {fmt(row['err_d_cm']):>9} "
              f"{fmt(row['err_w_cm']):>9}")
    if args.out_csv:
        with open(args.out_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["scene", "time_ms", "err_h_cm", "err_d_cm", "err_w_cm"])
            writer.writeheader()
            for row in rows:
                writer.writerow({k: ("" if v is None else
                                     (f"{v:.4f}" if isinstance(v, float) else v))
                                 for k, v in row.items()})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stairscan",
        description="Staircase detection in 3D LiDAR point clouds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect staircases in a PCD file")
    p.add_argument("input", help="input .pcd file")
    p.add_argument("--config", help="RunConfig JSON file")
    p.add_argument("--out", help="output detection JSON (default: stdout)")
    p.add_argument("--markers", help="write detected stairs as a PLY box mesh")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("merge", help="merge two detection JSON files")
    p.add_argument("a", help="first detection JSON")
    p.add_argument("b", help="second detection JSON")
    p.add_argument("--config", help="RunConfig JSON file (merge thresholds)")
    p.add_argument("--out", help="output JSON (default: stdout)")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("synth", help="generate a synthetic scene point cloud")
    p.add_argument("spec", nargs="?", help="scene spec JSON")
    p.add_argument("--out", default="scene.pcd", help="output PCD path")
    p.add_argument("--truth", help="also write ground-truth JSON here")
    p.add_argument("--binary", action="store_true", help="write binary PCD")
    p.add_argument("--canonical", metavar="DIR",
                   help="instead: write the canonical scene specs into DIR")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="run detection timing over scene specs")
    p.add_argument("scenes", help="directory of scene spec JSON files")
    p.add_argument("--config", help="RunConfig JSON file")
    p.add_argument("--repeat", type=int, default=5, help="runs per scene")
    p.add_argument("--out-csv", help="also write results as CSV")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
