"""Command line interface.

Subcommands:
  analyze     measure slanted edges across a directory of images
  synth       render synthetic edge targets from a JSON description
  mask-check  validate a region mask and print the derived geometry

Exit codes: 0 success, 2 fatal configuration problem (bad flags, unreadable
mask or config, missing input directory), 3 clean run that produced nothing
to report (no matching frames, or no valid measurement in any frame).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .errors import DatasetError, EmptyDatasetError, MaskError
from .ingest import load_frame
from .mask import RegionMask, rasterize
from .pipeline import RunConfig, run_analysis
from .radial import build_segmentation, segment_radii_from_ratios
from .report import render_scatter
from .synth_oracle import SynthEdgeSpec, make_scene, make_slanted_edge

_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _parse_pair(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected MIN,MAX")
    return (float(parts[0]), float(parts[1]))


def _parse_ratios(text: str) -> list:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="scenesfr",
        description="Camera sharpness (e-SFR / MTF50) from natural-scene edges.",
    )
    ap.add_argument("--version", action="version", version=f"scenesfr {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="measure a directory of frames")
    an.add_argument("--input", help="directory of input images")
    an.add_argument("--glob", help="filename pattern (default *.png)")
    an.add_argument("--limit", type=int, help="process at most N frames")
    an.add_argument("--mask", help="region mask JSON file")
    an.add_argument("--out", help="output directory (default sfr_out)")
    an.add_argument("--config", help="JSON file with defaults for any option")
    an.add_argument("--contrast", type=_parse_pair, metavar="MIN,MAX",
                    help="usable edge contrast range (default 0.1,0.9)")
    an.add_argument("--st", type=float,
                    help="flank uniformity bound, luminance std (default 0.02)")
    an.add_argument("--esfw", type=int,
                    help="analysis half-width across the edge, px (default 5)")
    an.add_argument("--angle-exclusion", type=float, dest="angle_exclusion",
                    help="degrees excluded around 0/45/90 slants (default 2)")
    an.add_argument("--edge-fit-order", type=int, choices=(1, 3, 5),
                    dest="edge_fit_order", help="edge position fit order (default 5)")
    an.add_argument("--orientation", choices=("horizontal", "vertical", "both"),
                    help="SFR direction(s) to report (default horizontal)")
    an.add_argument("--overshoot-limit", type=float, dest="overshoot_limit",
                    help="peak SFR above this is invalid (default 1.4)")
    an.add_argument("--noise-min-limit", type=float, dest="noise_min_limit",
                    help="local SFR minimum above this at f >= 0.25 cy/px "
                         "is invalid (default 0.4)")
    an.add_argument("--segments", type=int, help="radial segment count (default 3)")
    an.add_argument("--segment-ratios", type=_parse_ratios, dest="segment_ratios",
                    metavar="R1,R2,...", help="explicit ring boundaries as "
                    "fractions of the outermost radius, ending at 1.0")
    an.add_argument("--threads", type=int, help="worker threads (default 1)")

    sy = sub.add_parser("synth", help="render synthetic edge targets")
    sy.add_argument("--spec", required=True, help="JSON description of the frames")
    sy.add_argument("--out", default=".", help="directory for the PNG output")

    mc = sub.add_parser("mask-check", help="validate a mask and print geometry")
    mc.add_argument("--mask", required=True, help="region mask JSON file")
    size = mc.add_mutually_exclusive_group(required=True)
    size.add_argument("--image", help="image file whose size the mask must fit")
    size.add_argument("--size", metavar="WxH", help="target size, e.g. 1280x960")
    mc.add_argument("--segments", type=int, default=3)
    mc.add_argument("--out", help="optional SVG rendering of the geometry")
    return ap


def _load_config_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    values = {}
    for key, val in data.items():
        if key == "contrast":
            values["contrast_min"], values["contrast_max"] = float(val[0]), float(val[1])
        elif key in _CONFIG_FIELDS:
            values[key] = val
        else:
            raise ValueError(f"unknown config key {key!r}")
    return values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Precedence: command line > --config file > built-in defaults."""
    values = {}
    if args.config:
        values.update(_load_config_file(args.config))

    direct = {
        "input": args.input, "glob": args.glob, "limit": args.limit,
        "mask": args.mask, "out": args.out, "st": args.st, "esfw": args.esfw,
        "angle_exclusion_deg": args.angle_exclusion,
        "edge_fit_order": args.edge_fit_order,
        "orientation": args.orientation,
        "overshoot_limit": args.overshoot_limit,
        "noise_floor_limit": args.noise_min_limit,
        "segments": args.segments, "segment_ratios": args.segment_ratios,
        "threads": args.threads,
    }
    if args.contrast is not None:
        direct["contrast_min"], direct["contrast_max"] = args.contrast
    for key, val in direct.items():
        if val is not None:
            values[key] = val

    cfg = RunConfig(**values)
    if cfg.input is None:
        raise ValueError("an input directory is required (--input or config)")
    if cfg.threads < 1:
        raise ValueError("threads must be at least 1")
    if cfg.segments < 2:
        raise ValueError("need at least 2 radial segments")
    cfg.params()          # validates the selection parameters
    cfg.orientations()
    if cfg.segment_ratios is not None:
        segment_radii_from_ratios(1.0, cfg.segment_ratios)
    if not (0.0 < cfg.noise_floor_limit and 1.0 < cfg.overshoot_limit):
        raise ValueError("overshoot limit must exceed 1 and noise-floor "
                         "limit must be positive")
    return cfg


def _cmd_analyze(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    result = run_analysis(cfg)
    t = result.totals
    if t.get("frames", 0) == 0:
        print("no frames could be processed", file=sys.stderr)
        for fid, reason in result.skipped:
            print(f"  skipped {fid}: {reason}", file=sys.stderr)
        return 3
    print(f"frames: {t['frames']} processed, {t['frames_skipped']} skipped")
    print(f"edges: {t['candidates']} measured, {t['valid']} valid, "
          f"{t['invalid_curves']} invalid, {t['measurement_errors']} errors")
    for w in result.warnings:
        print(f"warning: {w}")
    print(f"wrote {len(result.written)} files to {cfg.out}")
    return result.exit_code


def _edge_spec(data: dict) -> SynthEdgeSpec:
    allowed = {f.name for f in dataclasses.fields(SynthEdgeSpec)}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown edge fields: {sorted(unknown)}")
    return SynthEdgeSpec(**data)


def _synth_frame(name: str, body: dict, kind: str):
    if kind == "edge":
        return make_slanted_edge(_edge_spec(body), name=name)
    width = body["width"]
    height = body["height"]
    edges = []
    for e in body.get("edges", []):
        e = dict(e)
        pos = (e.pop("x"), e.pop("y"))
        edges.append((pos, _edge_spec(e)))
    mask = body.get("mask")
    region = None
    if isinstance(mask, str):
        region = RegionMask.from_json(mask)
    elif isinstance(mask, dict):
        region = RegionMask.from_dict(mask)
    return make_scene(
        edges, width, height, mask=region,
        background=body.get("background", 0.5),
        min_separation=body.get("min_separation", 10),
        name=name,
    )


def _cmd_synth(args: argparse.Namespace) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    entries = []
    if "frames" in spec:
        entries = list(spec["frames"])
    else:
        entries = [spec]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    count = 0
    for i, entry in enumerate(entries):
        kind = "edge" if "edge" in entry else "scene" if "scene" in entry else None
        if kind is None:
            raise ValueError(f"spec entry {i} has neither 'edge' nor 'scene'")
        name = entry.get("name", f"frame_{i:03d}")
        frame = _synth_frame(name, entry[kind], kind)
        arr = np.round(frame.luminance * 255.0).astype(np.uint8)
        dest = outdir / f"{name}.png"
        Image.fromarray(arr, mode="L").save(dest)
        print(f"wrote {dest}")
        count += 1
    if count == 0:
        print("spec contains no frames", file=sys.stderr)
        return 3
    return 0


def _cmd_mask_check(args: argparse.Namespace) -> int:
    region = RegionMask.from_json(args.mask)
    if args.image:
        frame = load_frame(Path(args.image), Path(args.image).name)
        width, height = frame.width, frame.height
    else:
        try:
            w_s, h_s = args.size.lower().split("x")
            width, height = int(w_s), int(h_s)
        except ValueError:
            raise ValueError(f"bad --size {args.size!r}, expected WxH") from None
    vmap = rasterize(region, width, height)
    seg = build_segmentation(vmap, region, args.segments)
    coverage = float(vmap.valid.mean())
    print(f"mask: {len(region.polygons)} polygon(s), "
          f"reference size {region.reference_size[0]}x{region.reference_size[1]}")
    print(f"target size: {width}x{height}")
    print(f"coverage: {coverage:.1%} of the frame is valid")
    print(f"center: ({seg.center[0]:.2f}, {seg.center[1]:.2f})")
    print(f"r_e: {seg.r_e:.2f} px")
    bounds = ", ".join(f"{b:.2f}" for b in seg.boundaries)
    print(f"segment boundaries: {bounds}")
    if args.out:
        path = render_scatter((width, height), seg, [],
                              region.scaled_polygons(width, height), args.out)
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "synth":
            return _cmd_synth(args)
        return _cmd_mask_check(args)
    except EmptyDatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DatasetError, MaskError, ValueError, OSError,
            json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
