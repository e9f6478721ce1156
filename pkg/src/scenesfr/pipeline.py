"""End-to-end analysis runs: ingest, detect, measure, aggregate, report.

Frames are processed independently (optionally by a worker pool) and merged
in lexicographic frame-id order, so results never depend on thread count or
completion order. All geometry (mask raster, exclusion margin, radial
segmentation) is derived once from the first processed frame and shared.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .aggregate import accumulate, sufficiency_check
from .errors import EmptyDatasetError, MeasurementError
from .ingest import Frame, load_frame, list_images
from .mask import RegionMask, ValidityMap, dilate_exclusion, rasterize, valid_bbox
from .ingest import MIN_FRAME_SIDE
from .radial import build_segmentation, classify_location
from .report import render_figures, write_csv, write_summary
from .roi_detect import SelectionParams, detect_edges, extract_candidates
from .sfr_core import measure_patch
from .validate import classify, failure_verdict

OVERLAY_FIRST = 5
OVERLAY_TOP = 5


@dataclass
class RunConfig:
    """Effective analysis configuration after precedence resolution."""

    input: str | None = None
    glob: str = "*.png"
    limit: int | None = None
    mask: str | None = None
    out: str = "sfr_out"
    contrast_min: float = 0.1
    contrast_max: float = 0.9
    st: float = 0.02
    esfw: int = 5
    angle_exclusion_deg: float = 2.0
    edge_fit_order: int = 5
    orientation: str = "horizontal"
    overshoot_limit: float = 1.4
    noise_floor_limit: float = 0.4
    segments: int = 3
    segment_ratios: list | None = None
    threads: int = 1

    def params(self) -> SelectionParams:
        return SelectionParams(
            contrast_min=self.contrast_min,
            contrast_max=self.contrast_max,
            st=self.st,
            esfw=self.esfw,
            angle_exclusion_deg=self.angle_exclusion_deg,
            edge_fit_order=self.edge_fit_order,
        )

    def orientations(self) -> tuple:
        if self.orientation == "both":
            return ("horizontal", "vertical")
        if self.orientation in ("horizontal", "vertical"):
            return (self.orientation,)
        raise ValueError(f"bad orientation {self.orientation!r}")

    def echo(self) -> dict:
        """Measurement-relevant configuration for the summary. Execution-only
        knobs (threads, output directory) are left out so reruns with a
        different worker count or destination stay byte-identical."""
        return {
            "input": self.input,
            "glob": self.glob,
            "limit": self.limit,
            "mask": self.mask,
            "orientation": self.orientation,
            "contrast_min": self.contrast_min,
            "contrast_max": self.contrast_max,
            "st": self.st,
            "esfw": self.esfw,
            "angle_exclusion_deg": self.angle_exclusion_deg,
            "edge_fit_order": self.edge_fit_order,
            "overshoot_limit": self.overshoot_limit,
            "noise_floor_limit": self.noise_floor_limit,
            "segments": self.segments,
            "segment_ratios": self.segment_ratios,
        }


@dataclass
class Measurement:
    """One candidate with its measurement outcome, in frame coordinates."""

    candidate: object
    roi_index: int
    curve: object
    verdict: object
    segment: int


@dataclass
class Geometry:
    width: int
    height: int
    region: RegionMask | None
    vmap_raw: ValidityMap | None     # mask raster without margin
    vmap_meas: ValidityMap | None    # with exclusion margin applied
    crop: tuple | None               # (x, y, w, h) detection window
    seg: object = None


@dataclass
class RunResult:
    measurements: list
    stats: list
    seg: object
    warnings: list
    totals: dict
    skipped: list
    exit_code: int
    written: list = field(default_factory=list)


def build_geometry(width: int, height: int, region: RegionMask | None,
                   cfg: RunConfig) -> Geometry:
    if region is None:
        vmap_full = ValidityMap.full(width, height)
        seg = build_segmentation(vmap_full, None, cfg.segments, cfg.segment_ratios)
        return Geometry(width, height, None, None, None, None, seg)
    vmap_raw = rasterize(region, width, height)
    seg = build_segmentation(vmap_raw, region, cfg.segments, cfg.segment_ratios)
    margin = 2 * cfg.esfw
    vmap_meas = dilate_exclusion(vmap_raw, margin)
    crop = None
    if vmap_meas.valid.any():
        x, y, w, h = valid_bbox(vmap_meas)
        if w >= MIN_FRAME_SIDE and h >= MIN_FRAME_SIDE and \
                (w < width or h < height):
            crop = (x, y, w, h)
    return Geometry(width, height, region, vmap_raw, vmap_meas, crop, seg)


def process_frame(frame: Frame, geom: Geometry, cfg: RunConfig) -> list:
    """Measure every accepted candidate of one frame. Returns
    (candidate, curve, verdict) triples with frame-level coordinates."""
    params = cfg.params()
    wanted = cfg.orientations()

    vmap = geom.vmap_meas
    work = frame
    ox = oy = 0
    if geom.crop is not None:
        x, y, w, h = geom.crop
        ox, oy = x, y
        work = Frame(id=frame.id, width=w, height=h,
                     luminance=frame.luminance[y:y + h, x:x + w])
        vmap = ValidityMap(w, h, geom.vmap_meas.valid[y:y + h, x:x + w],
                           geom.vmap_meas.margin)

    edges = detect_edges(work, vmap)
    cands = extract_candidates(work, edges, params, vmap)
    out = []
    for cand in cands:
        if cand.orientation_class not in wanted:
            continue
        if ox or oy:
            bx, by, bw, bh = cand.bbox
            cand.bbox = (bx + ox, by + oy, bw, bh)
            cand.centroid = (cand.centroid[0] + ox, cand.centroid[1] + oy)
        try:
            curve = measure_patch(
                cand.patch, cand.orientation_class,
                order=params.edge_fit_order, esfw=params.esfw,
                roi_ref=f"{frame.id}#{len(out)}",
            )
            verdict = classify(curve, cfg.overshoot_limit, cfg.noise_floor_limit)
        except MeasurementError as exc:
            curve = None
            verdict = failure_verdict(exc.reason)
        out.append((cand, curve, verdict))
    return out


def _run(sources: list, region: RegionMask | None, cfg: RunConfig,
         write: bool = True) -> RunResult:
    """sources: ordered (frame_id, supplier) pairs; supplier() -> Frame."""
    skipped = []
    geom = None
    first_frame = None
    for fid, supplier in sources:
        try:
            first_frame = supplier()
            geom = build_geometry(first_frame.width, first_frame.height, region, cfg)
            break
        except (OSError, ValueError) as exc:
            skipped.append((fid, str(exc)))
    if geom is None:
        return RunResult([], [], None, [], {"frames": 0}, skipped, 3)

    def worker(item):
        fid, supplier = item
        try:
            frame = supplier()
        except (OSError, ValueError) as exc:
            return ("skip", fid, str(exc))
        if (frame.width, frame.height) != (geom.width, geom.height):
            return ("skip", fid,
                    f"size {frame.width}x{frame.height} differs from the run "
                    f"geometry {geom.width}x{geom.height}")
        return ("ok", fid, process_frame(frame, geom, cfg))

    if cfg.threads <= 1:
        raw = [worker(item) for item in sources]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            raw = list(pool.map(worker, sources))

    triples = []
    measurements = []
    frame_valid_counts = {}
    n_frames = 0
    for status, fid, payload in raw:
        if status == "skip":
            skipped.append((fid, payload))
            continue
        n_frames += 1
        nvalid = 0
        for i, (cand, curve, verdict) in enumerate(payload):
            segment = classify_location(cand.centroid, geom.seg)
            triples.append((cand, curve, verdict))
            measurements.append(Measurement(cand, i, curve, verdict, segment))
            if verdict.status == "valid":
                nvalid += 1
        frame_valid_counts[fid] = nvalid

    stats = accumulate(triples, geom.seg, cfg.orientations())
    warnings = sufficiency_check(stats)
    n_curves = sum(1 for m in measurements if m.curve is not None)
    n_valid = sum(1 for m in measurements if m.verdict.status == "valid")
    totals = {
        "frames": n_frames,
        "frames_skipped": len(skipped),
        "candidates": len(measurements),
        "curves": n_curves,
        "valid": n_valid,
        "invalid_curves": n_curves - n_valid,
        "measurement_errors": len(measurements) - n_curves,
    }

    result = RunResult(
        measurements=measurements,
        stats=stats,
        seg=geom.seg,
        warnings=warnings,
        totals=totals,
        skipped=skipped,
        exit_code=0 if n_valid > 0 else 3,
    )
    if write:
        result.written = _write_outputs(cfg, geom, result, sources,
                                        frame_valid_counts)
    return result


def _overlay_ids(ordered_ids: list, valid_counts: dict) -> list:
    chosen = list(ordered_ids[:OVERLAY_FIRST])
    rest = sorted(
        (fid for fid in ordered_ids if fid not in chosen),
        key=lambda fid: (-valid_counts.get(fid, 0), fid),
    )
    chosen.extend(rest[:OVERLAY_TOP])
    return chosen


def _write_outputs(cfg: RunConfig, geom: Geometry, result: RunResult,
                   sources: list, valid_counts: dict) -> list:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = [write_csv(result.measurements, out / "measurements.csv")]

    geometry = {
        "image_size": [geom.width, geom.height],
        "center": [geom.seg.center[0], geom.seg.center[1]],
        "r_e": geom.seg.r_e,
        "boundaries": [float(b) for b in geom.seg.boundaries],
        "mask_reference_size": (
            list(geom.region.reference_size) if geom.region else None
        ),
    }
    written.append(write_summary(
        out / "summary.json", cfg.echo(), geometry, result.totals,
        result.stats, result.warnings, result.skipped, __version__,
    ))

    by_frame = {}
    for m in result.measurements:
        by_frame.setdefault(m.candidate.frame_id, []).append(m)
    processed_ids = [fid for fid, _ in sources
                     if fid in valid_counts]
    suppliers = dict(sources)
    overlay_frames = []
    for fid in _overlay_ids(processed_ids, valid_counts):
        try:
            overlay_frames.append((suppliers[fid](), by_frame.get(fid, [])))
        except (OSError, ValueError):
            continue
    mask_polygons = (
        geom.region.scaled_polygons(geom.width, geom.height)
        if geom.region else []
    )
    written.extend(render_figures(
        out, overlay_frames, result.stats, geom.seg, result.measurements,
        mask_polygons, (geom.width, geom.height),
    ))
    return written


def run_analysis(cfg: RunConfig) -> RunResult:
    """Disk-based analysis run over cfg.input / cfg.glob."""
    region = RegionMask.from_json(cfg.mask) if cfg.mask else None
    root = Path(cfg.input)
    paths = list_images(root, cfg.glob)
    if cfg.limit is not None:
        paths = paths[:cfg.limit]
    sources = []
    for p in paths:
        rel = p.relative_to(root).as_posix()
        if p.suffix.lower() not in (".png", ".jpg", ".jpeg"):
            continue
        sources.append((rel, _disk_supplier(p, rel)))
    if not sources:
        raise EmptyDatasetError(
            f"no loadable images match {cfg.glob!r} under {root}")
    return _run(sources, region, cfg)


def _disk_supplier(path: Path, rel: str):
    return lambda: load_frame(path, rel)


def analyze_frames(frames: list, cfg: RunConfig,
                   region: RegionMask | None = None,
                   write: bool = False) -> RunResult:
    """In-memory analysis over already-loaded frames (test and API entry)."""
    sources = [(f.id, (lambda fr: (lambda: fr))(f)) for f in frames]
    return _run(sources, region, cfg, write=write)
