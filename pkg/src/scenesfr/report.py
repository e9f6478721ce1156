"""Analysis artifacts: per-edge CSV, summary JSON and SVG figures.

All text outputs are byte-deterministic for identical inputs: rows are
written in a canonical order, floats are formatted with 6 significant
digits, and no timestamps or environment details are embedded. Figures are
plain SVG with no external references, so they can be inspected as text and
opened anywhere.
"""

from __future__ import annotations

import base64
import io
import json
import re
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from PIL import Image
from scipy.signal import find_peaks

CSV_COLUMNS = (
    "frame_id", "roi_index", "x", "y", "w", "h", "centroid_x", "centroid_y",
    "edge_angle_deg", "orientation", "contrast", "segment", "status",
    "reason", "mtf50",
)

PALETTE = ("#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#ff7f0e", "#8c564b")
VALID_COLOR = "#2ca02c"
INVALID_COLOR = "#d62728"
INNER_RING_COLOR = "#ffd700"   # yellow
OUTER_RING_COLOR = "#ff8c00"   # orange
MASK_COLOR = "#d62728"


def _fmt(value) -> str:
    """Decimal fields carry 6 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def write_csv(measurements: list, path: str | Path) -> Path:
    """One row per measured candidate, sorted by (frame_id, roi_index)."""
    path = Path(path)
    rows = sorted(measurements, key=lambda m: (m.candidate.frame_id, m.roi_index))
    lines = [",".join(CSV_COLUMNS)]
    for m in rows:
        c = m.candidate
        x, y, w, h = c.bbox
        lines.append(",".join((
            c.frame_id,
            str(m.roi_index),
            str(x), str(y), str(w), str(h),
            _fmt(c.centroid[0]), _fmt(c.centroid[1]),
            _fmt(c.edge_angle_deg),
            c.orientation_class,
            _fmt(c.contrast),
            str(m.segment),
            m.verdict.status,
            m.verdict.reason,
            _fmt(m.curve.mtf50) if m.curve is not None else "",
        )))
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def _round6(x):
    return float(f"{float(x):.6g}")


def write_summary(path: str | Path, config: dict, geometry: dict, totals: dict,
                  stats: list, warnings: list, skipped: list,
                  version: str) -> Path:
    """Machine-readable run summary. Layout is fixed so reruns on identical
    inputs produce identical bytes."""
    path = Path(path)
    groups = []
    for s in stats:
        groups.append({
            "segment": s.segment,
            "orientation": s.orientation,
            "count_valid": s.count_valid,
            "count_invalid": s.count_invalid,
            "count_no_crossing": s.count_no_crossing,
            "mean_mtf50": None if s.mean_mtf50 is None else _round6(s.mean_mtf50),
            "mtf50_stddev": None if s.mtf50_stddev is None else _round6(s.mtf50_stddev),
            "mean_curve_mtf50": (
                None if s.mean_curve_mtf50 is None else _round6(s.mean_curve_mtf50)
            ),
            "mean_curve": (
                None if s.mean_curve is None
                else [_round6(v) for v in s.mean_curve]
            ),
        })
    doc = {
        "tool": {"name": "scenesfr", "version": version},
        "config": config,
        "geometry": geometry,
        "totals": totals,
        "groups": groups,
        "warnings": list(warnings),
        "skipped": [{"path": p, "reason": r} for p, r in skipped],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", newline="\n")
    return path


# ---------------------------------------------------------------------------
# SVG helpers

def _svg_open(width: float, height: float) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>',
    ]


def _polyline(points, color, width=1.5, dash=None) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    d = f' stroke-dasharray="{dash}"' if dash else ""
    return (f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{d}/>')


def _text(x, y, s, size=12, color="#333333", anchor="start") -> str:
    return (f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" '
            f'font-family="sans-serif" fill="{color}" '
            f'text-anchor="{anchor}">{escape(s)}</text>')


def _cross(x, y, color, r=4.0) -> str:
    return (f'<path d="M {x - r:.2f} {y - r:.2f} L {x + r:.2f} {y + r:.2f} '
            f'M {x - r:.2f} {y + r:.2f} L {x + r:.2f} {y - r:.2f}" '
            f'stroke="{color}" stroke-width="1.5" fill="none"/>')


def _safe_name(frame_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "__", frame_id)


def render_overlay(frame, measurements: list, path: str | Path) -> Path:
    """Frame image with accepted ROIs outlined: green valid, red invalid."""
    path = Path(path)
    img = Image.fromarray(np.round(frame.luminance * 255.0).astype(np.uint8))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    uri = "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")

    parts = _svg_open(frame.width, frame.height)
    parts.append(f'<image href="{uri}" x="0" y="0" width="{frame.width}" '
                 f'height="{frame.height}"/>')
    for m in measurements:
        x, y, w, h = m.candidate.bbox
        color = VALID_COLOR if m.verdict.status == "valid" else INVALID_COLOR
        parts.append(f'<rect x="{x}" y="{y}" width="{w}" height="{h}" '
                     f'fill="none" stroke="{color}" stroke-width="2"/>')
    parts.append(_text(8, 16, frame.id, size=13, color="#ffff00"))
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", newline="\n")
    return path


def render_scatter(image_size: tuple, seg, measurements: list,
                   mask_polygons: list, path: str | Path) -> Path:
    """Edge locations over the frame geometry with segmentation rings.

    Inner ring boundaries are yellow, the outermost is orange; mask outlines
    are red. One marker is drawn per valid horizontal-class edge at its
    centroid."""
    path = Path(path)
    w, h = image_size
    parts = _svg_open(w, h)
    parts.append(f'<rect x="0" y="0" width="{w}" height="{h}" fill="#f4f4f4" '
                 f'stroke="#888888"/>')
    for poly in mask_polygons:
        closed = list(poly) + [poly[0]]
        parts.append(_polyline(closed, MASK_COLOR, width=2))
    cx, cy = seg.center
    for k, r in enumerate(seg.boundaries):
        color = OUTER_RING_COLOR if k == seg.n_segments - 1 else INNER_RING_COLOR
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" '
                     f'fill="none" stroke="{color}" stroke-width="2"/>')
    parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="#333333"/>')
    n = 0
    for m in measurements:
        if m.verdict.status != "valid":
            continue
        if m.candidate.orientation_class != "horizontal":
            continue
        mx, my = m.candidate.centroid
        parts.append(f'<circle cx="{mx:.2f}" cy="{my:.2f}" r="4" '
                     f'fill="{VALID_COLOR}" fill-opacity="0.8"/>')
        n += 1
    if n == 0:
        parts.append(_text(w / 2, h / 2, "no data", size=24, anchor="middle"))
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", newline="\n")
    return path


def render_curves(stats: list, path: str | Path) -> Path:
    """Per-segment mean SFR curves with MTF50 and local-extremum markers."""
    path = Path(path)
    width, height = 680.0, 460.0
    ml, mr, mt, mb = 60.0, 20.0, 30.0, 50.0
    pw, ph = width - ml - mr, height - mt - mb

    curves = [s for s in stats if s.mean_curve is not None]
    ymax = 1.05
    for s in curves:
        ymax = max(ymax, float(np.max(s.mean_curve)) * 1.05)

    def sx(f):
        return ml + f * pw

    def sy(v):
        return mt + (ymax - v) / ymax * ph

    parts = _svg_open(width, height)
    # axes and ticks
    parts.append(_polyline([(ml, mt), (ml, mt + ph), (ml + pw, mt + ph)],
                           "#333333", width=1.0))
    for fx in np.arange(0.0, 1.001, 0.1):
        x = sx(fx)
        parts.append(_polyline([(x, mt + ph), (x, mt + ph + 4)], "#333333", 1.0))
        parts.append(_text(x, mt + ph + 18, f"{fx:.1f}", size=11, anchor="middle"))
    yticks = np.arange(0.0, ymax + 1e-9, 0.25)
    for vy in yticks:
        y = sy(vy)
        parts.append(_polyline([(ml - 4, y), (ml, y)], "#333333", 1.0))
        parts.append(_text(ml - 8, y + 4, f"{vy:.2f}", size=11, anchor="end"))
    parts.append(_text(ml + pw / 2, height - 12, "spatial frequency (cycles/pixel)",
                       size=12, anchor="middle"))
    parts.append(_text(14, mt - 10, "SFR", size=12))
    # half-modulation reference
    parts.append(_polyline([(ml, sy(0.5)), (ml + pw, sy(0.5))], "#aaaaaa", 1.0,
                           dash="5,4"))

    if not curves:
        parts.append(_text(ml + pw / 2, mt + ph / 2, "no data", size=24,
                           anchor="middle"))
    legend_y = mt + 14
    for i, s in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        v = np.asarray(s.mean_curve, dtype=np.float64)
        f = np.arange(v.size) * 0.01
        parts.append(_polyline(list(zip(sx(f), sy(v))), color, width=2.0))
        if s.mean_curve_mtf50 is not None:
            x, y = sx(s.mean_curve_mtf50), sy(0.5)
            parts.append(f'<rect x="{x - 4:.2f}" y="{y - 4:.2f}" width="8" height="8" '
                         f'fill="{color}" transform="rotate(45 {x:.2f} {y:.2f})"/>')
        maxima, _ = find_peaks(v)
        minima, _ = find_peaks(-v)
        for idx in maxima:
            parts.append(_cross(sx(f[idx]), sy(v[idx]), "#d62728"))
        for idx in minima:
            parts.append(_cross(sx(f[idx]), sy(v[idx]), "#1f77b4"))
        label = (f"segment {s.segment} ({s.orientation}), "
                 f"n={s.count_valid}")
        if s.mean_mtf50 is not None:
            label += f", MTF50={s.mean_mtf50:.3f}"
        parts.append(_polyline([(ml + pw - 190, legend_y - 4),
                                (ml + pw - 170, legend_y - 4)], color, 2.0))
        parts.append(_text(ml + pw - 164, legend_y, label, size=11))
        legend_y += 16
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", newline="\n")
    return path


def render_figures(out_dir: str | Path, overlay_frames: list, stats: list,
                   seg, measurements: list, mask_polygons: list,
                   image_size: tuple) -> list:
    """Write all figures; overlay_frames is a list of (Frame, [Measurement])."""
    out = Path(out_dir)
    written = []
    for frame, frame_measurements in overlay_frames:
        p = out / f"overlay_{_safe_name(frame.id)}.svg"
        written.append(render_overlay(frame, frame_measurements, p))
    written.append(render_scatter(image_size, seg, measurements, mask_polygons,
                                  out / "scatter_edges.svg"))
    written.append(render_curves(stats, out / "sfr_curves.svg"))
    return written
