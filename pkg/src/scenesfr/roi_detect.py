"""Detection and selection of measurable slanted edges in natural scenes.

Edge pixels come from a Canny detector whose thresholds adapt to the frame's
own gradient-magnitude distribution. Edge pixel chains are traced, split
into near-straight runs, and each run is screened with four selection
gates before it becomes a region of interest:

  contrast   the step between the flat flanks must sit inside a usable range
  flatness   each flank must be uniform (std below the step noise floor)
  angle      slants too close to 0/45/90 degrees cannot be supersampled
  isolation  no unrelated edge may intrude on the analysis window

Every accepted ROI also lies entirely inside the frame's valid region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .ingest import Frame
from .mask import ValidityMap

CANNY_SIGMA = 1.0
CANNY_HIGH_PERCENTILE = 90.0
CANNY_LOW_RATIO = 0.4
MAX_CHORD_DEVIATION = 1.0   # px; straight-run splitting bound
ROI_LENGTH_CAP = 64         # px along the edge
ROI_LENGTH_MIN = 32         # px along the edge
TAIL_FRACTION = 0.2         # outer share of each flank used for statistics

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass
class SelectionParams:
    """Selection parameters for natural-scene edge candidates."""

    contrast_min: float = 0.1
    contrast_max: float = 0.9
    st: float = 0.02            # flank uniformity bound, normalized luminance std
    esfw: int = 5               # half-width of the analysis window across the edge
    angle_exclusion_deg: float = 2.0
    edge_fit_order: int = 5

    def __post_init__(self):
        if not (0.0 <= self.contrast_min < self.contrast_max <= 1.0):
            raise ValueError("need 0 <= contrast_min < contrast_max <= 1")
        if self.st <= 0.0:
            raise ValueError("st must be positive")
        if self.esfw < 1:
            raise ValueError("esfw must be at least 1 px")
        if not (0.0 <= self.angle_exclusion_deg < 22.5):
            raise ValueError("angle_exclusion_deg must lie in [0, 22.5)")
        if self.edge_fit_order not in (1, 3, 5):
            raise ValueError("edge_fit_order must be 1, 3 or 5")


@dataclass
class RoiCandidate:
    """One accepted slanted-edge region of interest.

    bbox is (x, y, w, h) in frame coordinates; centroid is the mean position
    of the run's edge pixels; patch is the luminance cutout of bbox.
    orientation_class names the SFR direction the edge measures: a
    near-vertical edge modulates along x and is 'horizontal'.
    """

    frame_id: str
    bbox: tuple
    centroid: tuple
    edge_angle_deg: float
    contrast: float
    orientation_class: str
    patch: np.ndarray


def orientation_of(edge_angle_deg: float) -> str:
    return "horizontal" if 45.0 < edge_angle_deg % 180.0 < 135.0 else "vertical"


def _angle_excluded(edge_angle_deg: float, exclusion_deg: float) -> bool:
    """Within exclusion_deg of any multiple of 45 degrees."""
    return abs((edge_angle_deg + 22.5) % 45.0 - 22.5) < exclusion_deg


def _smoothed(lum: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Gaussian pre-smoothing that never mixes invalid pixels in: masked
    normalized convolution, so no synthetic step appears at the mask rim."""
    if valid.all():
        return ndimage.gaussian_filter(lum, CANNY_SIGMA)
    w = ndimage.gaussian_filter(valid.astype(np.float64), CANNY_SIGMA)
    s = ndimage.gaussian_filter(np.where(valid, lum, 0.0), CANNY_SIGMA)
    return s / np.maximum(w, 1e-12)


def _nms(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin ridges to 1 px: keep gradient-direction local maxima. Two-sample
    plateaus are broken deterministically (strict test on the positive side)."""
    h, w = mag.shape
    pad = np.full((h + 2, w + 2), -1.0)
    pad[1:-1, 1:-1] = mag

    sector = np.round((np.arctan2(gy, gx) % np.pi) / (np.pi / 4)).astype(int) % 4
    # neighbor offsets along the gradient for sectors 0..3:
    #   0 -> horizontal, 1 -> down-right diagonal, 2 -> vertical, 3 -> down-left
    minus = [pad[1:-1, :-2], pad[:-2, :-2], pad[:-2, 1:-1], pad[:-2, 2:]]
    plus = [pad[1:-1, 2:], pad[2:, 2:], pad[2:, 1:-1], pad[2:, :-2]]

    keep = np.zeros_like(mag, dtype=bool)
    for s in range(4):
        sel = sector == s
        keep |= sel & (mag >= minus[s]) & (mag > plus[s])
    return keep & (mag > 0)


def detect_edges(frame: Frame, vmap: ValidityMap | None = None) -> np.ndarray:
    """Canny edge pixels of the frame, restricted to the valid region.

    Pre-smoothing is Gaussian (sigma 1.0), gradients are Sobel, and the
    hysteresis thresholds adapt to the frame: high is the 90th percentile of
    the nonzero gradient magnitudes over valid pixels, low is 0.4 * high.
    """
    lum = frame.luminance
    valid = vmap.valid if vmap is not None else np.ones(lum.shape, dtype=bool)
    if valid.shape != lum.shape:
        raise ValueError("validity map does not match frame size")
    if not valid.any():
        return np.zeros(lum.shape, dtype=bool)

    sm = _smoothed(lum, valid)
    gx = ndimage.sobel(sm, axis=1)
    gy = ndimage.sobel(sm, axis=0)
    mag = np.hypot(gx, gy)
    mag[~valid] = 0.0

    nonzero = mag[mag > 0]
    if nonzero.size == 0:
        return np.zeros(lum.shape, dtype=bool)
    high = float(np.percentile(nonzero, CANNY_HIGH_PERCENTILE))
    low = CANNY_LOW_RATIO * high

    ridge = _nms(mag, gx, gy)
    weak = ridge & (mag >= low)
    strong = ridge & (mag >= high)
    labels, _ = ndimage.label(weak, structure=_EIGHT)
    keep_ids = np.unique(labels[strong])
    keep_ids = keep_ids[keep_ids > 0]
    edges = weak & np.isin(labels, keep_ids)
    return edges & valid


def trace_chains(edges: np.ndarray) -> list:
    """Ordered pixel chains of the edge map.

    Junction pixels (more than two neighbors) are removed first, so every
    remaining connected component is a simple path or cycle; each is walked
    from its lexicographically smallest endpoint. Returns a list of (n, 2)
    integer arrays of (row, col) positions.
    """
    kernel = np.ones((3, 3), dtype=np.uint8)
    kernel[1, 1] = 0
    counts = ndimage.convolve(edges.astype(np.uint8), kernel, mode="constant", cval=0)
    simple = edges & (counts <= 2)
    labels, nlab = ndimage.label(simple, structure=_EIGHT)
    rows, cols = np.nonzero(labels)
    labs = labels[rows, cols]
    by_label = np.argsort(labs, kind="stable")
    bounds = np.searchsorted(labs[by_label], np.arange(1, nlab + 2))

    chains = []
    offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    for lab in range(1, nlab + 1):
        sel = by_label[bounds[lab - 1]:bounds[lab]]
        if sel.size < 2:
            continue
        members = {(int(r), int(c)) for r, c in zip(rows[sel], cols[sel])}
        nbrs = {}
        for r, c in members:
            nbrs[(r, c)] = [
                (r + dr, c + dc) for dr, dc in offsets if (r + dr, c + dc) in members
            ]
        endpoints = sorted(p for p, nn in nbrs.items() if len(nn) <= 1)
        start = endpoints[0] if endpoints else min(members)
        order = [start]
        prev = None
        cur = start
        while True:
            nxt = [p for p in nbrs[cur] if p != prev]
            if not nxt:
                break
            nxt = nxt[0] if len(nxt) == 1 else min(nxt)
            if nxt == start:
                break
            order.append(nxt)
            prev, cur = cur, nxt
            if len(order) > len(members):
                break
        chains.append(np.array(order, dtype=np.int64))
    return chains


def _max_chord_deviation(pts: np.ndarray, i: int, j: int) -> float:
    """Largest perpendicular distance of pts[i..j] from the chord pts[i]-pts[j]."""
    p0 = pts[i].astype(np.float64)
    chord = pts[j].astype(np.float64) - p0
    norm = math.hypot(chord[0], chord[1])
    if norm == 0.0:
        return 0.0
    rel = pts[i:j + 1].astype(np.float64) - p0
    cross = np.abs(rel[:, 0] * chord[1] - rel[:, 1] * chord[0]) / norm
    return float(cross.max())


def split_runs(pts: np.ndarray, max_dev: float = MAX_CHORD_DEVIATION) -> list:
    """Split an ordered chain into near-straight runs.

    A run may deviate from its own chord by at most max_dev px. Growth is
    exponential with a bisection back-off, so long straight chains stay
    cheap. Returns (start, end) index pairs into pts (inclusive)."""
    n = len(pts)
    runs = []
    i = 0
    while i < n - 1:
        step = 8
        j = min(i + step, n - 1)
        good = i + 1
        while j <= n - 1 and _max_chord_deviation(pts, i, j) <= max_dev:
            good = j
            if j == n - 1:
                break
            step *= 2
            j = min(i + step, n - 1)
        lo, hi = good, min(i + step, n - 1)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if _max_chord_deviation(pts, i, mid) <= max_dev:
                lo = mid
            else:
                hi = mid - 1
        runs.append((i, lo))
        if lo == n - 1:
            break
        i = lo
    return runs


def _fit_direction(xy: np.ndarray) -> tuple:
    """Least-squares direction of a run. Returns a unit vector aligned with
    the traversal direction of the points."""
    span = xy[-1] - xy[0]
    if abs(span[1]) >= abs(span[0]):
        # near-vertical: regress x on y
        a = np.polyfit(xy[:, 1], xy[:, 0], 1)[0]
        u = np.array([a, 1.0])
    else:
        a = np.polyfit(xy[:, 0], xy[:, 1], 1)[0]
        u = np.array([1.0, a])
    u /= math.hypot(u[0], u[1])
    if np.dot(u, span) < 0:
        u = -u
    return u


def extract_candidates(frame: Frame, edges: np.ndarray, params: SelectionParams,
                       vmap: ValidityMap | None = None) -> list:
    """Screen every near-straight edge run and return the accepted ROIs."""
    lum = frame.luminance
    h, w = lum.shape
    valid = vmap.valid if vmap is not None else np.ones((h, w), dtype=bool)

    chains = trace_chains(edges)
    chain_id = np.full((h, w), -1, dtype=np.int64)
    for ci, pts in enumerate(chains):
        chain_id[pts[:, 0], pts[:, 1]] = ci
    edge_rows, edge_cols = np.nonzero(edges)

    min_len = max(ROI_LENGTH_MIN, 4 * params.esfw)
    half_across = max(params.esfw, 8) + 0.5
    candidates = []

    for ci, pts in enumerate(chains):
        for i0, i1 in split_runs(pts):
            sub = pts[i0:i1 + 1]
            xy = sub[:, ::-1].astype(np.float64) + 0.5  # (x, y) pixel centers
            chord = xy[-1] - xy[0]
            length = math.hypot(chord[0], chord[1])
            if length < min_len:
                continue
            u = _fit_direction(xy)
            proj = (xy - xy.mean(axis=0)) @ u
            if length > ROI_LENGTH_CAP:
                keep = np.abs(proj - (proj.max() + proj.min()) / 2) <= ROI_LENGTH_CAP / 2
                xy = xy[keep]
                sub = sub[keep]
                u = _fit_direction(xy)
                proj = (xy - xy.mean(axis=0)) @ u

            angle = math.degrees(math.atan2(u[1], u[0])) % 360.0
            if _angle_excluded(angle, params.angle_exclusion_deg):
                continue

            center = xy.mean(axis=0)
            half_len = (proj.max() - proj.min()) / 2.0
            if 2 * half_len < min_len:
                continue
            nvec = np.array([-u[1], u[0]])

            corners = np.array([
                center + s * half_len * u + t * half_across * nvec
                for s in (-1, 1) for t in (-1, 1)
            ])
            bx0 = int(math.floor(corners[:, 0].min()))
            by0 = int(math.floor(corners[:, 1].min()))
            bx1 = int(math.ceil(corners[:, 0].max()))
            by1 = int(math.ceil(corners[:, 1].max()))
            if bx0 < 0 or by0 < 0 or bx1 > w or by1 > h:
                continue
            if not valid[by0:by1, bx0:bx1].all():
                continue

            # flank statistics over the outer tails of the analysis band
            ys, xs = np.mgrid[by0:by1, bx0:bx1]
            px = xs + 0.5 - center[0]
            py = ys + 0.5 - center[1]
            dd = px * nvec[0] + py * nvec[1]
            tt = px * u[0] + py * u[1]
            band_half = params.esfw + 0.5
            in_band = (np.abs(tt) <= half_len) & (np.abs(dd) <= band_half)
            tail_lo_d = (1.0 - TAIL_FRACTION) * band_half
            tail_a = in_band & (dd >= tail_lo_d)
            tail_b = in_band & (dd <= -tail_lo_d)
            if tail_a.sum() < 8 or tail_b.sum() < 8:
                continue
            vals_a = lum[ys[tail_a], xs[tail_a]]
            vals_b = lum[ys[tail_b], xs[tail_b]]
            mean_a, mean_b = float(vals_a.mean()), float(vals_b.mean())
            contrast = abs(mean_a - mean_b)
            if not (params.contrast_min <= contrast <= params.contrast_max):
                continue
            if vals_a.std() > params.st or vals_b.std() > params.st:
                continue

            # isolation: no edge pixel of another chain inside the analysis
            # window dilated by esfw
            sx0 = max(bx0 - params.esfw, 0)
            sy0 = max(by0 - params.esfw, 0)
            sx1 = min(bx1 + params.esfw, w)
            sy1 = min(by1 + params.esfw, h)
            fsel = (
                (edge_cols >= sx0) & (edge_cols < sx1)
                & (edge_rows >= sy0) & (edge_rows < sy1)
            )
            fcols, frows = edge_cols[fsel], edge_rows[fsel]
            foreign = chain_id[frows, fcols] != ci
            if foreign.any():
                fx = fcols[foreign] + 0.5 - center[0]
                fy = frows[foreign] + 0.5 - center[1]
                fd = fx * nvec[0] + fy * nvec[1]
                ft = fx * u[0] + fy * u[1]
                near = (np.abs(fd) <= 2 * params.esfw + 0.5) & \
                       (np.abs(ft) <= half_len + params.esfw)
                if near.any():
                    continue

            candidates.append(RoiCandidate(
                frame_id=frame.id,
                bbox=(bx0, by0, bx1 - bx0, by1 - by0),
                centroid=(float(center[0]), float(center[1])),
                edge_angle_deg=float(angle),
                contrast=contrast,
                orientation_class=orientation_of(angle),
                patch=lum[by0:by1, bx0:bx1].copy(),
            ))
    return candidates
