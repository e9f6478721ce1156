"""Adaptive radial segmentation of the measurable field of view.

Edges are grouped into concentric rings around a reference center. The
outermost radius is the largest Euclidean distance from the center to the
periphery of the usable region: the image corners for an unmasked frame, or
the rasterized mask boundary when one is supplied. Ring boundaries divide
that radius into N proportional parts, so the scheme adapts to any image
geometry without per-camera tuning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .mask import RegionMask, ValidityMap

DEFAULT_SEGMENTS = 3


@dataclass
class RadialSegmentation:
    center: tuple          # (x, y) reference center, px
    r_e: float             # outermost radius, px
    boundaries: np.ndarray # increasing outer radii, boundaries[-1] == r_e
    n_segments: int

    def __post_init__(self):
        self.boundaries = np.asarray(self.boundaries, dtype=np.float64)
        if self.n_segments < 2:
            raise ValueError("need at least 2 radial segments")
        if self.boundaries.size != self.n_segments:
            raise ValueError("boundary count disagrees with n_segments")
        if np.any(np.diff(self.boundaries) <= 0):
            raise ValueError("segment boundaries must increase")


def reference_center(vmap: ValidityMap, region: RegionMask | None = None) -> tuple:
    """Geometric reference point: image center, or the valid-area centroid
    when a mask restricts the frame."""
    if region is None:
        return (vmap.width / 2.0, vmap.height / 2.0)
    ys, xs = np.nonzero(vmap.valid)
    if xs.size == 0:
        raise ValueError("validity map has no valid pixels")
    return (float(xs.mean()) + 0.5, float(ys.mean()) + 0.5)


def _boundary_pixels(valid: np.ndarray) -> tuple:
    """Valid pixels with any invalid 8-neighbor; the image border counts as
    adjacent to the outside, so border pixels of the valid set qualify."""
    interior = ndimage.binary_erosion(
        valid, structure=np.ones((3, 3), dtype=bool), border_value=0
    )
    return np.nonzero(valid & ~interior)


def max_radius(center: tuple, vmap: ValidityMap,
               region: RegionMask | None = None) -> float:
    """Largest Euclidean distance from center to the usable-region periphery.

    Unmasked frames use the geometric image corners; masked frames use the
    centers of rasterized mask-boundary pixels.
    """
    cx, cy = center
    if region is None:
        corners_x = np.array([0.0, vmap.width, 0.0, vmap.width])
        corners_y = np.array([0.0, 0.0, vmap.height, vmap.height])
        return float(np.hypot(corners_x - cx, corners_y - cy).max())
    ys, xs = _boundary_pixels(vmap.valid)
    if xs.size == 0:
        raise ValueError("validity map has no valid pixels")
    return float(np.hypot(xs + 0.5 - cx, ys + 0.5 - cy).max())


def segment_radii(r_e: float, n: int = DEFAULT_SEGMENTS) -> np.ndarray:
    """Proportional ring boundaries r_e * (k+1)/n for k = 0..n-1."""
    if n < 2:
        raise ValueError("need at least 2 radial segments")
    if r_e <= 0:
        raise ValueError("r_e must be positive")
    return r_e * (np.arange(1, n + 1, dtype=np.float64) / n)


def segment_radii_from_ratios(r_e: float, ratios) -> np.ndarray:
    """Ring boundaries from explicit ratios of r_e; ratios must be strictly
    increasing, inside (0, 1] and end at exactly 1."""
    r = np.asarray(ratios, dtype=np.float64)
    if r.size < 2:
        raise ValueError("need at least 2 segment ratios")
    if np.any(r <= 0) or np.any(np.diff(r) <= 0) or r[-1] != 1.0:
        raise ValueError("segment ratios must increase within (0, 1] and end at 1.0")
    return r_e * r


def build_segmentation(vmap: ValidityMap, region: RegionMask | None = None,
                       n: int = DEFAULT_SEGMENTS, ratios=None) -> RadialSegmentation:
    center = reference_center(vmap, region)
    r_e = max_radius(center, vmap, region)
    if ratios is not None:
        bounds = segment_radii_from_ratios(r_e, ratios)
    else:
        bounds = segment_radii(r_e, n)
    return RadialSegmentation(center=center, r_e=r_e, boundaries=bounds,
                              n_segments=len(bounds))


def classify_location(centroid: tuple, seg: RadialSegmentation) -> int:
    """Segment index for a point: half-open rings [b[k-1], b[k]), except that
    a distance of exactly r_e belongs to the last ring."""
    d = float(np.hypot(centroid[0] - seg.center[0], centroid[1] - seg.center[1]))
    if d > seg.r_e:
        raise ValueError(
            f"point at radius {d:.3f} lies outside the segmentation (r_e={seg.r_e:.3f})"
        )
    k = int(np.searchsorted(seg.boundaries, d, side="right"))
    return min(k, seg.n_segments - 1)
