"""Region-of-interest masks for frames with occluded or unusable areas.

A mask is a set of polygons in reference image coordinates; pixels whose
centers fall inside the polygon set (even-odd fill rule) are valid for
measurement. Masked pixels are never painted or altered: validity is carried
alongside the pixels so edge detection never sees a synthetic step at the
mask border.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import MaskError
from .ingest import Frame

MIN_COVER_FRACTION = 0.01
# Tolerance on the x/y scale ratio when a mask is applied to a frame size
# other than its reference size.
SCALE_RATIO_TOL = 0.01


@dataclass
class ValidityMap:
    """Per-pixel validity for one frame size.

    valid is a (height, width) bool array; margin records the exclusion
    dilation already applied (0 for a raw rasterization).
    """

    width: int
    height: int
    valid: np.ndarray
    margin: int = 0

    def __post_init__(self):
        if self.valid.shape != (self.height, self.width):
            raise ValueError("validity array shape mismatch")
        if self.valid.dtype != np.bool_:
            self.valid = self.valid.astype(bool)

    @classmethod
    def full(cls, width: int, height: int) -> "ValidityMap":
        return cls(width, height, np.ones((height, width), dtype=bool))


def _polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass
class RegionMask:
    """Polygonal valid-region definition tied to a reference image size."""

    polygons: list
    reference_size: tuple

    def __post_init__(self):
        rw, rh = self.reference_size
        if rw <= 0 or rh <= 0:
            raise MaskError("reference_size must be positive")
        if not self.polygons:
            raise MaskError("mask defines no polygons")
        cleaned = []
        for i, poly in enumerate(self.polygons):
            v = np.asarray(poly, dtype=np.float64)
            if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
                raise MaskError(f"polygon {i}: need at least 3 (x, y) vertices")
            if np.any(v[:, 0] < 0) or np.any(v[:, 0] > rw) or \
               np.any(v[:, 1] < 0) or np.any(v[:, 1] > rh):
                raise MaskError(f"polygon {i}: vertex outside reference bounds")
            if _polygon_area(v) == 0.0:
                raise MaskError(f"polygon {i}: zero area")
            cleaned.append(v)
        self.polygons = cleaned
        self.reference_size = (int(rw), int(rh))

    @classmethod
    def from_json(cls, source: str | Path) -> "RegionMask":
        try:
            data = json.loads(Path(source).read_text())
        except OSError as exc:
            raise MaskError(f"cannot read mask file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise MaskError(f"mask file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RegionMask":
        if not isinstance(data, dict) or "polygons" not in data or \
                "reference_size" not in data:
            raise MaskError("mask JSON must define 'reference_size' and 'polygons'")
        ref = data["reference_size"]
        if not (isinstance(ref, (list, tuple)) and len(ref) == 2):
            raise MaskError("reference_size must be [width, height]")
        return cls(polygons=list(data["polygons"]),
                   reference_size=(ref[0], ref[1]))

    def scaled_polygons(self, width: int, height: int) -> list:
        """Polygon vertices scaled from reference_size to (width, height)."""
        rw, rh = self.reference_size
        sx, sy = width / rw, height / rh
        if abs(sx - sy) > SCALE_RATIO_TOL * max(sx, sy):
            raise MaskError(
                f"frame {width}x{height} is not proportional to mask "
                f"reference {rw}x{rh}"
            )
        return [v * np.array([sx, sy]) for v in self.polygons]


def rasterize(region: RegionMask, width: int, height: int) -> ValidityMap:
    """Rasterize a mask with the even-odd rule sampled at pixel centers.

    A pixel (i, j) is valid when its center (j + 0.5, i + 0.5) lies inside an
    odd number of polygon boundary crossings. Scan-line toggles are
    accumulated per edge, so cost is O(edges * rows + pixels).
    """
    polys = region.scaled_polygons(width, height)
    flips = np.zeros((height, width + 1), dtype=np.int64)
    yc = np.arange(height) + 0.5
    for v in polys:
        x1, y1 = v[:, 0], v[:, 1]
        x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
        for k in range(len(v)):
            ya, yb = y1[k], y2[k]
            if ya == yb:
                continue
            lo, hi = (ya, yb) if ya < yb else (yb, ya)
            rows = np.nonzero((yc >= lo) & (yc < hi))[0]
            if rows.size == 0:
                continue
            t = (yc[rows] - ya) / (yb - ya)
            xc = x1[k] + t * (x2[k] - x1[k])
            # toggle pixels whose center lies strictly right of the crossing
            start = np.clip(np.floor(xc - 0.5).astype(np.int64) + 1, 0, width)
            np.add.at(flips, (rows, start), 1)
    valid = (np.cumsum(flips[:, :width], axis=1) % 2).astype(bool)
    if valid.mean() < MIN_COVER_FRACTION:
        raise MaskError(
            f"mask interior covers {valid.mean():.4%} of the frame, "
            f"below the {MIN_COVER_FRACTION:.0%} minimum"
        )
    return ValidityMap(width=width, height=height, valid=valid)


def dilate_exclusion(vmap: ValidityMap, margin: int) -> ValidityMap:
    """Shrink the valid region so it keeps a Chebyshev clearance of margin
    pixels from every invalid pixel of the input. The image border is not
    treated as invalid."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if margin == 0 or vmap.valid.all():
        return ValidityMap(vmap.width, vmap.height, vmap.valid.copy(), margin)
    eroded = ndimage.minimum_filter(
        vmap.valid.astype(np.uint8), size=2 * margin + 1,
        mode="constant", cval=1,
    ).astype(bool)
    return ValidityMap(vmap.width, vmap.height, eroded, margin)


def valid_bbox(vmap: ValidityMap) -> tuple:
    """Tight (x, y, w, h) bounding box of the valid region."""
    rows = np.any(vmap.valid, axis=1)
    cols = np.any(vmap.valid, axis=0)
    if not rows.any():
        raise MaskError("validity map has no valid pixels")
    y0, y1 = np.nonzero(rows)[0][[0, -1]]
    x0, x1 = np.nonzero(cols)[0][[0, -1]]
    return int(x0), int(y0), int(x1 - x0 + 1), int(y1 - y0 + 1)


def crop_to_mask(frame: Frame, vmap: ValidityMap) -> tuple:
    """Crop a frame to the bounding box of the valid region.

    Returns (cropped_frame, (offset_x, offset_y)); offsets map cropped
    coordinates back to the original frame.
    """
    if (vmap.width, vmap.height) != (frame.width, frame.height):
        raise MaskError("validity map size does not match frame")
    x0, y0, w, h = valid_bbox(vmap)
    lum = frame.luminance[y0:y0 + h, x0:x0 + w]
    cropped = Frame(id=frame.id, width=w, height=h, luminance=lum)
    return cropped, (x0, y0)
