"""Image loading and luminance conversion.

Frames are read from disk (PNG or JPEG), converted to a single normalized
luminance channel and handed to the rest of the pipeline in deterministic
(lexicographic) order. Measurements run on the luminance values exactly as
stored, so gamma-encoded sources are measured in the encoded domain.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DatasetError, EmptyDatasetError

MIN_FRAME_SIDE = 64

# Rec. 601 luma weights for R, G, B.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class Frame:
    """One input image reduced to normalized luminance.

    luminance is a (height, width) float64 array in [0, 1]; id is the path of
    the source file relative to the dataset root (or a synthetic name).
    """

    id: str
    width: int
    height: int
    luminance: np.ndarray

    def __post_init__(self):
        h, w = self.luminance.shape
        if (w, h) != (self.width, self.height):
            raise ValueError(f"frame {self.id}: shape mismatch")
        if self.width < MIN_FRAME_SIDE or self.height < MIN_FRAME_SIDE:
            raise ValueError(
                f"frame {self.id}: {self.width}x{self.height} below minimum "
                f"{MIN_FRAME_SIDE}px side for edge extraction"
            )


@dataclass
class SkipReport:
    """Files that matched the pattern but were not measured, with reasons."""

    skipped: list = field(default_factory=list)

    def add(self, path: str, reason: str):
        self.skipped.append((path, reason))
        warnings.warn(f"skipping {path}: {reason}")


def to_luminance(pixels: np.ndarray, bit_depth: int) -> np.ndarray:
    """Convert an integer image array to normalized luminance in [0, 1].

    RGB input is reduced with Rec. 601 weights; single-channel input is
    scaled by the full-scale value for the given bit depth.
    """
    scale = float(2**bit_depth - 1)
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 2:
        return arr / scale
    if arr.ndim == 3 and arr.shape[2] >= 3:
        r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
        w = LUMA_WEIGHTS
        return (w[0] * r + w[1] * g + w[2] * b) / scale
    raise ValueError(f"unsupported pixel array shape {arr.shape}")


def _decode(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        img.load()
        if img.mode in ("I;16", "I;16B", "I;16L", "I"):
            return to_luminance(np.asarray(img, dtype=np.uint32), 16)
        if img.mode == "L":
            return to_luminance(np.asarray(img), 8)
        rgb = img.convert("RGB")
        return to_luminance(np.asarray(rgb), 8)


def list_images(root: str | Path, pattern: str = "*.png") -> list[Path]:
    """Enumerate files matching pattern under root, sorted by relative path."""
    rootp = Path(root)
    if not rootp.is_dir():
        raise DatasetError(f"input directory not found: {rootp}")
    paths = sorted(rootp.glob(pattern), key=lambda p: p.relative_to(rootp).as_posix())
    if not paths:
        raise EmptyDatasetError(f"no files match pattern {pattern!r} under {rootp}")
    return paths


def load_frame(path: Path, frame_id: str) -> Frame:
    lum = _decode(path)
    h, w = lum.shape
    return Frame(id=frame_id, width=w, height=h, luminance=lum)


def load_dataset(root: str | Path, pattern: str = "*.png", limit: int | None = None,
                 report: SkipReport | None = None):
    """Yield frames for every decodable image matching pattern, in id order.

    Undecodable or undersized files are skipped (recorded in report when
    given). limit caps the number of frames yielded, applied after ordering.
    """
    rootp = Path(root)
    paths = list_images(rootp, pattern)
    if limit is not None:
        paths = paths[:limit]
    for path in paths:
        rel = path.relative_to(rootp).as_posix()
        if path.suffix.lower() not in (".png", ".jpg", ".jpeg"):
            if report is not None:
                report.add(rel, "unsupported format")
            continue
        try:
            yield load_frame(path, rel)
        except (OSError, ValueError) as exc:
            if report is not None:
                report.add(rel, str(exc))
