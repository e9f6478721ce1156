"""Synthetic slanted-edge generation with known ground truth.

Edges are rendered from the analytic profile contrast * CDF(d / sigma) +
offset, where d is the signed distance to an ideal edge line through the
patch center and sigma is the optical blur. Rendering supersamples each
pixel 8x in area and box-averages, which models the square pixel aperture.
The resulting frame therefore has the closed-form transfer function

    MTF(f) = exp(-2 pi^2 sigma^2 f^2) * |sinc(f)|

(before any sharpening), which the rest of the test suite uses as its
independent reference. Optional seeded Gaussian noise and unsharp-mask
sharpening produce the noisy and oversharpened cases needed to exercise
curve triage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.optimize import brentq
from scipy.special import ndtr

from .ingest import Frame
from .mask import RegionMask, rasterize

SUPERSAMPLE = 8
UNSHARP_SIGMA = 1.0   # radius of the unsharp-mask blur, px
_RENDER_BLOCK = 32    # output rows rendered per block to bound memory


@dataclass
class SynthEdgeSpec:
    """Parameters of one rendered edge patch.

    angle_deg is measured from the vertical axis, so small angles give
    near-vertical edges (horizontal SFR). The dark and light levels are
    placed symmetrically around 0.5: offset = (1 - contrast) / 2.
    """

    width: int = 128
    height: int = 128
    angle_deg: float = 5.0
    contrast: float = 0.5
    blur_sigma: float = 1.0
    noise_sigma: float = 0.0
    sharpen_gain: float = 0.0
    seed: int = 0

    @property
    def offset(self) -> float:
        return (1.0 - self.contrast) / 2.0


def render_edge(spec: SynthEdgeSpec, supersample: int = SUPERSAMPLE) -> np.ndarray:
    """Render the edge patch as a (height, width) float array in [0, 1]."""
    w, h = spec.width, spec.height
    a = math.radians(spec.angle_deg)
    cos_a, sin_a = math.cos(a), math.sin(a)
    cx, cy = w / 2.0, h / 2.0
    xs = (np.arange(w * supersample) + 0.5) / supersample - cx
    img = np.empty((h, w), dtype=np.float64)
    for y0 in range(0, h, _RENDER_BLOCK):
        y1 = min(y0 + _RENDER_BLOCK, h)
        ys = (np.arange(y0 * supersample, y1 * supersample) + 0.5) / supersample - cy
        d = xs[None, :] * cos_a - ys[:, None] * sin_a
        if spec.blur_sigma > 0:
            prof = ndtr(d / spec.blur_sigma)
        else:
            prof = (d > 0).astype(np.float64)
            prof[d == 0] = 0.5
        prof = spec.offset + spec.contrast * prof
        block = prof.reshape(y1 - y0, supersample, w, supersample).mean(axis=(1, 3))
        img[y0:y1] = block

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        img = img + rng.normal(0.0, spec.noise_sigma, img.shape)
    if spec.sharpen_gain > 0:
        blurred = gaussian_filter(img, UNSHARP_SIGMA, mode="nearest")
        img = img + spec.sharpen_gain * (img - blurred)
    return np.clip(img, 0.0, 1.0)


def make_slanted_edge(spec: SynthEdgeSpec, supersample: int = SUPERSAMPLE,
                      name: str = "synth_edge") -> Frame:
    """Render a standalone edge patch as a Frame."""
    img = render_edge(spec, supersample)
    return Frame(id=name, width=spec.width, height=spec.height, luminance=img)


def _rect_separation(a: tuple, b: tuple) -> float:
    """Chebyshev gap between two (x, y, w, h) rectangles; 0 when they touch
    or overlap."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    gap_x = max(bx - (ax + aw), ax - (bx + bw), 0)
    gap_y = max(by - (ay + ah), ay - (by + bh), 0)
    overlap_x = gap_x == 0
    overlap_y = gap_y == 0
    if overlap_x and overlap_y:
        return 0.0
    return float(max(gap_x, gap_y))


def make_scene(edges: list, width: int, height: int,
               mask: RegionMask | None = None, background: float = 0.5,
               min_separation: int = 10, name: str = "synth_scene",
               supersample: int = SUPERSAMPLE) -> Frame:
    """Composite edge patches onto a flat background.

    edges is a list of ((x, y), SynthEdgeSpec) placements with (x, y) the
    top-left corner of each patch. Placements must stay inside the frame and
    keep at least min_separation px of Chebyshev clearance from each other;
    violations raise ValueError. When a mask is given, pixels outside its
    valid region are painted with a hard checker texture so downstream
    masking has realistic clutter to exclude.
    """
    img = np.full((height, width), float(background), dtype=np.float64)
    rects = []
    for (x, y), spec in edges:
        x, y = int(x), int(y)
        if x < 0 or y < 0 or x + spec.width > width or y + spec.height > height:
            raise ValueError(
                f"patch at ({x}, {y}) size {spec.width}x{spec.height} "
                f"falls outside the {width}x{height} frame"
            )
        rect = (x, y, spec.width, spec.height)
        for other in rects:
            if _rect_separation(rect, other) < min_separation:
                raise ValueError(
                    f"patch at ({x}, {y}) is closer than {min_separation} px "
                    f"to another patch"
                )
        rects.append(rect)
        img[y:y + spec.height, x:x + spec.width] = render_edge(spec, supersample)

    if mask is not None:
        vm = rasterize(mask, width, height)
        yy, xx = np.nonzero(~vm.valid)
        img[yy, xx] = np.where(((xx // 16) + (yy // 16)) % 2 == 0, 0.2, 0.8)

    return Frame(id=name, width=width, height=height, luminance=img)


def analytic_mtf(freqs, blur_sigma: float) -> np.ndarray:
    """Ground-truth MTF of a rendered (unsharpened) edge: Gaussian optics
    times the square pixel aperture."""
    f = np.asarray(freqs, dtype=np.float64)
    return np.exp(-2.0 * np.pi**2 * blur_sigma**2 * f**2) * np.abs(np.sinc(f))


def analytic_mtf50(blur_sigma: float) -> float:
    """Frequency where the ground-truth MTF reaches 0.5, in cy/px."""
    return float(brentq(lambda f: analytic_mtf(f, blur_sigma) - 0.5, 1e-9, 0.999999))
