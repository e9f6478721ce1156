"""Grouping of per-edge measurements into per-segment statistics.

Measurements are grouped by (radial segment, orientation class). The
headline figure of each group is the mean of the individual MTF50 values;
edges whose curve never crosses 0.5 are excluded from that mean and tallied
separately. The pointwise mean curve is also kept for plotting. Input order
never affects the result: measurements are put into a canonical order before
any floating-point reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radial import RadialSegmentation, classify_location

SUFFICIENCY_MIN_VALID = 20  # need strictly more valid edges than this


@dataclass
class SegmentStats:
    segment: int
    orientation: str
    count_valid: int
    count_invalid: int
    count_no_crossing: int
    mean_mtf50: float | None
    mtf50_stddev: float | None
    mean_curve: np.ndarray | None
    mean_curve_mtf50: float | None


def _mean_curve_mtf50(freqs: np.ndarray, values: np.ndarray) -> float | None:
    below = np.nonzero(values < 0.5)[0]
    if below.size == 0:
        return None
    i = int(below[0])
    if i == 0:
        return float(freqs[0])
    f0, f1, v0, v1 = freqs[i - 1], freqs[i], values[i - 1], values[i]
    return float(f0 + (0.5 - v0) * (f1 - f0) / (v1 - v0))


def accumulate(measurements: list, seg: RadialSegmentation,
               orientations: tuple = ("horizontal", "vertical")) -> list:
    """Reduce (candidate, curve, verdict) triples to SegmentStats.

    Only measurements that produced a curve participate; valid ones
    contribute to the means, invalid ones only to count_invalid. Groups are
    emitted for every (segment, orientation) pair in the requested
    orientations, including empty ones.
    """
    ordered = sorted(
        enumerate(measurements),
        key=lambda kv: (kv[1][0].frame_id, kv[0]),
    )
    buckets = {}
    for _, (cand, curve, verdict) in ordered:
        if curve is None:
            continue
        key = (classify_location(cand.centroid, seg), cand.orientation_class)
        buckets.setdefault(key, []).append((curve, verdict))

    stats = []
    for segment in range(seg.n_segments):
        for orientation in orientations:
            entries = buckets.get((segment, orientation), [])
            valid = [c for c, v in entries if v.status == "valid"]
            count_invalid = sum(1 for _, v in entries if v.status == "invalid")
            mtf50s = [c.mtf50 for c in valid if c.mtf50 is not None]
            no_crossing = len(valid) - len(mtf50s)

            if valid:
                mean_curve = np.mean([c.values for c in valid], axis=0)
                freqs = valid[0].frequencies
                curve_mtf50 = _mean_curve_mtf50(freqs, mean_curve)
            else:
                mean_curve = None
                curve_mtf50 = None
            if mtf50s:
                mean_mtf50 = float(np.mean(mtf50s))
                mtf50_stddev = float(np.std(mtf50s))
            else:
                mean_mtf50 = None
                mtf50_stddev = None

            stats.append(SegmentStats(
                segment=segment,
                orientation=orientation,
                count_valid=len(valid),
                count_invalid=count_invalid,
                count_no_crossing=no_crossing,
                mean_mtf50=mean_mtf50,
                mtf50_stddev=mtf50_stddev,
                mean_curve=mean_curve,
                mean_curve_mtf50=curve_mtf50,
            ))
    return stats


def sufficiency_check(stats: list) -> list:
    """Warning strings for groups without enough valid edges to trust."""
    warnings = []
    for s in stats:
        if s.count_valid <= SUFFICIENCY_MIN_VALID:
            warnings.append(
                f"segment {s.segment} ({s.orientation}): {s.count_valid} valid "
                f"edges (<= {SUFFICIENCY_MIN_VALID}), statistics may be unreliable"
            )
    return warnings
