"""Triage of measured SFR curves.

Natural-scene edges carry no guarantee of clean modulation, so every curve
is screened before it may contribute to statistics. Two failure signatures
are rejected: oversharpening (a local maximum at or above the overshoot
limit) and a raised noise floor (a local minimum above the floor limit at
frequencies past the noise-check start). Extrema are taken over interior
grid points; flat plateaus count once, at their midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .sfr_core import SfrCurve

OVERSHOOT_LIMIT = 1.4
NOISE_FLOOR_LIMIT = 0.4
NOISE_FLOOR_MIN_FREQ = 0.25

REASONS = ("none", "overshoot", "noise_floor", "edge_incoherent", "phase_coverage")


@dataclass
class Verdict:
    status: str                  # 'valid' | 'invalid'
    reason: str                  # one of REASONS
    peak_value: float
    worst_minimum: float | None  # highest local-minimum value in the checked band

    def __post_init__(self):
        if self.status not in ("valid", "invalid"):
            raise ValueError(f"bad status {self.status!r}")
        if self.reason not in REASONS:
            raise ValueError(f"bad reason {self.reason!r}")


def failure_verdict(reason: str) -> Verdict:
    """Verdict for a measurement that produced no curve at all."""
    return Verdict(status="invalid", reason=reason, peak_value=1.0, worst_minimum=None)


def classify(curve: SfrCurve, overshoot_limit: float = OVERSHOOT_LIMIT,
             noise_floor_limit: float = NOISE_FLOOR_LIMIT,
             noise_floor_min_freq: float = NOISE_FLOOR_MIN_FREQ) -> Verdict:
    """Screen one curve against the overshoot and noise-floor rules."""
    v = np.asarray(curve.values, dtype=np.float64)
    f = np.asarray(curve.frequencies, dtype=np.float64)

    # find_peaks reports flat peaks once, at the middle sample
    maxima, _ = find_peaks(v)
    minima, _ = find_peaks(-v)
    minima = minima[f[minima] >= noise_floor_min_freq]

    peak_value = float(v.max())
    worst_minimum = float(v[minima].max()) if minima.size else None

    if maxima.size and v[maxima].max() >= overshoot_limit:
        return Verdict("invalid", "overshoot", peak_value, worst_minimum)
    if worst_minimum is not None and worst_minimum > noise_floor_limit:
        return Verdict("invalid", "noise_floor", peak_value, worst_minimum)
    return Verdict("valid", "none", peak_value, worst_minimum)
