import statistics
from dataclasses import dataclass

import numpy as np
import pytest

from scenesfr.aggregate import (
    SUFFICIENCY_MIN_VALID, SegmentStats, accumulate, sufficiency_check,
)
from scenesfr.radial import RadialSegmentation
from scenesfr.sfr_core import FREQUENCY_GRID, SfrCurve
from scenesfr.validate import Verdict, failure_verdict


@dataclass
class FakeCand:
    frame_id: str
    centroid: tuple
    orientation_class: str = "horizontal"


SEG = RadialSegmentation(center=(0.0, 0.0), r_e=90.0,
                         boundaries=np.array([30.0, 60.0, 90.0]), n_segments=3)

VALID = Verdict("valid", "none", 1.0, None)
INVALID = Verdict("invalid", "overshoot", 1.6, None)


def curve_with_mtf50(m):
    """Linear curve whose downward 0.5 crossing lands exactly at m."""
    v = np.maximum(1.0 - 0.5 * FREQUENCY_GRID / m, 0.0)
    c = SfrCurve(FREQUENCY_GRID.copy(), v, mtf50=m)
    return c


def triple(frame_id, radius, m, verdict=VALID, orientation="horizontal"):
    cand = FakeCand(frame_id, (radius, 0.0), orientation)
    return (cand, curve_with_mtf50(m), verdict)


def test_mean_and_population_stddev():
    values = [0.21, 0.25, 0.19, 0.30, 0.22]
    ms = [triple(f"f{i}", 10.0, m) for i, m in enumerate(values)]
    stats = accumulate(ms, SEG, orientations=("horizontal",))
    s0 = stats[0]
    assert s0.segment == 0 and s0.orientation == "horizontal"
    assert s0.count_valid == 5
    assert s0.mean_mtf50 == pytest.approx(statistics.fmean(values))
    assert s0.mtf50_stddev == pytest.approx(statistics.pstdev(values))


def test_groups_cover_every_segment_orientation_pair():
    ms = [triple("a", 10.0, 0.2)]
    stats = accumulate(ms, SEG, orientations=("horizontal", "vertical"))
    assert len(stats) == 6
    keys = [(s.segment, s.orientation) for s in stats]
    assert keys == [(0, "horizontal"), (0, "vertical"),
                    (1, "horizontal"), (1, "vertical"),
                    (2, "horizontal"), (2, "vertical")]
    empty = [s for s in stats if (s.segment, s.orientation) != (0, "horizontal")]
    for s in empty:
        assert s.count_valid == 0 and s.count_invalid == 0
        assert s.mean_mtf50 is None and s.mean_curve is None


def test_segment_routing_by_radius():
    ms = [
        triple("a", 10.0, 0.20),
        triple("b", 40.0, 0.30),
        triple("c", 80.0, 0.10),
    ]
    stats = accumulate(ms, SEG, orientations=("horizontal",))
    assert [s.count_valid for s in stats] == [1, 1, 1]
    assert stats[0].mean_mtf50 == pytest.approx(0.20)
    assert stats[1].mean_mtf50 == pytest.approx(0.30)
    assert stats[2].mean_mtf50 == pytest.approx(0.10)


def test_invalid_curves_counted_not_averaged():
    ms = [
        triple("a", 10.0, 0.20),
        triple("b", 10.0, 0.90, verdict=INVALID),
    ]
    s0 = accumulate(ms, SEG, orientations=("horizontal",))[0]
    assert s0.count_valid == 1
    assert s0.count_invalid == 1
    assert s0.mean_mtf50 == pytest.approx(0.20)


def test_measurement_errors_not_counted_in_groups():
    cand = FakeCand("a", (10.0, 0.0))
    ms = [(cand, None, failure_verdict("edge_incoherent")),
          triple("b", 10.0, 0.25)]
    s0 = accumulate(ms, SEG, orientations=("horizontal",))[0]
    assert s0.count_valid == 1 and s0.count_invalid == 0


def test_no_crossing_tally():
    flat = SfrCurve(FREQUENCY_GRID.copy(),
                    np.full(FREQUENCY_GRID.size, 0.9), mtf50=None)
    ms = [
        (FakeCand("a", (10.0, 0.0)), flat, VALID),
        triple("b", 10.0, 0.25),
    ]
    s0 = accumulate(ms, SEG, orientations=("horizontal",))[0]
    assert s0.count_valid == 2
    assert s0.count_no_crossing == 1
    assert s0.mean_mtf50 == pytest.approx(0.25)  # absent values excluded


def test_mean_curve_and_its_mtf50():
    ms = [triple("a", 10.0, 0.2), triple("b", 10.0, 0.4)]
    s0 = accumulate(ms, SEG, orientations=("horizontal",))[0]
    expect = (ms[0][1].values + ms[1][1].values) / 2
    np.testing.assert_allclose(s0.mean_curve, expect)
    # pointwise-mean crossing differs from the mean of individual crossings
    assert s0.mean_curve_mtf50 is not None
    assert s0.mean_mtf50 == pytest.approx(0.3)
    assert s0.mean_curve_mtf50 != pytest.approx(s0.mean_mtf50, abs=1e-4)


def test_permutation_invariance_is_bitwise(rng):
    ms = [triple(f"f{i:03d}", float(rng.uniform(0, 89)), float(rng.uniform(0.1, 0.4)),
                 VALID if rng.uniform() < 0.8 else INVALID)
          for i in range(40)]
    base = accumulate(ms, SEG, orientations=("horizontal",))
    shuffled = list(ms)
    rng.shuffle(shuffled)
    redo = accumulate(shuffled, SEG, orientations=("horizontal",))
    for a, b in zip(base, redo):
        assert a.count_valid == b.count_valid
        assert a.mean_mtf50 == b.mean_mtf50          # bit-identical floats
        assert a.mtf50_stddev == b.mtf50_stddev
        if a.mean_curve is None:
            assert b.mean_curve is None
        else:
            np.testing.assert_array_equal(a.mean_curve, b.mean_curve)


def test_counts_conserved(rng):
    ms = []
    n_valid = n_invalid = 0
    for i in range(60):
        ok = rng.uniform() < 0.7
        n_valid += ok
        n_invalid += not ok
        ms.append(triple(f"f{i}", float(rng.uniform(0, 89)),
                         0.2, VALID if ok else INVALID))
    stats = accumulate(ms, SEG, orientations=("horizontal",))
    assert sum(s.count_valid for s in stats) == n_valid
    assert sum(s.count_invalid for s in stats) == n_invalid


def test_single_entry_stddev_zero():
    s0 = accumulate([triple("a", 5.0, 0.2)], SEG, orientations=("horizontal",))[0]
    assert s0.mtf50_stddev == 0.0


def test_sufficiency_boundary():
    def stats_with(n):
        return [SegmentStats(0, "horizontal", n, 0, 0, 0.2, 0.0, None, None)]

    assert sufficiency_check(stats_with(SUFFICIENCY_MIN_VALID)) != []
    assert sufficiency_check(stats_with(SUFFICIENCY_MIN_VALID + 1)) == []
    msg = sufficiency_check(stats_with(3))[0]
    assert "segment 0" in msg and "3 valid" in msg
