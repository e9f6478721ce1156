"""Natural-scene e-SFR measurement toolkit.

Measures camera sharpness (SFR / MTF50) from slanted edges found in
ordinary footage instead of test charts, with polygon region masking,
radial segmentation and aggregate reporting.
"""

__version__ = "0.1.0"

from .errors import DatasetError, EmptyDatasetError, MaskError, MeasurementError
from .ingest import Frame, load_dataset, load_frame
from .mask import RegionMask, ValidityMap, rasterize
from .radial import RadialSegmentation, build_segmentation, classify_location
from .roi_detect import SelectionParams, RoiCandidate, detect_edges, extract_candidates
from .sfr_core import FREQUENCY_GRID, SfrCurve, compute_sfr, fit_edge, measure_patch, mtf50
from .synth_oracle import SynthEdgeSpec, analytic_mtf, make_scene, make_slanted_edge
from .validate import Verdict, classify
from .pipeline import Measurement, RunConfig, RunResult, analyze_frames, run_analysis

__all__ = [
    "__version__",
    "DatasetError", "EmptyDatasetError", "MaskError", "MeasurementError",
    "Frame", "load_dataset", "load_frame",
    "RegionMask", "ValidityMap", "rasterize",
    "RadialSegmentation", "build_segmentation", "classify_location",
    "SelectionParams", "RoiCandidate", "detect_edges", "extract_candidates",
    "FREQUENCY_GRID", "SfrCurve", "compute_sfr", "fit_edge", "measure_patch", "mtf50",
    "SynthEdgeSpec", "analytic_mtf", "make_scene", "make_slanted_edge",
    "Verdict", "classify",
    "Measurement", "RunConfig", "RunResult",
    "analyze_frames", "run_analysis",
]
