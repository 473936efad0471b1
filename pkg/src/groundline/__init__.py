"""Ground filtering for scan-line organized airborne point clouds.

The pipeline splits each scan line into homogeneous segments at slope
discontinuities, merges segments into regions by proximity, elevation
and slope similarity, then grows a ground classification from per-tile
low-point seeds against an iteratively refined minimum-elevation raster.
"""

from .dtm import DtmGrid, build_dtm, interpolate, interpolate_many, write_esri_ascii
from .errors import (
    DegenerateGeometryError,
    DuplicatePointError,
    ParseError,
    SeedSelectionError,
)
from .evaluate import (
    ErrorReport,
    SweepResult,
    error_report,
    evaluate_run,
    format_error_report,
    overlay_compare,
    sensitivity_sweep,
    sweep_to_csv,
)
from .filtering import (
    FilterResult,
    FilterState,
    read_labels,
    run_filter,
    write_labels,
)
from .ingest import (
    Label,
    PointCloud,
    PointRecord,
    ScanLine,
    extract_scan_lines,
    parse_las,
    parse_points,
    parse_xyzl,
    prepare_scan_lines,
    remove_backscan,
)
from .noise import NoiseEstimate, estimate_noise, estimate_sigma_z, suggest_tdslope
from .params import FilterParams
from .regions import (
    Region,
    SimilarityGraph,
    SimilarityMeasures,
    build_similarity_graph,
    extract_regions,
    segment_similarity,
)
from .segments import LineSegment, dslope, dslope_profile, segment_scan_lines, split_segments
from .synth import (
    SceneSpec,
    SyntheticScene,
    generate_scene,
    read_scene_spec,
    standard_town,
    write_scene_spec,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Label",
    "FilterParams",
    "PointCloud",
    "PointRecord",
    "ScanLine",
    "LineSegment",
    "Region",
    "SimilarityGraph",
    "SimilarityMeasures",
    "DtmGrid",
    "FilterResult",
    "FilterState",
    "NoiseEstimate",
    "ErrorReport",
    "SweepResult",
    "SceneSpec",
    "SyntheticScene",
    "ParseError",
    "DuplicatePointError",
    "DegenerateGeometryError",
    "SeedSelectionError",
    "parse_xyzl",
    "parse_las",
    "parse_points",
    "extract_scan_lines",
    "remove_backscan",
    "prepare_scan_lines",
    "dslope",
    "dslope_profile",
    "split_segments",
    "segment_scan_lines",
    "segment_similarity",
    "build_similarity_graph",
    "extract_regions",
    "build_dtm",
    "interpolate",
    "interpolate_many",
    "write_esri_ascii",
    "run_filter",
    "write_labels",
    "read_labels",
    "estimate_sigma_z",
    "estimate_noise",
    "suggest_tdslope",
    "error_report",
    "format_error_report",
    "evaluate_run",
    "overlay_compare",
    "sensitivity_sweep",
    "sweep_to_csv",
    "generate_scene",
    "standard_town",
    "read_scene_spec",
    "write_scene_spec",
]
