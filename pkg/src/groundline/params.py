"""Filter parameter bundle with the published defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass(frozen=True)
class FilterParams:
    """Thresholds and sizes used across segmentation, merging and labeling.

    Attributes:
        t_dslope: slope-difference threshold for deleting discontinuity
            points inside a scan line (unitless slope change).
        t_dx: maximum horizontal point-pair distance (m) for two segments
            to be considered neighbors.
        t_dh: maximum minimum height difference (m) between two segments.
        t_theta_deg: maximum slope-angle difference (degrees).
        h1: seed tolerance (m) above the per-tile lowest segment.
        h2: relaxed height tolerance (m) against the interpolated terrain
            model during progressive labeling.
        min_seg_points: segments with fewer points are discarded.
        min_seg_length: segments shorter than this (m) are discarded.
        cell_size: terrain raster cell size (m).
        seed_tile: seed-selection tile edge length (m); should exceed the
            largest building footprint.
        h_high: segments at least this far (m) above the tile minimum are
            seeded as non-ground.
        max_iter: upper bound on progressive labeling iterations.
    """

    t_dslope: float = 0.5
    t_dx: float = 1.0
    t_dh: float = 0.5
    t_theta_deg: float = 30.0
    h1: float = 0.5
    h2: float = 2.0
    min_seg_points: int = 4
    min_seg_length: float = 1.0
    cell_size: float = 2.0
    seed_tile: float = 40.0
    h_high: float = 3.0
    max_iter: int = 20

    def __post_init__(self):
        positive = (
            "t_dslope", "t_dx", "t_dh", "t_theta_deg", "h1", "h2",
            "min_seg_length", "cell_size", "seed_tile", "h_high",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.min_seg_points < 1:
            raise ValueError(f"min_seg_points must be >= 1, got {self.min_seg_points!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter!r}")

    def replace(self, **overrides) -> "FilterParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(overrides)
        return FilterParams(**values)
