"""Split scan lines into homogeneous segments at slope discontinuities.

The along-line slope difference (a discrete second derivative of elevation
with respect to horizontal distance) spikes wherever a profile crosses a
wall, a crown of vegetation or a gross error. Points whose slope difference
magnitude exceeds a threshold are deleted, the survivors fall apart into
contiguous runs, and runs that are too short to carry slope information are
discarded as well.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DuplicatePointError
from .ingest import Label, PointCloud, ScanLine
from .params import FilterParams

__all__ = [
    "LineSegment",
    "dslope",
    "dslope_profile",
    "split_segments",
    "drop_short_segments",
    "segment_scan_lines",
]


@dataclass
class LineSegment:
    """Contiguous run of points within one scan line.

    Member coordinate arrays are stored on the segment (ordered by
    ``along``) so similarity measures never have to reach back into the
    cloud. ``label`` is mutable pipeline state.
    """

    seg_id: int
    line_id: int
    point_ids: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray
    along: np.ndarray
    label: Label = Label.UNLABELED

    @property
    def n(self) -> int:
        return self.point_ids.shape[0]

    @property
    def start(self) -> tuple[float, float, float]:
        """First endpoint (x, y, z) in along order."""
        return float(self.xs[0]), float(self.ys[0]), float(self.zs[0])

    @property
    def end(self) -> tuple[float, float, float]:
        """Last endpoint (x, y, z) in along order."""
        return float(self.xs[-1]), float(self.ys[-1]), float(self.zs[-1])

    @property
    def length_m(self) -> float:
        """Horizontal distance between the two endpoints."""
        return float(np.hypot(self.xs[-1] - self.xs[0], self.ys[-1] - self.ys[0]))

    @property
    def z_min(self) -> float:
        return float(self.zs.min())

    @property
    def z_max(self) -> float:
        return float(self.zs.max())


def _xyz(p):
    try:
        return float(p.x), float(p.y), float(p.z)
    except AttributeError:
        x, y, z = p
        return float(x), float(y), float(z)


def dslope(p_prev, p_cur, p_next) -> float:
    """Slope difference at the middle of three consecutive points.

    Each argument is an ``(x, y, z)`` triple or any object with x/y/z
    attributes. The value is the slope from the middle point to the next
    minus the slope from the previous point to the middle, each slope being
    rise over horizontal run.

    Raises:
        DuplicatePointError: if either horizontal spacing is zero.
    """
    x0, y0, z0 = _xyz(p_prev)
    x1, y1, z1 = _xyz(p_cur)
    x2, y2, z2 = _xyz(p_next)
    d01 = float(np.hypot(x1 - x0, y1 - y0))
    d12 = float(np.hypot(x2 - x1, y2 - y1))
    if d01 == 0.0 or d12 == 0.0:
        raise DuplicatePointError(
            "zero horizontal spacing between consecutive points; drop duplicates first"
        )
    return (z2 - z1) / d12 - (z1 - z0) / d01


def dslope_profile(xs: np.ndarray, ys: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Vectorized slope differences for every interior point of a profile.

    Returns an array of length ``n - 2`` (slope difference of points
    ``1 .. n-2``). All consecutive horizontal spacings must be nonzero.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    zs = np.asarray(zs, dtype=np.float64)
    if xs.shape[0] < 3:
        return np.empty(0, dtype=np.float64)
    run = np.hypot(np.diff(xs), np.diff(ys))
    if np.any(run == 0.0):
        raise DuplicatePointError(
            "zero horizontal spacing between consecutive points; drop duplicates first"
        )
    slope = np.diff(zs) / run
    return slope[1:] - slope[:-1]


def _drop_duplicates(ids, xs, ys, zs, along, cloud):
    """Remove later points of zero-horizontal-spacing pairs."""
    keep = np.ones(ids.shape[0], dtype=bool)
    run = np.hypot(np.diff(xs), np.diff(ys))
    dup = run == 0.0
    while np.any(dup):
        # drop the later point of each remaining duplicate pair, then rescan
        first_bad = np.flatnonzero(dup)[0] + 1
        keep_local = np.ones(xs.shape[0], dtype=bool)
        keep_local[first_bad] = False
        if cloud is not None:
            cloud.label[ids[first_bad]] = int(Label.UNCLASSIFIED)
        ids, xs, ys, zs, along = (a[keep_local] for a in (ids, xs, ys, zs, along))
        run = np.hypot(np.diff(xs), np.diff(ys))
        dup = run == 0.0
    del keep
    return ids, xs, ys, zs, along


def split_segments(line: ScanLine, cloud: PointCloud,
                   params: FilterParams) -> list[LineSegment]:
    """Delete slope-discontinuity points and split the line at the holes.

    Interior points whose absolute slope difference exceeds
    ``params.t_dslope`` are deleted and marked Unclassified; the two
    boundary points carry no slope difference and stay with their adjacent
    run. Consecutive duplicate points (zero horizontal spacing) are dropped
    beforehand. Returns the maximal contiguous runs of surviving points in
    along order, with ``seg_id`` numbered from 0 within this line.

    Degenerate lines (fewer than three points) yield no segments.
    """
    if line.degenerate:
        return []
    ids = line.point_ids
    xs = cloud.x[ids]
    ys = cloud.y[ids]
    zs = cloud.z[ids]
    along = line.along
    ids, xs, ys, zs, along = _drop_duplicates(ids, xs, ys, zs, along, cloud)
    n = ids.shape[0]
    if n < 3:
        if n:
            cloud.label[ids] = int(Label.UNCLASSIFIED)
        return []
    ds = dslope_profile(xs, ys, zs)
    deleted_interior = np.abs(ds) > params.t_dslope
    keep = np.ones(n, dtype=bool)
    keep[1:-1] = ~deleted_interior
    if cloud is not None and deleted_interior.any():
        cloud.label[ids[1:-1][deleted_interior]] = int(Label.UNCLASSIFIED)
    segments: list[LineSegment] = []
    # maximal contiguous runs of kept indices
    kept_idx = np.flatnonzero(keep)
    if kept_idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(kept_idx) > 1) + 1
    for seg_no, run_idx in enumerate(np.split(kept_idx, breaks)):
        segments.append(LineSegment(
            seg_id=seg_no,
            line_id=line.line_id,
            point_ids=ids[run_idx],
            xs=xs[run_idx],
            ys=ys[run_idx],
            zs=zs[run_idx],
            along=along[run_idx],
        ))
    return segments


def drop_short_segments(segments: list[LineSegment], cloud: PointCloud,
                        params: FilterParams) -> list[LineSegment]:
    """Discard segments that are too small to carry slope information.

    A segment survives only with at least ``min_seg_points`` members and an
    endpoint-to-endpoint length of at least ``min_seg_length``; members of
    discarded segments are marked Unclassified.
    """
    kept = []
    for seg in segments:
        if seg.n < params.min_seg_points or seg.length_m < params.min_seg_length:
            if cloud is not None:
                cloud.label[seg.point_ids] = int(Label.UNCLASSIFIED)
        else:
            kept.append(seg)
    return kept


def segment_scan_lines(cloud: PointCloud, lines: list[ScanLine],
                       params: FilterParams, threads: int = 1) -> list[LineSegment]:
    """Segment every scan line and renumber the survivors globally.

    Lines are independent, so with ``threads > 1`` they are processed by a
    thread pool; results are merged in line order regardless of schedule
    and final seg_ids follow (line order, along order), so the output is
    identical for any thread count.
    """
    def work(line: ScanLine) -> list[LineSegment]:
        return drop_short_segments(split_segments(line, cloud, params), cloud, params)

    if threads > 1 and len(lines) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_line = list(pool.map(work, lines))
    else:
        per_line = [work(line) for line in lines]
    segments: list[LineSegment] = []
    for segs in per_line:
        for seg in segs:
            seg.seg_id = len(segments)
            segments.append(seg)
    return segments
