"""Progressive ground labeling of segment regions against a refined DTM.

Seed segments are picked per map tile: the lowest segments become ground,
clearly elevated ones non-ground. After a per-region consistency vote, an
initial minimum-elevation raster is built from the ground regions and the
remaining regions are tested against it with a relaxed tolerance, growing
the ground set and rebuilding the raster until nothing changes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dtm import DtmGrid, build_dtm, interpolate_many
from .errors import SeedSelectionError
from .ingest import Label, PointCloud, ScanLine, prepare_scan_lines
from .params import FilterParams
from .regions import Region, build_similarity_graph, extract_regions
from .segments import LineSegment, segment_scan_lines

__all__ = [
    "FilterState",
    "FilterResult",
    "select_seeds",
    "consistency_adjust",
    "label_regions",
    "run_filter",
    "write_labels",
    "read_labels",
]


@dataclass
class FilterState:
    """Snapshot of one labeling iteration (iteration 0 is the seed state)."""

    iteration: int
    dtm: DtmGrid
    region_labels: dict[int, Label]
    changed: int


@dataclass
class FilterResult:
    """Everything the pipeline produced.

    ``labels`` holds one code per input point (Ground=1, NonGround=0,
    Unclassified=-1) in input order. ``history`` records the DTM and the
    per-region labels after seeding and after every iteration.
    """

    labels: np.ndarray
    dtm: DtmGrid
    history: list[FilterState]
    converged: bool
    iterations: int
    scan_lines: list[ScanLine]
    segments: list[LineSegment]
    regions: list[Region]


def select_seeds(segments: list[LineSegment], params: FilterParams,
                 bounds: tuple[float, float, float, float] | None = None) -> np.ndarray:
    """Label obvious segments per tile: lowest as ground, highest as non-ground.

    The bounding box is tiled into squares of ``params.seed_tile`` meters;
    each segment belongs to the tile containing its lowest point. Within a
    tile, ``z_low`` is the smallest segment minimum; segments with minimum
    z at most ``z_low + h1`` seed as Ground and segments with minimum z at
    least ``z_low + h_high`` seed as NonGround. Everything else stays
    Unlabeled. Segment labels are updated in place.

    Returns:
        Array of the assigned seed labels, aligned with ``segments``.

    Raises:
        SeedSelectionError: when no segment seeds as Ground.
    """
    if not segments:
        raise SeedSelectionError("no segments to seed")
    zmin = np.array([seg.z_min for seg in segments])
    at = np.array([int(np.argmin(seg.zs)) for seg in segments])
    px = np.array([seg.xs[a] for seg, a in zip(segments, at)])
    py = np.array([seg.ys[a] for seg, a in zip(segments, at)])
    if bounds is None:
        xs0 = min(float(seg.xs.min()) for seg in segments)
        ys0 = min(float(seg.ys.min()) for seg in segments)
    else:
        xs0, ys0 = bounds[0], bounds[1]
    tx = ((px - xs0) // params.seed_tile).astype(np.int64)
    ty = ((py - ys0) // params.seed_tile).astype(np.int64)
    tx -= tx.min()
    ty -= ty.min()
    tile_key = tx * (ty.max() + 1) + ty
    seeds = np.full(len(segments), int(Label.UNLABELED), dtype=np.int8)
    for key in np.unique(tile_key):
        members = np.flatnonzero(tile_key == key)
        z_low = zmin[members].min()
        seeds[members[zmin[members] <= z_low + params.h1]] = int(Label.GROUND)
        seeds[members[zmin[members] >= z_low + params.h_high]] = int(Label.NONGROUND)
    if not np.any(seeds == int(Label.GROUND)):
        raise SeedSelectionError("no ground seeds found in any tile")
    for seg, s in zip(segments, seeds):
        seg.label = Label(int(s))
    return seeds


def consistency_adjust(regions: list[Region], segments: list[LineSegment]) -> None:
    """Give each region one label by point-count majority of its seeds.

    Ground wins when ground-seeded points outnumber non-ground-seeded ones,
    and vice versa; ties and all-unlabeled regions stay Unlabeled. The
    region label then overwrites every member segment label, which erases
    minority seeds.
    """
    by_id = {seg.seg_id: seg for seg in segments}
    for region in regions:
        ground = sum(by_id[s].n for s in region.seg_ids
                     if by_id[s].label is Label.GROUND)
        nonground = sum(by_id[s].n for s in region.seg_ids
                        if by_id[s].label is Label.NONGROUND)
        if ground > nonground:
            region.label = Label.GROUND
        elif nonground > ground:
            region.label = Label.NONGROUND
        else:
            region.label = Label.UNLABELED
        for s in region.seg_ids:
            by_id[s].label = region.label


def label_regions(regions: list[Region], cloud: PointCloud, dtm: DtmGrid,
                  h: float) -> int:
    """Test every Unlabeled region against the terrain model.

    For each Unlabeled region the signed heights dz of its member points
    above the interpolated terrain are computed; a region whose median
    absolute dz is at most ``h`` becomes Ground, a region entirely more
    than ``h`` above the terrain (minimum dz > h) becomes NonGround, and
    anything else stays Unlabeled for the next round. Ground and NonGround
    are never revisited.

    Returns:
        Number of regions whose label changed.
    """
    changed = 0
    for region in regions:
        if region.label is not Label.UNLABELED:
            continue
        ids = region.point_ids
        dz = cloud.z[ids] - interpolate_many(dtm, cloud.x[ids], cloud.y[ids])
        if np.median(np.abs(dz)) <= h:
            region.label = Label.GROUND
            changed += 1
        elif dz.min() > h:
            region.label = Label.NONGROUND
            changed += 1
    return changed


def _ground_point_ids(regions: list[Region]) -> np.ndarray:
    parts = [r.point_ids for r in regions if r.label is Label.GROUND]
    if not parts:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(parts)


def run_filter(cloud: PointCloud, params: FilterParams | None = None,
               threads: int = 1) -> FilterResult:
    """Run the full pipeline on a point cloud.

    Scan lines are extracted and cleaned, segmented, merged into regions;
    seeds are selected and consistency-adjusted; then regions are labeled
    progressively against a minimum-elevation raster that is rebuilt from
    the growing ground set, until an iteration changes nothing or
    ``params.max_iter`` is reached. Points end Ground or NonGround with
    their region; points that never reached a region (back-scan, slope
    discontinuities, short segments, degenerate lines) end Unclassified.

    The input cloud is not modified.
    """
    params = params or FilterParams()
    work = cloud.copy()
    work.label[:] = int(Label.UNLABELED)
    lines = prepare_scan_lines(work)
    segments = segment_scan_lines(work, lines, params, threads=threads)
    if not segments:
        raise SeedSelectionError("no segments survived segmentation")
    graph = build_similarity_graph(segments, params)
    regions = extract_regions(graph, segments)
    bounds = (float(work.x.min()), float(work.y.min()),
              float(work.x.max()), float(work.y.max()))
    select_seeds(segments, params, bounds=bounds)
    consistency_adjust(regions, segments)
    ground_ids = _ground_point_ids(regions)
    if ground_ids.size == 0:
        raise SeedSelectionError("consistency adjustment left no ground region")
    dtm = build_dtm(work.x[ground_ids], work.y[ground_ids], work.z[ground_ids],
                    params.cell_size, bounds)
    history = [FilterState(
        iteration=0, dtm=dtm,
        region_labels={r.region_id: r.label for r in regions}, changed=0,
    )]
    converged = False
    iterations = 0
    for it in range(1, params.max_iter + 1):
        iterations = it
        changed = label_regions(regions, work, dtm, params.h2)
        if changed:
            ground_ids = _ground_point_ids(regions)
            dtm = build_dtm(work.x[ground_ids], work.y[ground_ids],
                            work.z[ground_ids], params.cell_size, bounds)
        history.append(FilterState(
            iteration=it, dtm=dtm,
            region_labels={r.region_id: r.label for r in regions}, changed=changed,
        ))
        if changed == 0:
            converged = True
            break
    # regions still unlabeled at the end never qualified as ground
    for region in regions:
        final = region.label if region.label is not Label.UNLABELED else Label.NONGROUND
        work.label[region.point_ids] = int(final)
    work.label[work.label == int(Label.UNLABELED)] = int(Label.UNCLASSIFIED)
    return FilterResult(
        labels=work.label.copy(), dtm=dtm, history=history, converged=converged,
        iterations=iterations, scan_lines=lines, segments=segments, regions=regions,
    )


def write_labels(path, cloud: PointCloud, labels: np.ndarray) -> None:
    """Write ``x y z label`` rows in input order (1 ground, 0 non-ground, -1)."""
    labels = np.asarray(labels)
    if labels.shape[0] != len(cloud):
        raise ValueError("labels length does not match the cloud")
    with open(path, "w") as fh:
        for i in range(len(cloud)):
            fh.write(f"{cloud.x[i]:.3f} {cloud.y[i]:.3f} {cloud.z[i]:.3f} {int(labels[i])}\n")


def read_labels(path) -> np.ndarray:
    """Read the label column back from a :func:`write_labels` file."""
    labels = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields")
            labels.append(int(parts[3]))
    return np.array(labels, dtype=np.int8)
