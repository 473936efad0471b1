"""Merge line segments into regions through a similarity graph.

Two segments are similar when they are horizontally close (minimum pairwise
2-D distance), vertically close (minimum pairwise height difference) and
have similar slope angles. Similar segments in the same or neighboring scan
lines are connected by an edge; connected components of the resulting graph
are the regions that the progressive filter later labels as ground or
non-ground in one piece.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .ingest import Label
from .params import FilterParams
from .segments import LineSegment

__all__ = [
    "SimilarityMeasures",
    "SimilarityGraph",
    "Region",
    "segment_slope_deg",
    "segment_similarity",
    "candidate_neighbors",
    "build_similarity_graph",
    "extract_regions",
    "dump_edges",
]

# above n*m pairwise-distance evaluations, switch to a k-d tree
_BRUTE_PAIR_LIMIT = 1_000_000


class SimilarityMeasures(NamedTuple):
    d_x: float
    dh: float
    theta_z: float


@dataclass
class SimilarityGraph:
    """Segments as nodes, similarity edges with their measures attached."""

    nodes: list[int]
    edges: dict[tuple[int, int], SimilarityMeasures] = field(default_factory=dict)

    def neighbors(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        for lst in adj.values():
            lst.sort()
        return adj


@dataclass
class Region:
    """Connected component of the similarity graph."""

    region_id: int
    seg_ids: list[int]
    label: Label
    point_count: int
    z_min: float
    z_max: float
    point_ids: np.ndarray


def segment_slope_deg(seg: LineSegment) -> float:
    """Slope angle of a segment in degrees, from its two endpoints.

    Rise is the endpoint elevation difference, run the full horizontal
    endpoint distance, so the result lies in (-90, 90). Requires a nonzero
    endpoint distance (guaranteed after short-segment removal).
    """
    run = seg.length_m
    if run == 0.0:
        raise ValueError(f"segment {seg.seg_id} has zero endpoint distance")
    rise = seg.zs[-1] - seg.zs[0]
    return float(np.degrees(np.arctan(rise / run)))


def _min_pair_dx(a: LineSegment, b: LineSegment) -> float:
    """Exact minimum 2-D horizontal distance over all point pairs."""
    if a.n * b.n <= _BRUTE_PAIR_LIMIT:
        dx = a.xs[:, None] - b.xs[None, :]
        dy = a.ys[:, None] - b.ys[None, :]
        return float(np.sqrt(np.min(dx * dx + dy * dy)))
    small, big = (a, b) if a.n <= b.n else (b, a)
    tree = cKDTree(np.column_stack([small.xs, small.ys]))
    dists, _ = tree.query(np.column_stack([big.xs, big.ys]), k=1)
    return float(np.min(dists))


def _min_pair_dh(a: LineSegment, b: LineSegment) -> float:
    """Exact minimum |z difference| over all point pairs (sorted merge)."""
    za = np.sort(a.zs)
    zb = np.sort(b.zs)
    if zb.shape[0] < za.shape[0]:
        za, zb = zb, za
    pos = np.searchsorted(zb, za)
    best = np.inf
    right = pos < zb.shape[0]
    if right.any():
        best = min(best, float(np.min(zb[pos[right]] - za[right])))
    left = pos > 0
    if left.any():
        best = min(best, float(np.min(za[left] - zb[pos[left] - 1])))
    return best


def segment_similarity(a: LineSegment, b: LineSegment) -> SimilarityMeasures:
    """The three similarity measures between two segments.

    Returns:
        SimilarityMeasures with ``d_x`` the minimum pairwise horizontal
        distance, ``dh`` the minimum pairwise absolute height difference,
        and ``theta_z`` the absolute slope-angle difference in degrees.
        All three are symmetric in the arguments.
    """
    return SimilarityMeasures(
        d_x=_min_pair_dx(a, b),
        dh=_min_pair_dh(a, b),
        theta_z=abs(segment_slope_deg(a) - segment_slope_deg(b)),
    )


def _global_axis(segments: list[LineSegment]) -> np.ndarray:
    """Length-weighted mean scan direction, sign-canonicalized per segment."""
    acc = np.zeros(2)
    for seg in segments:
        v = np.array([seg.xs[-1] - seg.xs[0], seg.ys[-1] - seg.ys[0]])
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = -v
        acc += v
    norm = float(np.hypot(acc[0], acc[1]))
    return acc / norm if norm > 0 else np.array([1.0, 0.0])


def candidate_neighbors(segments: list[LineSegment],
                        params: FilterParams) -> list[tuple[int, int]]:
    """Segment pairs close enough to be worth measuring.

    Returns index pairs (positions in ``segments``) covering along-adjacent
    pairs in the same scan line, same-line pairs whose along gap is within
    ``t_dx``, and pairs in neighboring scan lines (ranks differing by one)
    whose projection intervals onto a common axis come within ``t_dx``.

    Projection onto a unit vector never exceeds true 2-D distance, so every
    pair with minimum distance <= ``t_dx`` in the same or neighboring line
    is included (superset guarantee).
    """
    if not segments:
        return []
    axis = _global_axis(segments)
    line_ids = sorted({seg.line_id for seg in segments})
    rank = {lid: i for i, lid in enumerate(line_ids)}
    # per-line segment positions ordered along the line
    per_line: dict[int, list[int]] = {}
    lo = np.empty(len(segments))
    hi = np.empty(len(segments))
    for i, seg in enumerate(segments):
        proj = axis[0] * seg.xs + axis[1] * seg.ys
        lo[i] = proj.min()
        hi[i] = proj.max()
        per_line.setdefault(rank[seg.line_id], []).append(i)
    for idxs in per_line.values():
        idxs.sort(key=lambda i: segments[i].along[0])
    pairs: set[tuple[int, int]] = set()

    def add(i: int, j: int) -> None:
        pairs.add((i, j) if i < j else (j, i))

    t = params.t_dx
    for r, idxs in per_line.items():
        # same line: adjacent runs always, non-adjacent within the along gap
        # (gaps measured in the line's own frame, where along is shared)
        for k in range(len(idxs) - 1):
            add(idxs[k], idxs[k + 1])
        for k in range(len(idxs)):
            for m in range(k + 1, len(idxs)):
                gap = segments[idxs[m]].along[0] - segments[idxs[k]].along[-1]
                if gap <= t:
                    add(idxs[k], idxs[m])
                else:
                    break
        # next line up: dilated interval overlap on the common axis
        other = per_line.get(r + 1)
        if not other:
            continue
        for i in idxs:
            for j in other:
                if lo[j] - hi[i] <= t and lo[i] - hi[j] <= t:
                    add(i, j)
    return sorted(pairs)


def build_similarity_graph(segments: list[LineSegment],
                           params: FilterParams) -> SimilarityGraph:
    """Evaluate candidate pairs and keep those within all three thresholds.

    Nodes are seg_ids of all input segments (isolated segments included);
    an edge appears iff ``d_x <= t_dx``, ``dh <= t_dh`` and
    ``theta_z <= t_theta_deg``.
    """
    graph = SimilarityGraph(nodes=[seg.seg_id for seg in segments])
    slopes = [segment_slope_deg(seg) for seg in segments]
    for i, j in candidate_neighbors(segments, params):
        theta = abs(slopes[i] - slopes[j])
        if theta > params.t_theta_deg:
            continue
        a, b = segments[i], segments[j]
        dh = _min_pair_dh(a, b)
        if dh > params.t_dh:
            continue
        d_x = _min_pair_dx(a, b)
        if d_x > params.t_dx:
            continue
        key = (a.seg_id, b.seg_id) if a.seg_id < b.seg_id else (b.seg_id, a.seg_id)
        graph.edges[key] = SimilarityMeasures(d_x=d_x, dh=dh, theta_z=theta)
    return graph


def extract_regions(graph: SimilarityGraph,
                    segments: list[LineSegment]) -> list[Region]:
    """Connected components of the similarity graph, depth-first.

    Region ids are assigned by ascending smallest member seg_id, so the
    numbering is independent of traversal order. Segment summary fields
    (point count, z range, member point ids) are aggregated per region.
    """
    by_id = {seg.seg_id: seg for seg in segments}
    adj = graph.neighbors()
    visited: set[int] = set()
    components: list[list[int]] = []
    for start in sorted(graph.nodes):
        if start in visited:
            continue
        comp = []
        stack = [start]
        visited.add(start)
        while stack:
            node = stack.pop()
            comp.append(node)
            for nxt in adj.get(node, ()):
                if nxt not in visited:
                    visited.add(nxt)
                    stack.append(nxt)
        components.append(sorted(comp))
    components.sort(key=lambda c: c[0])
    regions = []
    for rid, comp in enumerate(components):
        members = [by_id[s] for s in comp]
        regions.append(Region(
            region_id=rid,
            seg_ids=comp,
            label=Label.UNLABELED,
            point_count=int(sum(s.n for s in members)),
            z_min=float(min(s.z_min for s in members)),
            z_max=float(max(s.z_max for s in members)),
            point_ids=np.concatenate([s.point_ids for s in members]),
        ))
    return regions


def dump_edges(graph: SimilarityGraph, path) -> None:
    """Write one ``seg_a seg_b d_x dh theta_z`` row per edge (debug aid)."""
    with open(path, "w") as fh:
        fh.write("# seg_a seg_b d_x dh theta_z\n")
        for (a, b), m in sorted(graph.edges.items()):
            fh.write(f"{a} {b} {m.d_x:.6f} {m.dh:.6f} {m.theta_z:.6f}\n")
