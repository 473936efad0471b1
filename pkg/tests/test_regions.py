import numpy as np
import pytest

from groundline import FilterParams, PointCloud
from groundline.ingest import prepare_scan_lines
from groundline.regions import (
    SimilarityGraph,
    build_similarity_graph,
    candidate_neighbors,
    dump_edges,
    extract_regions,
    segment_similarity,
    segment_slope_deg,
)
from groundline.segments import LineSegment, segment_scan_lines


def make_segment(seg_id, line_id, pts):
    """pts: list of (x, y, z) in along order."""
    arr = np.asarray(pts, dtype=np.float64)
    xs, ys, zs = arr[:, 0], arr[:, 1], arr[:, 2]
    along = np.hypot(xs - xs[0], ys - ys[0])
    return LineSegment(seg_id=seg_id, line_id=line_id,
                       point_ids=np.arange(len(pts)), xs=xs, ys=ys, zs=zs,
                       along=along)


# ---------------------------------------------------------------------------
# slope angle


def test_slope_horizontal_zero():
    seg = make_segment(0, 0, [(0, 0, 0), (1, 0, 0), (2, 0, 0)])
    assert segment_slope_deg(seg) == 0.0


def test_slope_45_up():
    seg = make_segment(0, 0, [(0, 0, 0), (2, 0, 2)])
    assert segment_slope_deg(seg) == pytest.approx(45.0)


def test_slope_negative():
    seg = make_segment(0, 0, [(0, 0, 0), (1, 0, -1)])
    assert segment_slope_deg(seg) == pytest.approx(-45.0)


# ---------------------------------------------------------------------------
# pairwise similarity


def test_similarity_self_is_zero():
    seg = make_segment(0, 0, [(0, 0, 0), (1, 0, 0.1), (2, 0, 0)])
    m = segment_similarity(seg, seg)
    assert m == (0.0, 0.0, 0.0)


def test_similarity_two_parallel_segments():
    a = make_segment(0, 0, [(0, 0, 0), (2, 0, 0)])
    b = make_segment(1, 1, [(0, 1, 0.5), (2, 1, 0.5)])
    m = segment_similarity(a, b)
    assert m.d_x == pytest.approx(1.0)
    assert m.dh == pytest.approx(0.5)
    assert m.theta_z == pytest.approx(0.0)


def test_similarity_slope_angle_difference():
    a = make_segment(0, 0, [(0, 0, 0), (2, 0, 0)])
    b = make_segment(1, 1, [(0, 1, 0), (2, 1, 2)])
    assert segment_similarity(a, b).theta_z == pytest.approx(45.0)


def test_similarity_symmetric():
    rng = np.random.default_rng(17)
    for _ in range(20):
        a = make_segment(0, 0, rng.uniform(0, 10, (5, 3)))
        b = make_segment(1, 1, rng.uniform(0, 10, (7, 3)))
        m1 = segment_similarity(a, b)
        m2 = segment_similarity(b, a)
        assert m1 == m2


def test_similarity_min_pair_matches_bruteforce():
    rng = np.random.default_rng(23)
    for _ in range(30):
        pa = rng.uniform(0, 20, (8, 3))
        pb = rng.uniform(0, 20, (6, 3))
        a = make_segment(0, 0, pa)
        b = make_segment(1, 1, pb)
        m = segment_similarity(a, b)
        dx_brute = min(np.hypot(p[0] - q[0], p[1] - q[1]) for p in pa for q in pb)
        dh_brute = min(abs(p[2] - q[2]) for p in pa for q in pb)
        assert m.d_x == pytest.approx(dx_brute)
        assert m.dh == pytest.approx(dh_brute)


# ---------------------------------------------------------------------------
# candidate generation


def grid_cloud(n_lines, n_pts, line_spacing=1.0, spacing=0.5, z=None):
    xs, ys, zs, sl = [], [], [], []
    for k in range(n_lines):
        x = np.arange(n_pts) * spacing
        if k % 2:
            x = x[::-1]
        xs.append(x)
        ys.append(np.full(n_pts, k * line_spacing))
        zs.append(np.zeros(n_pts) if z is None else z(k, x))
        sl.append(np.full(n_pts, k))
    return PointCloud.from_arrays(np.concatenate(xs), np.concatenate(ys),
                                  np.concatenate(zs), np.concatenate(sl))


def segments_of(cloud, params=None):
    params = params or FilterParams()
    work = cloud.copy()
    return segment_scan_lines(work, prepare_scan_lines(work), params)


def test_candidates_same_line_adjacent_present():
    # one line split in two by a spike
    z = np.zeros(21)
    z[10] = 8.0
    cloud = PointCloud.from_arrays(np.arange(21, dtype=np.float64), np.zeros(21),
                                   z, np.zeros(21, dtype=np.int64))
    segs = segments_of(cloud)
    assert len(segs) == 2
    pairs = candidate_neighbors(segs, FilterParams())
    assert (0, 1) in pairs


def test_candidates_skip_line_gap_of_two():
    cloud = grid_cloud(3, 12)
    segs = segments_of(cloud)
    by_line = {s.seg_id: s.line_id for s in segs}
    pairs = candidate_neighbors(segs, FilterParams())
    for i, j in pairs:
        assert abs(by_line[segs[i].seg_id] - by_line[segs[j].seg_id]) <= 1


def test_candidates_superset_of_close_pairs():
    rng = np.random.default_rng(31)
    params = FilterParams()
    for trial in range(20):
        n_lines = int(rng.integers(3, 8))
        cloud = grid_cloud(n_lines, int(rng.integers(8, 30)),
                           line_spacing=float(rng.uniform(0.6, 1.2)),
                           spacing=float(rng.uniform(0.3, 0.8)),
                           z=lambda k, x: np.cumsum(rng.normal(0, 0.1, x.shape[0])))
        segs = segments_of(cloud)
        pairs = set(candidate_neighbors(segs, params))
        for i in range(len(segs)):
            for j in range(i + 1, len(segs)):
                if segment_similarity(segs[i], segs[j]).d_x <= params.t_dx:
                    assert (i, j) in pairs, f"trial {trial}: missing ({i},{j})"


# ---------------------------------------------------------------------------
# graph construction


def test_graph_flat_plane_single_component():
    cloud = grid_cloud(5, 20)
    segs = segments_of(cloud)
    graph = build_similarity_graph(segs, FilterParams())
    regions = extract_regions(graph, segs)
    assert len(regions) == 1
    assert len(regions[0].seg_ids) == len(segs)


def test_graph_no_edge_across_large_dh():
    a = make_segment(0, 0, [(x, 0.0, 0.0) for x in np.arange(0, 5, 0.5)])
    b = make_segment(1, 1, [(x, 1.0, 10.0) for x in np.arange(0, 5, 0.5)])
    graph = build_similarity_graph([a, b], FilterParams())
    assert graph.edges == {}


def test_graph_wall_segment_rejected_by_angle():
    # steep wall-like segment next to flat ground: slope >= 80 degrees
    ground = make_segment(0, 0, [(x, 0.0, 0.0) for x in np.arange(0, 6, 0.5)])
    wall = make_segment(1, 1, [(6.0 + 0.01 * i, 1.0, 0.3 * i) for i in range(8)])
    assert segment_slope_deg(wall) > 80
    graph = build_similarity_graph([ground, wall], FilterParams())
    assert (0, 1) not in graph.edges


def test_graph_edge_measures_recorded():
    cloud = grid_cloud(2, 10)
    segs = segments_of(cloud)
    graph = build_similarity_graph(segs, FilterParams())
    assert len(graph.edges) == 1
    m = next(iter(graph.edges.values()))
    assert m.d_x <= 1.0 and m.dh <= 0.5 and m.theta_z <= 30.0


# ---------------------------------------------------------------------------
# region extraction


def graph_from_edges(nodes, edges):
    g = SimilarityGraph(nodes=list(nodes))
    for a, b in edges:
        g.edges[(min(a, b), max(a, b))] = None
    return g


def dummy_segments(node_ids):
    return [make_segment(i, 0, [(i * 10.0, 0, 0), (i * 10.0 + 1, 0, 0)])
            for i in node_ids]


def test_regions_empty_graph():
    assert extract_regions(graph_from_edges([], []), []) == []


def test_regions_chain_is_one_component():
    segs = dummy_segments([0, 1, 2])
    g = graph_from_edges([0, 1, 2], [(0, 1), (1, 2)])
    regions = extract_regions(g, segs)
    assert len(regions) == 1
    assert set(regions[0].seg_ids) == {0, 1, 2}


def test_regions_two_cliques():
    segs = dummy_segments([0, 1, 2, 3])
    g = graph_from_edges([0, 1, 2, 3], [(0, 1), (2, 3)])
    regions = extract_regions(g, segs)
    assert len(regions) == 2
    assert [r.region_id for r in regions] == [0, 1]
    assert set(regions[0].seg_ids) == {0, 1}
    assert set(regions[1].seg_ids) == {2, 3}


def test_regions_partition_nodes():
    rng = np.random.default_rng(37)
    nodes = list(range(40))
    edges = [(int(rng.integers(0, 40)), int(rng.integers(0, 40))) for _ in range(30)]
    edges = [(a, b) for a, b in edges if a != b]
    segs = dummy_segments(nodes)
    regions = extract_regions(graph_from_edges(nodes, edges), segs)
    seen = sorted(s for r in regions for s in r.seg_ids)
    assert seen == nodes
    # closure under adjacency
    comp_of = {s: r.region_id for r in regions for s in r.seg_ids}
    for a, b in edges:
        assert comp_of[a] == comp_of[b]


def test_region_point_count_sums_members():
    cloud = grid_cloud(3, 15)
    segs = segments_of(cloud)
    regions = extract_regions(build_similarity_graph(segs, FilterParams()), segs)
    assert sum(r.point_count for r in regions) == sum(s.n for s in segs)


def test_dump_edges_format(tmp_path):
    cloud = grid_cloud(2, 10)
    segs = segments_of(cloud)
    graph = build_similarity_graph(segs, FilterParams())
    out = tmp_path / "edges.txt"
    dump_edges(graph, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("#")
    assert len(lines) == 1 + len(graph.edges)
    fields = lines[1].split()
    assert len(fields) == 5
    int(fields[0]), int(fields[1])
    float(fields[2]), float(fields[3]), float(fields[4])
