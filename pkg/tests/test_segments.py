import numpy as np
import pytest

from groundline import DuplicatePointError, FilterParams, Label, PointCloud, dslope
from groundline.ingest import ScanLine, extract_scan_lines
from groundline.segments import (
    drop_short_segments,
    dslope_profile,
    segment_scan_lines,
    split_segments,
)


def straight_line(zs, spacing=1.0, y=0.0):
    zs = np.asarray(zs, dtype=np.float64)
    n = zs.shape[0]
    x = np.arange(n) * spacing
    cloud = PointCloud.from_arrays(x, np.full(n, y), zs, np.zeros(n, dtype=np.int64))
    line = extract_scan_lines(cloud)[0]
    return line, cloud


# ---------------------------------------------------------------------------
# the slope difference


def test_dslope_collinear_is_zero():
    assert dslope((0, 0, 0), (1, 0, 0), (2, 0, 0)) == 0.0


def test_dslope_unit_rise():
    assert dslope((0, 0, 0), (1, 0, 0), (2, 0, 1)) == pytest.approx(1.0)


def test_dslope_hand_value():
    # slopes 0.05 then -0.05
    got = dslope((0, 0, 0), (0.4, 0, 0.02), (0.8, 0, 0))
    assert got == pytest.approx(-0.1)


def test_dslope_duplicate_point_raises():
    with pytest.raises(DuplicatePointError):
        dslope((0, 0, 0), (0, 0, 1), (1, 0, 0))


def test_dslope_profile_matches_pointwise():
    rng = np.random.default_rng(5)
    xs = np.cumsum(rng.uniform(0.3, 1.0, 30))
    ys = np.zeros(30)
    zs = rng.normal(0, 1, 30)
    prof = dslope_profile(xs, ys, zs)
    for i in range(1, 29):
        want = dslope((xs[i - 1], 0, zs[i - 1]), (xs[i], 0, zs[i]),
                      (xs[i + 1], 0, zs[i + 1]))
        assert prof[i - 1] == pytest.approx(want)


def test_dslope_parabola_second_difference():
    """On z = c*s^2 at uniform spacing d the slope difference is 2*c*d."""
    rng = np.random.default_rng(42)
    for _ in range(100):
        c = rng.uniform(-2, 2)
        d = rng.uniform(0.1, 2.0)
        s = np.arange(10) * d
        prof = dslope_profile(s, np.zeros(10), c * s ** 2)
        np.testing.assert_allclose(prof, 2 * c * d, rtol=1e-9)


def test_dslope_rigid_transform_invariant():
    rng = np.random.default_rng(9)
    xs = np.cumsum(rng.uniform(0.3, 1.0, 20))
    ys = np.zeros(20)
    zs = rng.normal(0, 0.5, 20)
    base = dslope_profile(xs, ys, zs)
    ang = 0.7
    xr = xs * np.cos(ang) - ys * np.sin(ang) + 100.0
    yr = xs * np.sin(ang) + ys * np.cos(ang) - 50.0
    rot = dslope_profile(xr, yr, zs)
    np.testing.assert_allclose(rot, base, atol=1e-9)


def test_dslope_z_mirror_negates():
    rng = np.random.default_rng(13)
    xs = np.cumsum(rng.uniform(0.3, 1.0, 15))
    zs = rng.normal(0, 0.5, 15)
    up = dslope_profile(xs, np.zeros(15), zs)
    down = dslope_profile(xs, np.zeros(15), -zs)
    np.testing.assert_allclose(down, -up, atol=1e-12)


# ---------------------------------------------------------------------------
# splitting


def test_split_flat_line_single_segment():
    line, cloud = straight_line(np.zeros(20))
    segs = split_segments(line, cloud, FilterParams())
    assert len(segs) == 1
    assert segs[0].n == 20


def test_split_spike_deleted_and_line_split():
    zs = np.zeros(21)
    zs[10] = 5.0
    line, cloud = straight_line(zs)
    segs = split_segments(line, cloud, FilterParams())
    assert cloud.label[10] == int(Label.UNCLASSIFIED)
    assert len(segs) == 2
    members = sorted(int(i) for s in segs for i in s.point_ids)
    assert 10 not in members
    # spike neighbors also exceed the threshold and are deleted
    assert len(members) <= 20


def test_split_step_edge_two_segments():
    # ground then a 5 m step up: wall-adjacent points deleted
    zs = np.concatenate([np.zeros(10), np.full(10, 5.0)])
    line, cloud = straight_line(zs)
    segs = split_segments(line, cloud, FilterParams())
    assert len(segs) >= 2
    flat_members = {int(i) for s in segs for i in s.point_ids}
    # both plateaus survive
    assert 0 in flat_members and 19 in flat_members


def test_split_z_mirror_symmetric():
    rng = np.random.default_rng(21)
    zs = np.cumsum(rng.normal(0, 0.3, 40))
    line_a, cloud_a = straight_line(zs)
    line_b, cloud_b = straight_line(-zs)
    segs_a = split_segments(line_a, cloud_a, FilterParams())
    segs_b = split_segments(line_b, cloud_b, FilterParams())
    got_a = [list(map(int, s.point_ids)) for s in segs_a]
    got_b = [list(map(int, s.point_ids)) for s in segs_b]
    assert got_a == got_b


def test_split_boundary_points_attach_to_adjacent_run():
    # endpoints carry no slope difference but stay with their runs
    line, cloud = straight_line(np.zeros(10))
    segs = split_segments(line, cloud, FilterParams())
    assert int(segs[0].point_ids[0]) == 0
    assert int(segs[-1].point_ids[-1]) == 9


def test_split_degenerate_line_empty():
    line, cloud = straight_line(np.zeros(2))
    assert split_segments(line, cloud, FilterParams()) == []


def test_split_drops_duplicate_plan_positions():
    x = np.array([0.0, 1.0, 1.0, 2.0, 3.0, 4.0])
    z = np.array([0.0, 0.0, 9.0, 0.0, 0.0, 0.0])
    cloud = PointCloud.from_arrays(x, np.zeros(6), z, np.zeros(6, dtype=np.int64))
    line = ScanLine(line_id=0, point_ids=np.arange(6),
                    axis=np.array([1.0, 0.0]), along=x.copy())
    segs = split_segments(line, cloud, FilterParams())
    members = [int(i) for s in segs for i in s.point_ids]
    assert 2 not in members
    assert cloud.label[2] == int(Label.UNCLASSIFIED)


def test_split_noise_stability_at_two_sigma():
    """At t = 2*sigma_dslope the deleted fraction stays small on flat lines."""
    from groundline.noise import sigma_dslope

    rng = np.random.default_rng(101)
    sigma_z, d = 0.05, 2.0
    zs = rng.normal(0.0, sigma_z, 20_000)
    line, cloud = straight_line(zs, spacing=d)
    t = 2.0 * sigma_dslope(sigma_z, d)
    segs = split_segments(line, cloud, FilterParams().replace(t_dslope=t))
    kept = sum(s.n for s in segs)
    deleted_frac = 1.0 - kept / 20_000
    assert deleted_frac <= 0.05


# ---------------------------------------------------------------------------
# short-segment removal


def seg_from_line(zs, spacing=1.0):
    line, cloud = straight_line(zs, spacing)
    return split_segments(line, cloud, FilterParams()), cloud


def test_drop_short_by_count():
    segs, cloud = seg_from_line(np.zeros(3))
    kept = drop_short_segments(segs, cloud, FilterParams())
    assert kept == []
    assert np.all(cloud.label[:3] == int(Label.UNCLASSIFIED))


def test_drop_short_by_length():
    # 5 points but only 0.4 m long
    segs, cloud = seg_from_line(np.zeros(5), spacing=0.1)
    kept = drop_short_segments(segs, cloud, FilterParams())
    assert kept == []


def test_keep_long_segment():
    segs, cloud = seg_from_line(np.zeros(50), spacing=0.4)
    kept = drop_short_segments(segs, cloud, FilterParams())
    assert len(kept) == 1 and kept[0].n == 50


def test_tree_canopy_mostly_unclassified():
    """Jittered canopy returns break into short runs that get culled."""
    import groundline as gl

    spec = gl.SceneSpec(
        extent=(40.0, 40.0), line_spacing=1.0, point_spacing=0.4,
        features=(gl.synth.TreeCluster(20.0, 20.0, radius=10.0, density=0.9,
                                       h_low=2.0, h_high=10.0),),
        noise_sigma_z=0.02, rng_seed=5,
    )
    scene = gl.generate_scene(spec)
    result = gl.run_filter(scene.cloud)
    canopy = scene.kind == "tree"
    assert canopy.sum() > 300
    frac_unclassified = np.mean(result.labels[canopy] == int(Label.UNCLASSIFIED))
    assert frac_unclassified >= 0.9


# ---------------------------------------------------------------------------
# whole-cloud segmentation


def test_segment_scan_lines_thread_independent():
    import groundline as gl

    scene = gl.generate_scene(gl.SceneSpec(
        extent=(60.0, 30.0), line_spacing=1.0, point_spacing=0.5,
        terrain=gl.synth.Ramp(0.03),
        features=(gl.synth.BoxBuilding(10.0, 5.0, 30.0, 20.0, height=6.0),),
        noise_sigma_z=0.03, rng_seed=2,
    ))
    from groundline.ingest import prepare_scan_lines

    c1 = scene.cloud.copy()
    c2 = scene.cloud.copy()
    s1 = segment_scan_lines(c1, prepare_scan_lines(c1), FilterParams(), threads=1)
    s2 = segment_scan_lines(c2, prepare_scan_lines(c2), FilterParams(), threads=4)
    assert len(s1) == len(s2)
    for a, b in zip(s1, s2):
        assert a.seg_id == b.seg_id
        assert a.line_id == b.line_id
        assert np.array_equal(a.point_ids, b.point_ids)


def test_segment_ids_sequential():
    import groundline as gl
    from groundline.ingest import prepare_scan_lines

    scene = gl.generate_scene(gl.SceneSpec(extent=(30.0, 10.0), line_spacing=1.0,
                                           point_spacing=0.5, rng_seed=1))
    cloud = scene.cloud.copy()
    segs = segment_scan_lines(cloud, prepare_scan_lines(cloud), FilterParams())
    assert [s.seg_id for s in segs] == list(range(len(segs)))
