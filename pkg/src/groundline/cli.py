"""Command-line interface.

Subcommands:
    filter    classify a point cloud into ground / non-ground
    segment   stop after segmentation + region merging, dump structure
    synth     generate a synthetic scene with ground truth
    eval      score label files against truth, or compare two runs
    noise     estimate sensor noise and a slope-difference threshold
    sweep     structure counts across a range of one threshold

Parameter precedence: command-line flag > config file > built-in default.
Config files hold ``key = value`` lines using FilterParams field names.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import evaluate as ev
from . import noise as noisemod
from . import synth as synthmod
from .dtm import write_esri_ascii
from .errors import ParseError
from .filtering import read_labels, run_filter, write_labels
from .ingest import Label, parse_points, prepare_scan_lines
from .params import FilterParams
from .regions import build_similarity_graph, dump_edges, extract_regions, segment_slope_deg
from .segments import segment_scan_lines

_PARAM_FLAGS = {
    "tdslope": "t_dslope",
    "tdx": "t_dx",
    "tdh": "t_dh",
    "ttheta": "t_theta_deg",
    "h1": "h1",
    "h2": "h2",
    "cell_size": "cell_size",
    "seed_tile": "seed_tile",
    "min_seg_points": "min_seg_points",
    "min_seg_length": "min_seg_length",
    "max_iter": "max_iter",
}
_INT_FIELDS = {"min_seg_points", "max_iter"}


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value parameter file")
    parser.add_argument("--tdslope", type=float, help="slope-difference split threshold")
    parser.add_argument("--tdx", type=float, help="max 2D gap between similar segments (m)")
    parser.add_argument("--tdh", type=float, help="max elevation gap between similar segments (m)")
    parser.add_argument("--ttheta", type=float, help="max slope-angle difference (degrees)")
    parser.add_argument("--h1", type=float, help="seed band above tile minimum (m)")
    parser.add_argument("--h2", type=float, help="max median offset from the raster for ground (m)")
    parser.add_argument("--cell-size", type=float, dest="cell_size", help="raster cell size (m)")
    parser.add_argument("--seed-tile", type=float, dest="seed_tile", help="seed tile size (m)")
    parser.add_argument("--min-seg-points", type=int, dest="min_seg_points",
                        help="minimum points per kept segment")
    parser.add_argument("--min-seg-length", type=float, dest="min_seg_length",
                        help="minimum kept segment length (m)")
    parser.add_argument("--max-iter", type=int, dest="max_iter",
                        help="maximum labeling iterations")


def _read_config(path) -> dict:
    names = {f.name for f in dataclasses.fields(FilterParams)}
    out: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(f"{path}: line {lineno}: expected key = value")
            key, value = (s.strip() for s in text.split("=", 1))
            if key not in names:
                raise ParseError(f"{path}: line {lineno}: unknown parameter {key!r}")
            try:
                out[key] = int(value) if key in _INT_FIELDS else float(value)
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: bad value {value!r}") from None
    return out


def _resolve_params(args) -> FilterParams:
    """Built-in defaults, overridden by --config, overridden by flags."""
    overrides: dict = {}
    if getattr(args, "config", None):
        overrides.update(_read_config(args.config))
    for dest, field_name in _PARAM_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[field_name] = value
    return FilterParams().replace(**overrides)


def _label_counts(labels: np.ndarray) -> str:
    n_g = int(np.count_nonzero(labels == int(Label.GROUND)))
    n_n = int(np.count_nonzero(labels == int(Label.NONGROUND)))
    n_u = int(np.count_nonzero(labels == int(Label.UNCLASSIFIED)))
    return f"ground {n_g}  non-ground {n_n}  unclassified {n_u}"


def _cmd_filter(args) -> int:
    params = _resolve_params(args)
    cloud = parse_points(args.input, fmt=args.format)
    result = run_filter(cloud, params, threads=args.threads)
    write_labels(args.out, cloud, result.labels)
    if args.dtm:
        write_esri_ascii(result.dtm, args.dtm)
    status = "converged" if result.converged else "iteration limit"
    print(f"{len(cloud)} points, {len(result.segments)} segments, "
          f"{len(result.regions)} regions")
    print(f"{status} after {result.iterations} iteration(s)")
    print(_label_counts(result.labels))
    if args.truth:
        truth = synthmod.read_truth(args.truth)
        report = ev.error_report(result.labels, truth, evaluated=args.evaluated_set)
        print(ev.format_error_report(report))
    return 0


def _cmd_segment(args) -> int:
    params = _resolve_params(args)
    cloud = parse_points(args.input, fmt=args.format)
    lines = prepare_scan_lines(cloud)
    segments = segment_scan_lines(cloud, lines, params, threads=args.threads)
    graph = build_similarity_graph(segments, params)
    regions = extract_regions(graph, segments)
    region_of = {s: r.region_id for r in regions for s in r.seg_ids}
    with open(args.out, "w") as fh:
        fh.write("# seg_id line_id n_points length_m slope_deg region_id\n")
        for seg in segments:
            fh.write(f"{seg.seg_id} {seg.line_id} {seg.n} {seg.length_m:.3f} "
                     f"{segment_slope_deg(seg):.3f} {region_of[seg.seg_id]}\n")
    if args.edges:
        dump_edges(graph, args.edges)
    print(f"{len(lines)} scan lines, {len(segments)} segments, "
          f"{len(regions)} regions, {len(graph.edges)} edges")
    return 0


def _cmd_synth(args) -> int:
    if args.town:
        spec = synthmod.standard_town()
    else:
        spec = synthmod.read_scene_spec(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, rng_seed=args.seed)
    scene = synthmod.generate_scene(spec)
    synthmod.write_xyzl(args.out, scene.cloud)
    if args.truth:
        synthmod.write_truth(args.truth, scene.truth)
    n_ground = int(np.count_nonzero(scene.truth == 1))
    print(f"{len(scene.cloud)} points on {int(scene.cloud.scan_line.max()) + 1} "
          f"scan lines ({n_ground} ground)")
    return 0


def _cmd_eval(args) -> int:
    pred = read_labels(args.input)
    if args.compare:
        other = read_labels(args.compare)
        matrix = ev.overlay_compare(pred, other)
        names = ["ground", "non-ground", "unclassified"]
        print("overlay fractions (rows: first run, cols: second run)")
        print("              " + "".join(f"{n:>14}" for n in names))
        for i, name in enumerate(names):
            print(f"{name:>13} " + "".join(f"{matrix[i, j]:14.4f}" for j in range(3)))
        return 0
    if not args.truth:
        raise ParseError("eval needs --truth (or --compare)")
    truth = synthmod.read_truth(args.truth)
    report = ev.error_report(pred, truth, evaluated=args.evaluated_set)
    print(ev.format_error_report(report))
    return 0


def _cmd_noise(args) -> int:
    cloud = parse_points(args.input, fmt=args.format)
    x, y, z = cloud.x, cloud.y, cloud.z
    if args.patch:
        patch = args.patch
        if len(patch) == 1:
            patch = patch[0].split()
        if len(patch) != 4:
            raise ParseError("--patch needs four numbers: x0 y0 x1 y1")
        x0, y0, x1, y1 = (float(v) for v in patch)
        mask = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
        if np.count_nonzero(mask) < 10:
            raise ParseError("patch contains fewer than 10 points")
        x, y, z = x[mask], y[mask], z[mask]
    lines = prepare_scan_lines(cloud)
    est = noisemod.estimate_noise(x, y, z, lines)
    print(f"sigma_z            {est.sigma_z:.4f} m")
    print(f"point spacing      {est.d_points:.4f} m")
    print(f"sigma_dslope       {est.sigma_dslope:.4f}")
    print(f"  (white-noise propagation: {est.sigma_dslope_propagated:.4f})")
    print(f"suggested t_dslope {est.suggested_tdslope:.4f}")
    return 0


def _cmd_sweep(args) -> int:
    params = _resolve_params(args)
    cloud = parse_points(args.input, fmt=args.format)
    result = ev.sensitivity_sweep(cloud, args.param, args.values, params,
                                  threads=args.threads)
    text = ev.sweep_to_csv(result)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundline",
        description="Scan-line ground filtering for airborne point clouds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def io_flags(p, out_required=True):
        p.add_argument("--in", dest="input", required=True, help="input point file")
        p.add_argument("--format", choices=("xyzl", "las"), default="xyzl",
                       help="input format (default xyzl)")
        if out_required:
            p.add_argument("--out", required=True, help="output path")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for per-line stages")

    p = sub.add_parser("filter", help="classify ground / non-ground")
    io_flags(p)
    p.add_argument("--dtm", help="also write the final raster (ESRI ASCII)")
    p.add_argument("--truth", help="truth file: also print error rates")
    p.add_argument("--evaluated-set", dest="evaluated_set",
                   choices=("segmented", "all"), default="segmented",
                   help="denominator convention for --truth (default segmented)")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("segment", help="dump segments and regions")
    io_flags(p)
    p.add_argument("--edges", help="also write similarity edges")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--spec", help="scene description file")
    p.add_argument("--town", action="store_true",
                   help="use the built-in standard town scene")
    p.add_argument("--seed", type=int, help="override the scene RNG seed")
    p.add_argument("--out", required=True, help="output point file (xyzl)")
    p.add_argument("--truth", help="also write per-point truth labels")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="score labels against truth")
    p.add_argument("--in", dest="input", required=True,
                   help="label file from 'filter'")
    p.add_argument("--truth", help="truth file from 'synth'")
    p.add_argument("--compare", help="second label file: print overlay matrix")
    p.add_argument("--evaluated-set", dest="evaluated_set",
                   choices=("segmented", "all"), default="segmented",
                   help="denominator convention (default segmented)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("noise", help="estimate noise and suggest t_dslope")
    p.add_argument("--in", dest="input", required=True, help="input point file")
    p.add_argument("--format", choices=("xyzl", "las"), default="xyzl")
    p.add_argument("--patch", nargs="+",
                   help="flat patch to fit: x0 y0 x1 y1 (default: whole cloud)")
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("sweep", help="structure counts across one threshold")
    io_flags(p, out_required=False)
    p.add_argument("--param", required=True, help="FilterParams field to vary")
    p.add_argument("--values", type=float, nargs="+", required=True,
                   help="values to try")
    p.add_argument("--out", help="write CSV here as well as stdout")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ParseError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
