"""Synthetic airborne-scan scenes with per-point ground truth.

Scenes are sampled on serpentine scan lines across a rectangular extent:
terrain (flat, ramp or rolling hills), optional terrain steps, buildings
with flat or gabled roofs, tree clusters and cars. Every emitted point
carries the truth label of the surface that generated it, so filter output
can be scored exactly.

Sensor noise is Gaussian with the requested marginal standard deviation.
By default it is correlated along the scan line (a short Gaussian kernel),
matching airborne data where slowly varying trajectory error dominates the
elevation budget; consecutive-point differences are therefore much smaller
than white noise of the same std would produce. Set ``noise_corr_samples``
to 0 for white noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import ParseError
from .ingest import Label, PointCloud

__all__ = [
    "Flat",
    "Ramp",
    "Hill",
    "Cliff",
    "BoxBuilding",
    "GableBuilding",
    "TreeCluster",
    "Car",
    "SceneSpec",
    "SyntheticScene",
    "generate_scene",
    "standard_town",
    "write_xyzl",
    "write_truth",
    "read_truth",
    "read_scene_spec",
    "write_scene_spec",
]

# facade sampling: vertical step between wall returns and max horizontal
# smear of a wall stack; jumps smaller than _WALL_MIN_JUMP emit no facade
_WALL_MIN_JUMP = 2.0
_WALL_XY_SMEAR = 0.03


# ---------------------------------------------------------------------------
# terrain


@dataclass(frozen=True)
class Flat:
    """Horizontal plane at z = 0."""

    def z(self, x, y):
        return np.zeros_like(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class Ramp:
    """Plane rising along +x at a constant slope."""

    slope: float = 0.02

    def z(self, x, y):
        return self.slope * np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class Hill:
    """Smooth rolling surface, product of sines in x and y."""

    amplitude: float = 2.0
    wavelength: float = 60.0

    def z(self, x, y):
        w = 2.0 * np.pi / self.wavelength
        return self.amplitude * np.sin(w * np.asarray(x)) * np.sin(w * np.asarray(y))


Terrain = Union[Flat, Ramp, Hill]


# ---------------------------------------------------------------------------
# features


@dataclass(frozen=True)
class Cliff:
    """Terrain step: ground at ``x >= x0`` is raised by ``drop`` meters.

    Both sides are ground truth; the step face itself returns no points
    under nadir sampling.
    """

    x0: float
    drop: float


@dataclass(frozen=True)
class BoxBuilding:
    """Flat-roof building; roof elevation is ground at the footprint center
    plus ``height``."""

    x0: float
    y0: float
    x1: float
    y1: float
    height: float


@dataclass(frozen=True)
class GableBuilding:
    """Two-plane pitched roof; the ridge runs along the longer footprint axis.

    The ridge sits ``ridge_height`` above the ground at the footprint
    center and both planes fall off at ``pitch_deg``; the eave must stay
    above the ground.
    """

    x0: float
    y0: float
    x1: float
    y1: float
    ridge_height: float
    pitch_deg: float


@dataclass(frozen=True)
class TreeCluster:
    """Disc of vegetation: samples inside return from the canopy.

    Each sample inside the disc returns a canopy hit with probability
    ``density`` at a uniform height in [h_low, h_high] above ground, and
    otherwise nothing at all (no ground penetration).
    """

    cx: float
    cy: float
    radius: float
    density: float = 0.85
    h_low: float = 2.0
    h_high: float = 12.0


@dataclass(frozen=True)
class Car:
    """Small box of default height 1.5 m; too low to shed facade returns."""

    x0: float
    y0: float
    x1: float
    y1: float
    height: float = 1.5


Feature = Union[Cliff, BoxBuilding, GableBuilding, TreeCluster, Car]

# truth codes per surface kind
_KIND_TRUTH = {
    "ground": int(Label.GROUND),
    "roof": int(Label.NONGROUND),
    "wall": int(Label.NONGROUND),
    "tree": int(Label.NONGROUND),
    "car": int(Label.NONGROUND),
    "outlier": int(Label.NONGROUND),
}


@dataclass(frozen=True)
class SceneSpec:
    """Declarative description of one synthetic scene.

    Attributes:
        extent: (width, height) of the sampled rectangle in meters.
        line_spacing: distance between scan lines (m).
        point_spacing: distance between samples along a line (m).
        terrain: Flat, Ramp or Hill.
        features: applied in order; where footprints overlap, the
            last-listed feature wins.
        noise_sigma_z: marginal std of the elevation noise (m).
        noise_corr_samples: Gaussian correlation length of the noise along
            the line, in samples; 0 gives white noise.
        outlier_fraction: fraction of emitted points displaced vertically
            by +-outlier_dz (gross errors, truth non-ground).
        outlier_dz: outlier displacement magnitude (m).
        backscan_fraction: fraction of interior samples re-emitted as
            backward-folded re-scans of an earlier position on the line.
        rng_seed: seed for all randomness; per-line substreams make the
            output independent of line scheduling.
    """

    extent: tuple[float, float] = (100.0, 100.0)
    line_spacing: float = 0.65
    point_spacing: float = 0.4
    terrain: Terrain = field(default_factory=Flat)
    features: tuple[Feature, ...] = ()
    noise_sigma_z: float = 0.0
    noise_corr_samples: float = 1.0
    outlier_fraction: float = 0.0
    outlier_dz: float = 50.0
    backscan_fraction: float = 0.0
    rng_seed: int = 0


@dataclass
class SyntheticScene:
    """Generated points with their ground truth.

    ``truth`` is 1 for ground and 0 for everything else; ``kind`` names the
    generating surface; ``feature_index`` indexes into ``spec.features``
    (-1 for plain ground and for outliers).
    """

    cloud: PointCloud
    truth: np.ndarray
    kind: np.ndarray
    feature_index: np.ndarray
    spec: SceneSpec


def _validate(spec: SceneSpec) -> None:
    width, height = spec.extent
    if width <= 0 or height <= 0:
        raise ValueError(f"extent must be positive, got {spec.extent!r}")
    if spec.line_spacing <= 0 or spec.point_spacing <= 0:
        raise ValueError("spacings must be > 0")
    if not 0 <= spec.outlier_fraction < 1:
        raise ValueError("outlier_fraction must be in [0, 1)")
    if not 0 <= spec.backscan_fraction < 0.5:
        raise ValueError("backscan_fraction must be in [0, 0.5)")
    for i, f in enumerate(spec.features):
        if isinstance(f, (BoxBuilding, GableBuilding, Car)):
            if not (f.x0 < f.x1 and f.y0 < f.y1):
                raise ValueError(f"feature {i}: empty footprint")
            if not (0 <= f.x0 and f.x1 <= width and 0 <= f.y0 and f.y1 <= height):
                raise ValueError(f"feature {i}: footprint outside extent")
            rise = f.ridge_height if isinstance(f, GableBuilding) else f.height
            if rise <= 0:
                raise ValueError(f"feature {i}: height must be > 0")
        if isinstance(f, GableBuilding):
            if not 0 < f.pitch_deg < 90:
                raise ValueError(f"feature {i}: pitch must be in (0, 90) degrees")
            span_x = f.x1 - f.x0
            span_y = f.y1 - f.y0
            half = min(span_x, span_y) / 2.0
            if f.ridge_height - half * np.tan(np.radians(f.pitch_deg)) <= 0:
                raise ValueError(f"feature {i}: eave would reach the ground")
        if isinstance(f, TreeCluster):
            if f.radius <= 0 or not 0 < f.density <= 1 or f.h_low < 0 or f.h_high <= f.h_low:
                raise ValueError(f"feature {i}: bad tree cluster parameters")
        if isinstance(f, Cliff) and not 0 <= f.x0 <= width:
            raise ValueError(f"feature {i}: cliff outside extent")


def _ground_z(spec: SceneSpec, x, y):
    """Bare-earth elevation: terrain plus terrain-shaping features."""
    z = spec.terrain.z(x, y)
    for f in spec.features:
        if isinstance(f, Cliff):
            z = np.where(np.asarray(x) >= f.x0, z + f.drop, z)
    return z


def _gauss_kernel(sigma: float) -> np.ndarray:
    half = max(1, int(np.ceil(4.0 * sigma)))
    k = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-0.5 * (k / sigma) ** 2)
    return w / w.sum()


def _line_noise(rng, n: int, sigma_z: float, corr: float) -> np.ndarray:
    """Gaussian noise with marginal std sigma_z, smoothed along the line."""
    raw = rng.standard_normal(n)
    if corr <= 0 or n < 3:
        return sigma_z * raw
    w = _gauss_kernel(corr)
    half = (w.shape[0] - 1) // 2
    padded = np.pad(raw, half, mode="reflect")
    smooth = np.convolve(padded, w, mode="valid")
    return sigma_z * smooth / np.sqrt(float(w @ w))


def _wall_x(feature, x_lo: float, x_hi: float):
    """The footprint edge of ``feature`` inside a sample interval.

    Inclusive bounds: a sample landing exactly on the footprint edge still
    crosses the facade.
    """
    for edge in (feature.x0, feature.x1):
        if x_lo <= edge <= x_hi:
            return edge
    return None


def _generate_line(spec: SceneSpec, k: int, y: float, xs_fwd: np.ndarray,
                   rng) -> dict:
    """Emit one scan line in temporal (serpentine) order."""
    reverse = bool(k % 2)
    xs = xs_fwd[::-1].copy() if reverse else xs_fwd.copy()
    n = xs.shape[0]
    ys = np.full(n, y)
    ground = _ground_z(spec, xs, ys)
    z = ground.copy()
    kind = np.full(n, "ground", dtype="U7")
    feat = np.full(n, -1, dtype=np.int64)
    keep = np.ones(n, dtype=bool)
    for i, f in enumerate(spec.features):
        if isinstance(f, Cliff):
            continue
        if isinstance(f, (BoxBuilding, Car)):
            mask = (f.x0 <= xs) & (xs <= f.x1) & (f.y0 <= y <= f.y1)
            if not mask.any():
                continue
            ref = float(_ground_z(spec, np.array([(f.x0 + f.x1) / 2]),
                                  np.array([(f.y0 + f.y1) / 2]))[0])
            z[mask] = ref + f.height
            kind[mask] = "car" if isinstance(f, Car) else "roof"
            feat[mask] = i
            keep[mask] = True
        elif isinstance(f, GableBuilding):
            mask = (f.x0 <= xs) & (xs <= f.x1) & (f.y0 <= y <= f.y1)
            if not mask.any():
                continue
            ref = float(_ground_z(spec, np.array([(f.x0 + f.x1) / 2]),
                                  np.array([(f.y0 + f.y1) / 2]))[0])
            tan = np.tan(np.radians(f.pitch_deg))
            if (f.x1 - f.x0) >= (f.y1 - f.y0):
                dist = np.abs(y - (f.y0 + f.y1) / 2.0)
                roof = ref + f.ridge_height - tan * dist
                z[mask] = roof
            else:
                dist = np.abs(xs[mask] - (f.x0 + f.x1) / 2.0)
                z[mask] = ref + f.ridge_height - tan * dist
            kind[mask] = "roof"
            feat[mask] = i
            keep[mask] = True
        elif isinstance(f, TreeCluster):
            mask = (xs - f.cx) ** 2 + (y - f.cy) ** 2 <= f.radius ** 2
            idx = np.flatnonzero(mask)
            if idx.size == 0:
                continue
            canopy = rng.random(idx.size) < f.density
            hit = idx[canopy]
            z[hit] = ground[hit] + rng.uniform(f.h_low, f.h_high, hit.size)
            kind[hit] = "tree"
            feat[hit] = i
            keep[hit] = True
            # absorbed pulses: no return at all
            keep[idx[~canopy]] = False

    xs, ys, z, kind, feat = (a[keep] for a in (xs, ys, z, kind, feat))

    # facade returns where the beam crosses a tall roof edge
    step_sign = -1.0 if reverse else 1.0
    roof = kind == "roof"
    jump_at = np.flatnonzero(
        (np.abs(np.diff(z)) > _WALL_MIN_JUMP) & (roof[:-1] != roof[1:])
    ) if xs.shape[0] > 1 else np.array([], dtype=np.int64)
    px, py, pz, pkind, pfeat = [], [], [], [], []
    start = 0
    for a in jump_at:
        b = a + 1
        owner_idx = int(feat[a] if roof[a] else feat[b])
        lo, hi = sorted((xs[a], xs[b]))
        xw = _wall_x(spec.features[owner_idx], lo, hi)
        if xw is None:
            continue
        z_lo, z_hi = sorted((z[a], z[b]))
        levels = np.arange(z_lo + spec.point_spacing,
                           z_hi - spec.point_spacing / 2,
                           spec.point_spacing)
        if levels.size == 0:
            continue
        if z[b] < z[a]:
            levels = levels[::-1]
        smear = np.linspace(-_WALL_XY_SMEAR, _WALL_XY_SMEAR,
                            levels.size) * step_sign
        px.extend((xs[start:b], xw + smear))
        py.extend((ys[start:b], np.full(levels.size, y)))
        pz.extend((z[start:b], levels))
        pkind.extend((kind[start:b], np.full(levels.size, "wall", dtype="U7")))
        pfeat.extend((feat[start:b], np.full(levels.size, owner_idx, dtype=np.int64)))
        start = b
    px.append(xs[start:])
    py.append(ys[start:])
    pz.append(z[start:])
    pkind.append(kind[start:])
    pfeat.append(feat[start:])

    lx = np.concatenate(px)
    ly = np.concatenate(py)
    lz = np.concatenate(pz)
    lkind = np.concatenate(pkind)
    lfeat = np.concatenate(pfeat)
    lz = lz + _line_noise(rng, lz.shape[0], spec.noise_sigma_z,
                          spec.noise_corr_samples)

    if spec.backscan_fraction > 0 and lx.shape[0] > 4:
        m = lx.shape[0]
        count = int(round(spec.backscan_fraction * m))
        if count:
            picks = rng.choice(np.arange(2, m), size=min(count, m - 2),
                               replace=False)
            for i in np.sort(picks):
                # exact re-scan of an earlier spot: the fold lands on the
                # same plan position, so ordering by the line coordinate
                # leaves a tie that the strict running-maximum rule deletes
                lx[i] = lx[i - 2]
                ly[i] = ly[i - 2]
                lz[i] = lz[i - 2] + rng.normal(0.0, 0.01)
                lkind[i] = lkind[i - 2]
                lfeat[i] = lfeat[i - 2]

    return {"x": lx, "y": ly, "z": lz, "kind": lkind, "feat": lfeat, "line": k}


def generate_scene(spec: SceneSpec) -> SyntheticScene:
    """Sample the scene on serpentine scan lines.

    Lines run along x at constant y, alternating direction; points are
    emitted in temporal order (ids follow the sweep). All randomness comes
    from per-line substreams of ``rng_seed``, so regeneration is exactly
    reproducible and independent of how lines would be scheduled.
    """
    _validate(spec)
    width, height = spec.extent
    xs_fwd = np.arange(0.0, width + spec.point_spacing * 1e-6, spec.point_spacing)
    y_lines = np.arange(0.0, height + spec.line_spacing * 1e-6, spec.line_spacing)
    root = np.random.SeedSequence(spec.rng_seed)
    children = root.spawn(len(y_lines) + 1)
    parts = [
        _generate_line(spec, k, float(y), xs_fwd, np.random.default_rng(children[k]))
        for k in range(len(y_lines))
        for y in (y_lines[k],)
    ]
    x = np.concatenate([p["x"] for p in parts])
    y = np.concatenate([p["y"] for p in parts])
    z = np.concatenate([p["z"] for p in parts])
    kind = np.concatenate([p["kind"] for p in parts])
    feat = np.concatenate([p["feat"] for p in parts])
    scan_line = np.concatenate([
        np.full(p["x"].shape[0], p["line"], dtype=np.int64) for p in parts
    ])

    scene_rng = np.random.default_rng(children[-1])
    if spec.outlier_fraction > 0 and x.shape[0]:
        n_out = int(round(spec.outlier_fraction * x.shape[0]))
        if n_out:
            picks = np.sort(scene_rng.choice(x.shape[0], size=n_out, replace=False))
            signs = scene_rng.choice([-1.0, 1.0], size=n_out)
            z[picks] = z[picks] + signs * spec.outlier_dz
            kind[picks] = "outlier"
            feat[picks] = -1

    truth = np.array([_KIND_TRUTH[k] for k in kind], dtype=np.int8)
    cloud = PointCloud.from_arrays(x, y, z, scan_line)
    return SyntheticScene(cloud=cloud, truth=truth, kind=kind,
                          feature_index=feat, spec=spec)


def standard_town(noise_sigma_z: float = 0.05, outlier_fraction: float = 0.0,
                  rng_seed: int = 42) -> SceneSpec:
    """The 200 x 200 m mixed test town used throughout the test suite.

    Gently ramped terrain with a 3 m terrain step, three flat-roof
    buildings, one 25-degree gable roof, two tree clusters and four cars.
    """
    return SceneSpec(
        extent=(200.0, 200.0),
        line_spacing=0.65,
        point_spacing=0.4,
        terrain=Ramp(slope=0.02),
        features=(
            Cliff(x0=120.0, drop=3.0),
            BoxBuilding(20.0, 20.0, 50.0, 45.0, height=8.0),
            BoxBuilding(75.0, 120.0, 100.0, 150.0, height=6.0),
            BoxBuilding(150.0, 60.0, 175.0, 80.0, height=10.0),
            GableBuilding(30.0, 130.0, 70.0, 160.0, ridge_height=10.0, pitch_deg=25.0),
            TreeCluster(110.0, 60.0, radius=8.0, density=0.85, h_low=2.0, h_high=12.0),
            TreeCluster(160.0, 170.0, radius=10.0, density=0.8, h_low=3.0, h_high=15.0),
            Car(105.0, 25.0, 109.5, 27.0),
            Car(40.0, 95.0, 44.5, 97.0),
            Car(60.0, 170.0, 64.5, 172.0),
            Car(130.0, 30.0, 134.5, 32.0),
        ),
        noise_sigma_z=noise_sigma_z,
        outlier_fraction=outlier_fraction,
        outlier_dz=50.0,
        rng_seed=rng_seed,
    )


# ---------------------------------------------------------------------------
# scene and truth I/O


def write_xyzl(path, cloud: PointCloud) -> None:
    """Write ``x y z scan_line_id`` rows in point order."""
    with open(path, "w") as fh:
        for i in range(len(cloud)):
            fh.write(f"{cloud.x[i]:.3f} {cloud.y[i]:.3f} {cloud.z[i]:.3f} "
                     f"{int(cloud.scan_line[i])}\n")


def write_truth(path, truth: np.ndarray) -> None:
    """Write ``id truth_label`` rows (1 ground, 0 non-ground)."""
    with open(path, "w") as fh:
        for i, t in enumerate(np.asarray(truth)):
            fh.write(f"{i} {int(t)}\n")


def read_truth(path) -> np.ndarray:
    ids, labels = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: expected 'id truth_label'")
            ids.append(int(parts[0]))
            labels.append(int(parts[1]))
    out = np.zeros(len(ids), dtype=np.int8)
    out[np.array(ids, dtype=np.int64)] = np.array(labels, dtype=np.int8)
    return out


_TERRAIN_TAGS = {"flat": Flat, "ramp": Ramp, "hill": Hill}


def _format_terrain(t: Terrain) -> str:
    if isinstance(t, Flat):
        return "flat"
    if isinstance(t, Ramp):
        return f"ramp {t.slope:g}"
    if isinstance(t, Hill):
        return f"hill {t.amplitude:g} {t.wavelength:g}"
    raise ValueError(f"unknown terrain {t!r}")


def _format_feature(f: Feature) -> str:
    if isinstance(f, Cliff):
        return f"cliff {f.x0:g} {f.drop:g}"
    if isinstance(f, BoxBuilding):
        return f"box {f.x0:g} {f.y0:g} {f.x1:g} {f.y1:g} {f.height:g}"
    if isinstance(f, GableBuilding):
        return (f"gable {f.x0:g} {f.y0:g} {f.x1:g} {f.y1:g} "
                f"{f.ridge_height:g} {f.pitch_deg:g}")
    if isinstance(f, TreeCluster):
        return (f"trees {f.cx:g} {f.cy:g} {f.radius:g} {f.density:g} "
                f"{f.h_low:g} {f.h_high:g}")
    if isinstance(f, Car):
        return f"car {f.x0:g} {f.y0:g} {f.x1:g} {f.y1:g} {f.height:g}"
    raise ValueError(f"unknown feature {f!r}")


def write_scene_spec(path, spec: SceneSpec) -> None:
    """Write the key=value scene description (``feature`` keys repeat)."""
    with open(path, "w") as fh:
        fh.write(f"extent = {spec.extent[0]:g} {spec.extent[1]:g}\n")
        fh.write(f"line_spacing = {spec.line_spacing:g}\n")
        fh.write(f"point_spacing = {spec.point_spacing:g}\n")
        fh.write(f"terrain = {_format_terrain(spec.terrain)}\n")
        fh.write(f"noise_sigma_z = {spec.noise_sigma_z:g}\n")
        fh.write(f"noise_corr_samples = {spec.noise_corr_samples:g}\n")
        fh.write(f"outlier_fraction = {spec.outlier_fraction:g}\n")
        fh.write(f"outlier_dz = {spec.outlier_dz:g}\n")
        fh.write(f"backscan_fraction = {spec.backscan_fraction:g}\n")
        fh.write(f"rng_seed = {spec.rng_seed}\n")
        for f in spec.features:
            fh.write(f"feature = {_format_feature(f)}\n")


def _parse_feature(args: list[str], lineno: int) -> Feature:
    tag, vals = args[0], [float(v) for v in args[1:]]
    try:
        if tag == "cliff" and len(vals) == 2:
            return Cliff(*vals)
        if tag == "box" and len(vals) == 5:
            return BoxBuilding(*vals)
        if tag == "gable" and len(vals) == 6:
            return GableBuilding(*vals)
        if tag == "trees" and len(vals) == 6:
            return TreeCluster(*vals)
        if tag == "car" and len(vals) in (4, 5):
            return Car(*vals)
    except TypeError:
        pass
    raise ParseError(f"line {lineno}: bad feature spec {' '.join(args)!r}")


def read_scene_spec(path) -> SceneSpec:
    """Parse a key=value scene description written by :func:`write_scene_spec`."""
    spec = SceneSpec()
    features: list[Feature] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in text.split("=", 1))
            parts = value.split()
            try:
                if key == "extent":
                    spec = replace(spec, extent=(float(parts[0]), float(parts[1])))
                elif key == "line_spacing":
                    spec = replace(spec, line_spacing=float(value))
                elif key == "point_spacing":
                    spec = replace(spec, point_spacing=float(value))
                elif key == "terrain":
                    cls = _TERRAIN_TAGS[parts[0]]
                    spec = replace(spec, terrain=cls(*[float(v) for v in parts[1:]]))
                elif key == "noise_sigma_z":
                    spec = replace(spec, noise_sigma_z=float(value))
                elif key == "noise_corr_samples":
                    spec = replace(spec, noise_corr_samples=float(value))
                elif key == "outlier_fraction":
                    spec = replace(spec, outlier_fraction=float(value))
                elif key == "outlier_dz":
                    spec = replace(spec, outlier_dz=float(value))
                elif key == "backscan_fraction":
                    spec = replace(spec, backscan_fraction=float(value))
                elif key == "rng_seed":
                    spec = replace(spec, rng_seed=int(value))
                elif key == "feature":
                    features.append(_parse_feature(parts, lineno))
                else:
                    raise ParseError(f"line {lineno}: unknown key {key!r}")
            except (ValueError, IndexError, KeyError) as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
    return replace(spec, features=tuple(features))
