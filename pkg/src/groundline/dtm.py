"""Raster terrain model: build from ground points, interpolate, export.

Cells take the minimum ground elevation of the points they contain; cells
without any ground point are filled on demand by inverse-distance-weighted
interpolation from the nearest populated cell centers. The grid exports as
an ESRI ASCII grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import SeedSelectionError

__all__ = [
    "DtmGrid",
    "build_dtm",
    "interpolate",
    "interpolate_many",
    "point_dtm_dz",
    "point_dtm_dz_many",
    "write_esri_ascii",
]

_IDW_NEIGHBORS = 8
_IDW_POWER = 2.0


@dataclass
class DtmGrid:
    """Regular raster of minimum ground elevations.

    Row 0 is the southernmost row (origin is the lower-left corner);
    ``elev`` is NaN where ``valid`` is False.
    """

    origin_x: float
    origin_y: float
    cell_size: float
    ncols: int
    nrows: int
    elev: np.ndarray
    valid: np.ndarray
    _tree: cKDTree | None = field(default=None, repr=False, compare=False)
    _valid_elev: np.ndarray | None = field(default=None, repr=False, compare=False)

    def cell_of(self, x, y):
        """Column/row of the cells containing the query positions (clipped)."""
        col = np.clip(((np.asarray(x) - self.origin_x) // self.cell_size).astype(np.int64),
                      0, self.ncols - 1)
        row = np.clip(((np.asarray(y) - self.origin_y) // self.cell_size).astype(np.int64),
                      0, self.nrows - 1)
        return col, row

    def _ensure_tree(self):
        if self._tree is None:
            rows, cols = np.nonzero(self.valid)
            cx = self.origin_x + (cols + 0.5) * self.cell_size
            cy = self.origin_y + (rows + 0.5) * self.cell_size
            self._tree = cKDTree(np.column_stack([cx, cy]))
            self._valid_elev = self.elev[rows, cols]
        return self._tree, self._valid_elev


def build_dtm(x, y, z, cell_size: float, bounds: tuple[float, float, float, float]) -> DtmGrid:
    """Rasterize ground points to per-cell minimum elevations.

    Args:
        x, y, z: coordinates of the ground points.
        cell_size: cell edge length in meters.
        bounds: (xmin, ymin, xmax, ymax) extent the grid must cover; points
            on the upper edges fall into the last row/column.

    Raises:
        SeedSelectionError: if no ground points are given (an empty terrain
            model cannot seed anything).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.size == 0:
        raise SeedSelectionError("cannot build a terrain model from zero ground points")
    if cell_size <= 0:
        raise ValueError("cell_size must be > 0")
    xmin, ymin, xmax, ymax = bounds
    if xmax < xmin or ymax < ymin:
        raise ValueError(f"invalid bounds {bounds!r}")
    ncols = max(1, int(np.ceil((xmax - xmin) / cell_size - 1e-9)))
    nrows = max(1, int(np.ceil((ymax - ymin) / cell_size - 1e-9)))
    col = np.clip(((x - xmin) // cell_size).astype(np.int64), 0, ncols - 1)
    row = np.clip(((y - ymin) // cell_size).astype(np.int64), 0, nrows - 1)
    elev = np.full((nrows, ncols), np.inf)
    np.minimum.at(elev, (row, col), z)
    valid = np.isfinite(elev)
    elev[~valid] = np.nan
    return DtmGrid(
        origin_x=float(xmin), origin_y=float(ymin), cell_size=float(cell_size),
        ncols=ncols, nrows=nrows, elev=elev, valid=valid,
    )


def interpolate_many(dtm: DtmGrid, x, y) -> np.ndarray:
    """Terrain elevation under each query position.

    Positions over a populated cell take that cell's elevation; positions
    over empty cells get an inverse-distance-squared weighted mean of the
    nearest populated cell centers (up to 8, fewer if the grid has fewer).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    col, row = dtm.cell_of(x, y)
    out = dtm.elev[row, col].copy()
    missing = ~dtm.valid[row, col]
    if missing.any():
        tree, valid_elev = dtm._ensure_tree()
        k = min(_IDW_NEIGHBORS, valid_elev.shape[0])
        dists, idx = tree.query(np.column_stack([x[missing], y[missing]]), k=k)
        dists = np.atleast_2d(dists)
        idx = np.atleast_2d(idx)
        exact = dists[:, 0] < 1e-12
        with np.errstate(divide="ignore"):
            w = 1.0 / dists ** _IDW_POWER
        est = np.einsum("ij,ij->i", w, valid_elev[idx]) / w.sum(axis=1)
        est[exact] = valid_elev[idx[exact, 0]]
        out[missing] = est
    return out


def interpolate(dtm: DtmGrid, x: float, y: float) -> float:
    """Scalar convenience wrapper around :func:`interpolate_many`."""
    return float(interpolate_many(dtm, [x], [y])[0])


def point_dtm_dz(dtm: DtmGrid, p) -> float:
    """Signed height of one point above the interpolated terrain."""
    return float(p.z) - interpolate(dtm, float(p.x), float(p.y))


def point_dtm_dz_many(dtm: DtmGrid, x, y, z) -> np.ndarray:
    return np.asarray(z, dtype=np.float64) - interpolate_many(dtm, x, y)


def write_esri_ascii(dtm: DtmGrid, path, nodata: float = -9999.0) -> None:
    """Write the grid as an ESRI ASCII raster (north row first)."""
    lines = [
        f"ncols {dtm.ncols}",
        f"nrows {dtm.nrows}",
        f"xllcorner {dtm.origin_x:.3f}",
        f"yllcorner {dtm.origin_y:.3f}",
        f"cellsize {dtm.cell_size:.3f}",
        f"NODATA_value {nodata:g}",
    ]
    body = []
    for r in range(dtm.nrows - 1, -1, -1):
        row = [
            f"{dtm.elev[r, c]:.3f}" if dtm.valid[r, c] else f"{nodata:g}"
            for c in range(dtm.ncols)
        ]
        body.append(" ".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines + body) + "\n")
