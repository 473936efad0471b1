"""Point-cloud ingest: parsing, scan-line extraction, back-scan removal.

Points arrive either as whitespace-delimited text rows ``x y z scan_line_id``
or as a small binary subset of LAS 1.2 (point formats 0 and 1). Each scan
line gets a dominant horizontal direction and a 1-D ``along`` coordinate by
projection, points are ordered along that direction, and points that fold
back against the sweep (or sit on top of each other) are removed before
segmentation.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import ParseError

__all__ = [
    "Label",
    "PointRecord",
    "PointCloud",
    "ScanLine",
    "parse_points",
    "parse_xyzl",
    "parse_las",
    "extract_scan_lines",
    "remove_backscan",
    "prepare_scan_lines",
]


class Label(IntEnum):
    """Per-point classification state.

    The three final states use the on-disk integer codes directly; UNLABELED
    exists only while the filter is running and never survives a full run.
    """

    UNLABELED = -2
    UNCLASSIFIED = -1
    NONGROUND = 0
    GROUND = 1


@dataclass(frozen=True)
class PointRecord:
    """Single-point view into a :class:`PointCloud`."""

    id: int
    x: float
    y: float
    z: float
    scan_line: int
    dir_flag: int
    eol_flag: int
    label: Label


@dataclass
class PointCloud:
    """Column-oriented point storage; ids are positions in the arrays."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    scan_line: np.ndarray
    dir_flag: np.ndarray
    eol_flag: np.ndarray
    label: np.ndarray

    @classmethod
    def from_arrays(cls, x, y, z, scan_line, dir_flag=None, eol_flag=None) -> "PointCloud":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        scan_line = np.asarray(scan_line, dtype=np.int64)
        n = x.shape[0]
        if not (y.shape[0] == z.shape[0] == scan_line.shape[0] == n):
            raise ValueError("coordinate and scan_line arrays must share one length")
        if dir_flag is None:
            dir_flag = (scan_line % 2).astype(np.uint8)
        if eol_flag is None:
            eol_flag = np.zeros(n, dtype=np.uint8)
            if n:
                # end of a line wherever the next row belongs to another line
                eol_flag[:-1] = (scan_line[1:] != scan_line[:-1]).astype(np.uint8)
                eol_flag[-1] = 1
        return cls(
            x=x, y=y, z=z, scan_line=scan_line,
            dir_flag=np.asarray(dir_flag, dtype=np.uint8),
            eol_flag=np.asarray(eol_flag, dtype=np.uint8),
            label=np.full(n, int(Label.UNLABELED), dtype=np.int8),
        )

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def record(self, i: int) -> PointRecord:
        return PointRecord(
            id=int(i), x=float(self.x[i]), y=float(self.y[i]), z=float(self.z[i]),
            scan_line=int(self.scan_line[i]), dir_flag=int(self.dir_flag[i]),
            eol_flag=int(self.eol_flag[i]), label=Label(int(self.label[i])),
        )

    def copy(self) -> "PointCloud":
        return PointCloud(
            x=self.x.copy(), y=self.y.copy(), z=self.z.copy(),
            scan_line=self.scan_line.copy(), dir_flag=self.dir_flag.copy(),
            eol_flag=self.eol_flag.copy(), label=self.label.copy(),
        )


@dataclass
class ScanLine:
    """One scan line: point ids plus the fitted direction and 1-D coordinate.

    Attributes:
        line_id: the scan_line value shared by the member points.
        point_ids: indices into the parent cloud.
        axis: unit 2-vector of the dominant horizontal direction.
        along: projection of each member point onto ``axis``, aligned with
            ``point_ids``.
    """

    line_id: int
    point_ids: np.ndarray
    axis: np.ndarray
    along: np.ndarray

    @property
    def n(self) -> int:
        return self.point_ids.shape[0]

    @property
    def degenerate(self) -> bool:
        """Lines with fewer than three points cannot be segmented."""
        return self.n < 3


# ---------------------------------------------------------------------------
# parsing


def _open_maybe(source, mode: str):
    if isinstance(source, (str, os.PathLike)):
        return open(source, mode), True
    return source, False


def parse_xyzl(source) -> PointCloud:
    """Parse whitespace-delimited rows ``x y z scan_line_id``.

    Blank lines and lines starting with ``#`` are ignored. Raises
    :class:`ParseError` naming the offending line for malformed rows and for
    non-finite coordinates.
    """
    stream, close = _open_maybe(source, "r")
    xs, ys, zs, lines = [], [], [], []
    try:
        for lineno, raw in enumerate(stream, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 4:
                raise ParseError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            try:
                x, y, z = float(parts[0]), float(parts[1]), float(parts[2])
                sl = int(parts[3])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
            if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
                raise ParseError(
                    f"line {lineno}: non-finite coordinate for point id {len(xs)}"
                )
            xs.append(x)
            ys.append(y)
            zs.append(z)
            lines.append(sl)
    finally:
        if close:
            stream.close()
    return PointCloud.from_arrays(
        np.array(xs, dtype=np.float64),
        np.array(ys, dtype=np.float64),
        np.array(zs, dtype=np.float64),
        np.array(lines, dtype=np.int64),
    )


_LAS_MAGIC = b"LASF"
# header byte offsets (1.2 public header block)
_OFF_VERSION = 24
_OFF_HEADER_SIZE = 94
_OFF_POINT_OFFSET = 96
_OFF_FORMAT = 104
_OFF_RECORD_LEN = 105
_OFF_NPOINTS = 107
_OFF_SCALES = 131
_MIN_HEADER = 227
_POINT_SIZES = {0: 20, 1: 28}


def parse_las(source) -> PointCloud:
    """Parse the supported LAS 1.2 subset (point formats 0 and 1).

    Coordinates are de-quantized with the header scale/offset. The scan
    direction bit becomes ``dir_flag``; a new scan line starts after each
    point with the edge-of-flight-line bit set.
    """
    stream, close = _open_maybe(source, "rb")
    try:
        data = stream.read()
    finally:
        if close:
            stream.close()
    if len(data) < _MIN_HEADER:
        raise ParseError("LAS data shorter than the 1.x public header")
    if data[:4] != _LAS_MAGIC:
        raise ParseError("bad LAS signature (expected 'LASF')")
    major, minor = data[_OFF_VERSION], data[_OFF_VERSION + 1]
    if major != 1:
        raise ParseError(f"unsupported LAS version {major}.{minor}")
    fmt = data[_OFF_FORMAT] & 0x3F
    if fmt not in _POINT_SIZES:
        raise ParseError(f"unsupported point data format {fmt} (supported: 0, 1)")
    (record_len,) = struct.unpack_from("<H", data, _OFF_RECORD_LEN)
    (npoints,) = struct.unpack_from("<I", data, _OFF_NPOINTS)
    (point_offset,) = struct.unpack_from("<I", data, _OFF_POINT_OFFSET)
    if record_len < _POINT_SIZES[fmt]:
        raise ParseError(
            f"point record length {record_len} too small for format {fmt}"
        )
    scales = struct.unpack_from("<6d", data, _OFF_SCALES)
    sx, sy, sz, ox, oy, oz = scales
    end = point_offset + npoints * record_len
    if end > len(data):
        raise ParseError("LAS point data truncated")
    rec = np.dtype({
        "names": ["xi", "yi", "zi", "flags"],
        "formats": ["<i4", "<i4", "<i4", "u1"],
        "offsets": [0, 4, 8, 14],
        "itemsize": record_len,
    })
    pts = np.frombuffer(data, dtype=rec, count=npoints, offset=point_offset)
    x = pts["xi"] * sx + ox
    y = pts["yi"] * sy + oy
    z = pts["zi"] * sz + oz
    dir_flag = ((pts["flags"] >> 6) & 1).astype(np.uint8)
    eol = ((pts["flags"] >> 7) & 1).astype(np.uint8)
    scan_line = np.zeros(npoints, dtype=np.int64)
    if npoints > 1:
        scan_line[1:] = np.cumsum(eol[:-1])
    return PointCloud.from_arrays(x, y, z, scan_line, dir_flag=dir_flag, eol_flag=eol)


def parse_points(source, fmt: str = "xyzl") -> PointCloud:
    """Parse points from ``source`` in the named format (``xyzl`` or ``las``)."""
    if fmt == "xyzl":
        return parse_xyzl(source)
    if fmt == "las":
        return parse_las(source)
    raise ValueError(f"unknown point format {fmt!r} (expected 'xyzl' or 'las')")


# ---------------------------------------------------------------------------
# scan-line extraction


def _fit_axis(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Dominant horizontal direction of one line as a unit 2-vector.

    Least-squares fit (leading principal direction of the xy scatter);
    falls back to the first-to-last chord when the scatter is degenerate,
    and to +x when even the chord vanishes.
    """
    n = x.shape[0]
    chord = np.array([x[-1] - x[0], y[-1] - y[0]]) if n >= 2 else np.zeros(2)
    axis = None
    if n >= 3:
        xc = x - x.mean()
        yc = y - y.mean()
        sxx = float(xc @ xc)
        syy = float(yc @ yc)
        sxy = float(xc @ yc)
        cov = np.array([[sxx, sxy], [sxy, syy]])
        scale = sxx + syy
        if scale > 0:
            evals, evecs = np.linalg.eigh(cov)
            # eigh sorts ascending; require a clearly dominant direction
            if evals[1] - evals[0] > 1e-12 * scale:
                axis = evecs[:, 1]
    if axis is None:
        norm = float(np.hypot(chord[0], chord[1]))
        axis = chord / norm if norm > 0 else np.array([1.0, 0.0])
    # orient with the temporal sweep so a reversed line sorts itself out
    sweep = float(axis @ chord)
    if sweep < 0:
        axis = -axis
    elif sweep == 0 and (axis[0] < 0 or (axis[0] == 0 and axis[1] < 0)):
        axis = -axis
    return np.asarray(axis, dtype=np.float64)


def extract_scan_lines(cloud: PointCloud) -> list[ScanLine]:
    """Group points by scan_line and order each line along its direction.

    Returns one :class:`ScanLine` per distinct scan_line value (ascending),
    including degenerate lines of fewer than three points. Member point ids
    are sorted by ``along`` with a stable tie-break on input order, so the
    union over all lines is exactly the input id set.
    """
    order = np.argsort(cloud.scan_line, kind="stable")
    sorted_ids = cloud.scan_line[order]
    boundaries = np.flatnonzero(np.diff(sorted_ids)) + 1
    groups = np.split(order, boundaries)
    out: list[ScanLine] = []
    for ids in groups:
        x = cloud.x[ids]
        y = cloud.y[ids]
        axis = _fit_axis(x, y)
        along = axis[0] * x + axis[1] * y
        rank = np.argsort(along, kind="stable")
        out.append(ScanLine(
            line_id=int(cloud.scan_line[ids[0]]),
            point_ids=ids[rank].astype(np.int64),
            axis=axis,
            along=along[rank],
        ))
    return out


def remove_backscan(line: ScanLine, cloud: PointCloud | None = None,
                    tol: float = 0.0) -> ScanLine:
    """Delete points that fold back against the sweep direction.

    Scans the stored order keeping a running maximum of ``along``; a point
    survives only when its ``along`` exceeds that maximum minus ``tol``.
    With the default ``tol=0`` the result is strictly increasing, which also
    drops exact duplicates. Removed points are marked Unclassified in
    ``cloud`` when one is supplied.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    n = line.n
    if n == 0:
        return line
    keep = np.ones(n, dtype=bool)
    if n > 1:
        runmax = np.maximum.accumulate(line.along)
        keep[1:] = line.along[1:] > runmax[:-1] - tol
    if cloud is not None and not keep.all():
        cloud.label[line.point_ids[~keep]] = int(Label.UNCLASSIFIED)
    return ScanLine(
        line_id=line.line_id,
        point_ids=line.point_ids[keep],
        axis=line.axis,
        along=line.along[keep],
    )


def prepare_scan_lines(cloud: PointCloud, tol: float = 0.0) -> list[ScanLine]:
    """Extract lines and clean each one; degenerate lines stay Unclassified.

    Convenience wrapper used by the full pipeline: every returned line has
    strictly increasing ``along``; members of degenerate lines (fewer than
    three points after cleaning) are labeled Unclassified because they
    cannot enter segmentation.
    """
    lines = [remove_backscan(ln, cloud, tol=tol) for ln in extract_scan_lines(cloud)]
    for ln in lines:
        if ln.degenerate and ln.n:
            cloud.label[ln.point_ids] = int(Label.UNCLASSIFIED)
    return lines
