"""Estimate sensor noise and derive a slope-difference threshold from it.

The elevation noise of the sensor is estimated as the residual spread of a
plane fit over a flat patch, the point spacing as the mean along-line gap.
From these the module computes the slope-difference noise level in two
forms: the working estimate ``2 * sigma_z / sqrt(d)`` and, for diagnosis,
the exact white-noise propagation ``sqrt(6) * sigma_z / d`` of the discrete
second derivative at uniform spacing. The suggested deletion threshold is
the two-sigma bound of the working estimate; both forms are surfaced so the
two can be compared on real data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError
from .ingest import ScanLine

__all__ = [
    "NoiseEstimate",
    "estimate_sigma_z",
    "estimate_point_spacing",
    "sigma_dslope",
    "propagated_sigma_dslope",
    "suggest_tdslope",
    "empirical_dslope_sigma",
    "estimate_noise",
]


@dataclass(frozen=True)
class NoiseEstimate:
    """Noise summary for one dataset.

    Attributes:
        sigma_z: elevation noise standard deviation (m).
        d_points: mean along-line point spacing (m).
        sigma_dslope: slope-difference noise level, ``2*sigma_z/sqrt(d)``.
        suggested_tdslope: two-sigma deletion threshold, ``2*sigma_dslope``.
    """

    sigma_z: float
    d_points: float
    sigma_dslope: float
    suggested_tdslope: float

    @property
    def sigma_dslope_propagated(self) -> float:
        """White-noise propagation value ``sqrt(6)*sigma_z/d`` for comparison."""
        return propagated_sigma_dslope(self.sigma_z, self.d_points)


def estimate_sigma_z(x, y, z) -> float:
    """Sample standard deviation of residuals from the best-fit plane.

    Args:
        x, y, z: coordinates of a nominally flat patch, at least 10 points.

    Raises:
        ValueError: with fewer than 10 points.
        DegenerateGeometryError: when the patch is collinear in plan view,
            so no unique plane exists.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape[0] < 10:
        raise ValueError(f"plane fit needs at least 10 points, got {x.shape[0]}")
    design = np.column_stack([x, y, np.ones_like(x)])
    coef, _, rank, _ = np.linalg.lstsq(design, z, rcond=None)
    if rank < 3:
        raise DegenerateGeometryError("patch is collinear; plane fit is degenerate")
    residuals = z - design @ coef
    return float(np.std(residuals, ddof=1))


def estimate_point_spacing(lines: list[ScanLine]) -> float:
    """Mean gap between consecutive along values over all scan lines."""
    gaps = [np.diff(line.along) for line in lines if line.n >= 2]
    if not gaps:
        raise ValueError("no scan line with at least two points")
    allgaps = np.concatenate(gaps)
    return float(allgaps.mean())


def sigma_dslope(sigma_z: float, d: float) -> float:
    """Working slope-difference noise level ``2 * sigma_z / sqrt(d)``."""
    if d <= 0:
        raise ValueError("point spacing must be > 0")
    return 2.0 * sigma_z / float(np.sqrt(d))


def propagated_sigma_dslope(sigma_z: float, d: float) -> float:
    """Exact std of the slope difference under white noise at spacing d.

    The slope difference of three evenly spaced points is
    ``(z2 - 2*z1 + z0) / d``; independent noise of std sigma_z on each
    elevation therefore yields ``sqrt(6) * sigma_z / d``.
    """
    if d <= 0:
        raise ValueError("point spacing must be > 0")
    return float(np.sqrt(6.0)) * sigma_z / d


def suggest_tdslope(sd: float) -> float:
    """Deletion threshold at the two-sigma (95%) bound of the noise level."""
    return 2.0 * sd


def empirical_dslope_sigma(sigma_z: float, d: float, n: int = 100_000,
                           rng=None) -> float:
    """Monte-Carlo std of the slope difference on flat triples.

    Draws ``n`` independent triples of elevations ``N(0, sigma_z**2)`` at
    uniform horizontal spacing ``d`` and returns the sample std of their
    slope differences. Converges to :func:`propagated_sigma_dslope`.
    """
    rng = rng or np.random.default_rng(0)
    z = rng.normal(0.0, sigma_z, size=(n, 3))
    ds = (z[:, 2] - z[:, 1]) / d - (z[:, 1] - z[:, 0]) / d
    return float(np.std(ds, ddof=1))


def estimate_noise(x, y, z, lines: list[ScanLine]) -> NoiseEstimate:
    """Build a :class:`NoiseEstimate` from a flat patch and the scan lines."""
    sz = estimate_sigma_z(x, y, z)
    d = estimate_point_spacing(lines)
    sd = sigma_dslope(sz, d)
    return NoiseEstimate(
        sigma_z=sz, d_points=d, sigma_dslope=sd,
        suggested_tdslope=suggest_tdslope(sd),
    )
