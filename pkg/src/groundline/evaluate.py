"""Scoring filter output against ground truth, comparing runs, sweeps.

Type I errors reject true ground points (ground labeled non-ground);
Type II errors accept true non-ground points as ground. Rates are
reported per truth class, either over the points the filter actually
classified (``evaluated="segmented"``) or over every point, where a
true ground point left Unclassified also counts as rejected ground
(``evaluated="all"``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .filtering import run_filter
from .ingest import Label, PointCloud, prepare_scan_lines
from .params import FilterParams
from .regions import build_similarity_graph, extract_regions
from .segments import segment_scan_lines

__all__ = [
    "ErrorReport",
    "error_report",
    "format_error_report",
    "OVERLAY_ORDER",
    "overlay_compare",
    "SweepResult",
    "sensitivity_sweep",
    "sweep_to_csv",
]


@dataclass(frozen=True)
class ErrorReport:
    """Confusion summary of one filter run against truth labels."""

    evaluated: str
    n_points: int
    n_evaluated: int
    n_unclassified: int
    n_ground_truth: int
    n_nonground_truth: int
    n_type1: int
    n_type2: int

    @property
    def type1_rate(self) -> float:
        """Fraction of evaluated true-ground points labeled non-ground."""
        return self.n_type1 / self.n_ground_truth if self.n_ground_truth else 0.0

    @property
    def type2_rate(self) -> float:
        """Fraction of evaluated true-non-ground points labeled ground."""
        return self.n_type2 / self.n_nonground_truth if self.n_nonground_truth else 0.0

    @property
    def total_error_rate(self) -> float:
        return (self.n_type1 + self.n_type2) / self.n_evaluated if self.n_evaluated else 0.0


def error_report(pred: np.ndarray, truth: np.ndarray,
                 evaluated: str = "segmented") -> ErrorReport:
    """Score predicted labels {1, 0, -1} against truth labels {1, 0}.

    ``evaluated="segmented"`` drops Unclassified predictions from every
    denominator; ``evaluated="all"`` keeps them, counting an Unclassified
    true-ground point as a Type I error (the point was not recovered as
    ground) and an Unclassified true-non-ground point as correctly
    excluded.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if evaluated not in ("segmented", "all"):
        raise ValueError(f"evaluated must be 'segmented' or 'all', got {evaluated!r}")
    unclassified = pred == int(Label.UNCLASSIFIED)
    if evaluated == "segmented":
        use = ~unclassified
        n_type1 = int(np.count_nonzero(use & (truth == 1) & (pred == int(Label.NONGROUND))))
    else:
        use = np.ones(pred.shape, dtype=bool)
        n_type1 = int(np.count_nonzero((truth == 1) & (pred != int(Label.GROUND))))
    n_type2 = int(np.count_nonzero(use & (truth == 0) & (pred == int(Label.GROUND))))
    return ErrorReport(
        evaluated=evaluated,
        n_points=int(pred.shape[0]),
        n_evaluated=int(np.count_nonzero(use)),
        n_unclassified=int(np.count_nonzero(unclassified)),
        n_ground_truth=int(np.count_nonzero(use & (truth == 1))),
        n_nonground_truth=int(np.count_nonzero(use & (truth == 0))),
        n_type1=n_type1,
        n_type2=n_type2,
    )


def format_error_report(report: ErrorReport) -> str:
    lines = [
        f"evaluated set      {report.evaluated} "
        f"({report.n_evaluated}/{report.n_points} points)",
        f"unclassified       {report.n_unclassified}",
        f"truth ground       {report.n_ground_truth}",
        f"truth non-ground   {report.n_nonground_truth}",
        f"type I  (ground rejected)       {report.n_type1:8d}  "
        f"rate {report.type1_rate:.4f}",
        f"type II (non-ground accepted)   {report.n_type2:8d}  "
        f"rate {report.type2_rate:.4f}",
        f"total error rate   {report.total_error_rate:.4f}",
    ]
    return "\n".join(lines)


OVERLAY_ORDER = (Label.GROUND, Label.NONGROUND, Label.UNCLASSIFIED)


def overlay_compare(pred_a: np.ndarray, pred_b: np.ndarray) -> np.ndarray:
    """3x3 agreement fractions between two label arrays.

    Rows index run A, columns run B, both ordered
    [Ground, NonGround, Unclassified]; entries sum to 1.
    """
    pred_a = np.asarray(pred_a)
    pred_b = np.asarray(pred_b)
    if pred_a.shape != pred_b.shape:
        raise ValueError(f"shape mismatch: {pred_a.shape} vs {pred_b.shape}")
    out = np.zeros((3, 3), dtype=np.float64)
    n = pred_a.shape[0]
    if n == 0:
        return out
    for i, la in enumerate(OVERLAY_ORDER):
        in_a = pred_a == int(la)
        for j, lb in enumerate(OVERLAY_ORDER):
            out[i, j] = np.count_nonzero(in_a & (pred_b == int(lb))) / n
    return out


@dataclass(frozen=True)
class SweepResult:
    """Structure counts as one threshold moves across a range of values."""

    parameter: str
    values: tuple[float, ...]
    segment_counts: tuple[int, ...]
    region_counts: tuple[int, ...]


def sensitivity_sweep(cloud: PointCloud, parameter: str, values,
                      params: FilterParams | None = None,
                      threads: int = 1) -> SweepResult:
    """Re-run segmentation and region merging for each parameter value.

    ``parameter`` must name a FilterParams field. The input cloud is not
    modified; each value gets a fresh copy so deletions cannot leak
    between runs.
    """
    params = params or FilterParams()
    if parameter not in {f.name for f in dataclasses.fields(FilterParams)}:
        raise ValueError(f"unknown parameter {parameter!r}")
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError("values must be non-empty")
    seg_counts: list[int] = []
    region_counts: list[int] = []
    for value in values:
        trial = params.replace(**{parameter: value})
        work = cloud.copy()
        work.label[:] = int(Label.UNLABELED)
        lines = prepare_scan_lines(work)
        segments = segment_scan_lines(work, lines, trial, threads=threads)
        graph = build_similarity_graph(segments, trial)
        regions = extract_regions(graph, segments)
        seg_counts.append(len(segments))
        region_counts.append(len(regions))
    return SweepResult(parameter=parameter, values=values,
                       segment_counts=tuple(seg_counts),
                       region_counts=tuple(region_counts))


def sweep_to_csv(result: SweepResult) -> str:
    rows = [f"{result.parameter},segments,regions"]
    for v, s, r in zip(result.values, result.segment_counts, result.region_counts):
        rows.append(f"{v:g},{s},{r}")
    return "\n".join(rows) + "\n"


def evaluate_run(cloud: PointCloud, truth: np.ndarray,
                 params: FilterParams | None = None, threads: int = 1,
                 evaluated: str = "segmented") -> ErrorReport:
    """Filter a cloud and score it in one call."""
    result = run_filter(cloud, params, threads=threads)
    return error_report(result.labels, truth, evaluated=evaluated)
