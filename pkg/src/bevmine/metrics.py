"""Metrics over mining results and gradient traces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, DegenerateSeries
from .geom import bottom_points_lidar, detection_bev_points, project_point, to_bev
from .homography import HomographyMatrix, apply, dlt_solve, ground_truth_homography
from .mining import PseudoLabelSet, localization_error

CONFLICT_PAIRS = (("ud", "sd"), ("ud", "o"), ("sd", "o"), ("ud", "p"))


@dataclass(frozen=True)
class SelectionMetrics:
    precision: float
    recall: float
    n_selected: int
    n_good: int
    n_candidates: int
    good_threshold: float


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    median: float
    p90: float
    n: int

    @classmethod
    def of(cls, values) -> "ErrorStats":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls(0.0, 0.0, 0.0, 0)
        return cls(float(v.mean()), float(np.median(v)), float(np.percentile(v, 90)), int(v.size))


def pearson(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("pearson needs two equal-length series of at least 2 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sx, sy = np.sqrt(dx @ dx), np.sqrt(dy @ dy)
    if sx == 0 or sy == 0:
        raise DegenerateSeries("constant series")
    return float(np.clip((dx @ dy) / (sx * sy), -1.0, 1.0))


def gt_fit_homography(sample) -> HomographyMatrix:
    """Homography fitted to the exact projections of every ground-truth bottom point.

    This is the homography one would solve from annotated boxes. On uneven
    ground it absorbs part of the height variation, unlike the analytic
    ground-plane map. Scenes without a usable fit fall back to the latter.
    """
    img, bev = [], []
    for box in sample.boxes:
        for p in bottom_points_lidar(box):
            img.append(project_point(sample.rig, p)[0])
            bev.append(to_bev(p))
    if len(img) >= 4:
        try:
            return dlt_solve(np.array(img), np.array(bev))
        except DegenerateConfiguration:
            pass
    return ground_truth_homography(sample.rig)


def gt_localization_errors(sample, M: HomographyMatrix) -> np.ndarray:
    """Per-box BEV gap between the true bottom center and the homography image of its projection."""
    errs = []
    for box in sample.boxes:
        center = bottom_points_lidar(box)[0]
        uv, _ = project_point(sample.rig, center)
        errs.append(np.linalg.norm(to_bev(center) - apply(M, uv)))
    return np.array(errs)


def detection_localization_errors(sample, M: HomographyMatrix) -> np.ndarray:
    return np.array([localization_error(M, det, sample.rig) for det in sample.detections])


def loc_error_stats(sample, M: HomographyMatrix, which: str) -> ErrorStats:
    if which == "gt":
        return ErrorStats.of(gt_localization_errors(sample, M))
    if which == "detections":
        return ErrorStats.of(detection_localization_errors(sample, M))
    raise ValueError(f"which must be 'gt' or 'detections', got {which!r}")


def bev_displacements(sample) -> np.ndarray:
    """True BEV displacement of each detection's bottom center from its matched box."""
    out = []
    for det, b in zip(sample.detections, sample.gt_match):
        truth = to_bev(np.asarray(sample.boxes[b].center))
        out.append(np.linalg.norm(detection_bev_points(sample.rig, det)[0] - truth))
    return np.array(out)


def selection_metrics(sample, result: PseudoLabelSet, good_threshold: float = 1.0) -> SelectionMetrics:
    good = {i for i, d in enumerate(bev_displacements(sample)) if d <= good_threshold}
    return selection_counts(set(result.labels_3d), good, len(sample.detections), good_threshold)


def selection_counts(selected: set, good: set, n_candidates: int, good_threshold: float) -> SelectionMetrics:
    hits = len(selected & good)
    precision = hits / len(selected) if selected else 1.0
    recall = hits / len(good) if good else 1.0
    return SelectionMetrics(precision, recall, len(selected), len(good), n_candidates, good_threshold)


def conflict_proportions(report) -> dict[tuple[str, str], float]:
    """Fraction of steps with a strictly negative cosine, per gradient pair."""
    if len(report.trace) == 0:
        raise ValueError("empty trace")
    out = {}
    for a, b in CONFLICT_PAIRS:
        cos = report.column(f"cos_{a}_{b}")
        out[(a, b)] = float(np.mean(cos < 0))
    return out
