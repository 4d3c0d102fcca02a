"""Evaluation protocol: windowing, coordinate mapping, vote scores, and best
point-adjusted F1, plus the DTW diversity audit and dataset ingestion.

Point adjustment follows the usual convention: if any point inside a
contiguous true-anomaly segment is predicted positive, the whole segment
counts as detected. Vote scores count how many sliding windows flagged each
point; the threshold sweep is exhaustive over distinct positive vote values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class WindowPlan:
    """Sliding-window settings for one evaluation run.

    canonical_length defaults to round(window * resize_factor); pass it
    explicitly to pin a different rendering length (e.g. short-period datasets
    evaluated at half windows but rendered at the training length).
    """

    window: int
    step: int
    resize_factor: float = 1.0
    canonical_length: int | None = None

    def validate(self) -> None:
        if self.window < 2 or self.step < 1:
            raise ValueError("window must be >= 2 and step >= 1")
        if self.step > self.window:
            raise ValueError("step greater than window would skip points")
        if self.resize_factor <= 0:
            raise ValueError("resize_factor must be positive")

    @property
    def canonical(self) -> int:
        if self.canonical_length is not None:
            return self.canonical_length
        return round(self.window * self.resize_factor)


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    threshold: int
    n_windows: int = 0
    per_kind: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "threshold": self.threshold,
            "n_windows": self.n_windows,
            "per_kind": self.per_kind,
        }


def slice_windows(
    series: np.ndarray, labels: np.ndarray, plan: WindowPlan
) -> list[tuple[np.ndarray, np.ndarray, int]]:
    """Windows at offsets 0, step, 2*step, ... plus a tail window when needed.

    The tail window ends exactly at the last point so every index is covered
    at least once.
    """
    plan.validate()
    series = np.asarray(series, dtype=float)
    labels = np.asarray(labels)
    n = len(series)
    if n < plan.window:
        raise ValueError(f"series of length {n} shorter than window {plan.window}")
    if len(labels) != n:
        raise ValueError("series and labels lengths differ")
    offsets = list(range(0, n - plan.window + 1, plan.step))
    if offsets[-1] + plan.window < n:
        offsets.append(n - plan.window)
    return [(series[o:o + plan.window], labels[o:o + plan.window], o) for o in offsets]


def map_intervals(
    intervals: list[tuple[int, int]], factor: float, direction: str
) -> list[tuple[int, int]]:
    """Rescale interval endpoints between original and canonical coordinates.

    to-canonical multiplies by factor, to-original divides; endpoints are
    rounded half-away-from-zero and floored at 0. Degenerate pairs collapse to
    a single point.
    """
    if factor <= 0:
        raise ValueError("factor must be positive")
    if direction not in ("to-canonical", "to-original"):
        raise ValueError(f"unknown direction {direction!r}")
    if not intervals:
        return []
    scale = factor if direction == "to-canonical" else 1.0 / factor
    pairs = np.asarray(intervals, dtype=float) * scale
    rounded = np.where(pairs >= 0, np.floor(pairs + 0.5), np.ceil(pairs - 0.5))
    rounded = np.maximum(rounded, 0).astype(int)
    starts = rounded[:, 0]
    ends = np.maximum(rounded[:, 1], starts)
    return list(zip(starts.tolist(), ends.tolist()))


def vote_scores(
    window_predictions: list[tuple[int, list[tuple[int, int]]]],
    series_length: int,
    window: int | None = None,
) -> np.ndarray:
    """Per-point count of windows that flagged the point anomalous.

    `window_predictions` pairs each window offset with its predicted intervals
    in original (whole-series) coordinates. Pass `window` to enforce that
    intervals stay inside their own window.
    """
    scores = np.zeros(series_length, dtype=int)
    for offset, intervals in window_predictions:
        for s, e in intervals:
            if s > e:
                raise ValueError(f"reversed interval ({s}, {e})")
            lo = offset if window is not None else 0
            hi = offset + window - 1 if window is not None else series_length - 1
            if s < lo or e > hi:
                raise ValueError(
                    f"interval ({s}, {e}) outside window bounds [{lo}, {hi}]"
                )
            scores[s:e + 1] += 1
    return scores


def intervals_to_mask(intervals: list[tuple[int, int]], length: int) -> np.ndarray:
    mask = np.zeros(length, dtype=bool)
    for s, e in intervals:
        mask[s:e + 1] = True
    return mask


def mask_to_segments(mask: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous positive runs of a binary vector as inclusive (start, end)."""
    mask = np.asarray(mask).astype(bool)
    diff = np.diff(mask.astype(np.int8), prepend=0, append=0)
    starts = np.nonzero(diff == 1)[0]
    ends = np.nonzero(diff == -1)[0] - 1
    return list(zip(starts.tolist(), ends.tolist()))


def adjust_predictions(pred_mask: np.ndarray, label_mask: np.ndarray) -> np.ndarray:
    """Expand hits: any positive inside a true segment marks the whole segment."""
    adjusted = np.asarray(pred_mask).astype(bool).copy()
    for s, e in mask_to_segments(label_mask):
        if adjusted[s:e + 1].any():
            adjusted[s:e + 1] = True
    return adjusted


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def _adjusted_confusion(
    scores: np.ndarray, labels: np.ndarray, threshold: int
) -> tuple[int, int, int]:
    pred = adjust_predictions(scores >= threshold, labels)
    labels = np.asarray(labels).astype(bool)
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    return tp, fp, fn


def point_adjusted_best_f1(scores: np.ndarray, labels: np.ndarray) -> EvalReport:
    """Best point-adjusted F1 over an exhaustive sweep of vote thresholds.

    Ties resolve to the smallest threshold achieving the maximum F1.
    """
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels lengths differ")
    return best_f1_over_series([(scores, labels)])


def best_f1_over_series(pairs: list[tuple[np.ndarray, np.ndarray]]) -> EvalReport:
    """Global-threshold best point-adjusted F1 over several (scores, labels) vectors."""
    candidates = sorted(
        {int(v) for scores, _ in pairs for v in np.unique(np.asarray(scores)) if v > 0}
    )
    if not candidates:
        return EvalReport(precision=0.0, recall=0.0, f1=0.0, threshold=1)
    best: EvalReport | None = None
    for tau in candidates:
        tp = fp = fn = 0
        for scores, labels in pairs:
            t, p, n = _adjusted_confusion(np.asarray(scores), np.asarray(labels), tau)
            tp, fp, fn = tp + t, fp + p, fn + n
        precision, recall, f1 = _prf(tp, fp, fn)
        if best is None or f1 > best.f1:
            best = EvalReport(precision=precision, recall=recall, f1=f1, threshold=tau)
    return best


def dtw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Classical DTW alignment cost with |x - y| local cost and
    match/insert/delete steps."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("dtw_distance requires non-empty inputs")
    xs = a.tolist()
    ys = b.tolist()
    m = len(ys)
    inf = float("inf")
    prev = [inf] * (m + 1)
    prev[0] = 0.0
    for x in xs:
        cur = [inf] * (m + 1)
        for j in range(1, m + 1):
            cost = abs(x - ys[j - 1])
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = cost + best
        prev = cur
    return prev[m]


def diversity_cdf(
    series_set: list[np.ndarray], n_pairs: int, seed: int
) -> list[tuple[float, float]]:
    """Empirical CDF of DTW distances over randomly sampled distinct pairs.

    Each series is z-scored first so the audit measures shape diversity, not
    scale. Deterministic given the seed.
    """
    from .render import zscore

    n = len(series_set)
    if n < 2:
        raise ValueError("need at least 2 series")
    total_pairs = n * (n - 1) // 2
    if n_pairs > total_pairs:
        raise ValueError(f"n_pairs {n_pairs} exceeds available distinct pairs {total_pairs}")
    rng = np.random.default_rng(seed)
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < n_pairs:
        i, j = rng.integers(0, n, 2)
        if i != j:
            chosen.add((min(int(i), int(j)), max(int(i), int(j))))
    normalized = [zscore(np.asarray(s, dtype=float)) for s in series_set]
    distances = sorted(dtw_distance(normalized[i], normalized[j]) for i, j in sorted(chosen))
    return [(d, (k + 1) / n_pairs) for k, d in enumerate(distances)]


@dataclass
class DatasetSeries:
    series_id: str
    values: np.ndarray
    labels: np.ndarray
    kind: str = ""


def load_series_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read one series CSV with columns (timestamp?, value, label?).

    A header row is detected and skipped. One column is treated as values with
    all-normal labels; two as (value, label); three as (timestamp, value, label).
    """
    values: list[float] = []
    labels: list[int] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            row = [c.strip() for c in row if c.strip() != ""]
            if not row:
                continue
            try:
                nums = [float(c) for c in row]
            except ValueError:
                continue  # header
            if len(nums) == 1:
                values.append(nums[0])
                labels.append(0)
            elif len(nums) == 2:
                values.append(nums[0])
                labels.append(int(nums[1]))
            else:
                values.append(nums[1])
                labels.append(int(nums[2]))
    if not values:
        raise ValueError(f"no numeric rows in {path}")
    return np.array(values), np.array(labels, dtype=int)


def load_dataset(root: str | Path, tail_fraction: float = 1.0) -> list[DatasetSeries]:
    """Load every <series-id>.csv under `root`, keeping the trailing fraction.

    tail_fraction implements the usual test splits (e.g. last 50% for Yahoo,
    last 20% for KPI/WSD).
    """
    if not 0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must be in (0, 1]")
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory {root} not found")
    out: list[DatasetSeries] = []
    for path in sorted(root.glob("*.csv")):
        values, labels = load_series_csv(path)
        start = int(len(values) * (1.0 - tail_fraction))
        out.append(DatasetSeries(series_id=path.stem, values=values[start:], labels=labels[start:]))
    if not out:
        raise FileNotFoundError(f"no .csv series found under {root}")
    return out
