"""Scoring of drift detections and of prequential classification quality."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "MatchReport",
    "match_detections",
    "precision_recall_curve",
    "PrequentialSeries",
    "prequential_series",
    "kappa_plus",
    "f_measure",
    "g_mean",
    "aggregate_reports",
    "delay_summary",
    "write_delay_table",
    "detection_histogram",
    "write_metrics_csv",
]


@dataclass
class MatchReport:
    tp: int
    fp: int
    fn: int
    delays: list[int] = field(default_factory=list)

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0


def match_detections(detections: Sequence[int], ground_truth: Sequence[int],
                     delay_range: int) -> MatchReport:
    """Greedy earliest-first matching of detections to true drifts.

    Each true drift ``g`` claims the first unclaimed detection in
    ``[g, g + delay_range]``. Unclaimed detections are false positives and
    unmatched drifts false negatives.
    """
    if delay_range < 0:
        raise ValueError("delay_range must be non-negative")
    det = sorted(detections)
    used = [False] * len(det)
    delays = []
    k0 = 0
    for g in sorted(ground_truth):
        while k0 < len(det) and det[k0] < g:
            k0 += 1
        for k in range(k0, len(det)):
            if det[k] > g + delay_range:
                break
            if not used[k]:
                used[k] = True
                delays.append(det[k] - g)
                break
    tp = len(delays)
    return MatchReport(tp, len(det) - tp, len(ground_truth) - tp, delays)


def precision_recall_curve(detections: Sequence[int], ground_truth: Sequence[int],
                           delay_grid: Sequence[int]) -> list[tuple[int, MatchReport]]:
    grid = list(delay_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("delay_grid must be ascending")
    return [(d, match_detections(detections, ground_truth, d)) for d in grid]


def aggregate_reports(reports: Sequence[MatchReport]) -> MatchReport:
    """Pool counts over runs (micro-averaging)."""
    out = MatchReport(0, 0, 0, [])
    for r in reports:
        out.tp += r.tp
        out.fp += r.fp
        out.fn += r.fn
        out.delays.extend(r.delays)
    return out


def kappa_plus(p0: float, pe: float) -> float:
    """Accuracy gain over the No-Change classifier; NaN when ``pe == 1``."""
    if pe >= 1.0:
        return math.nan
    return (p0 - pe) / (1.0 - pe)


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return math.nan
    return 2 * precision * recall / (precision + recall)


def g_mean(acc_pos: float, acc_neg: float) -> float:
    return math.sqrt(acc_pos * acc_neg)


@dataclass
class PrequentialSeries:
    """Per-step metrics; NaN wherever a ratio is undefined."""

    t: np.ndarray
    oac: np.ndarray
    f_measure: np.ndarray
    g_mean: np.ndarray
    kappa_plus: np.ndarray
    window: int | None = None

    def as_columns(self) -> dict[str, np.ndarray]:
        return {"t": self.t, "oac": self.oac, "f_measure": self.f_measure,
                "g_mean": self.g_mean, "kappa_plus": self.kappa_plus}


def _running(x: np.ndarray, window: int | None) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(x, dtype=float)])
    if window is None:
        return c[1:]
    idx = np.arange(1, x.size + 1)
    return c[idx] - c[np.maximum(idx - window, 0)]


def prequential_series(y, yhat, t=None, window: int | None = None,
                       reset_at: Sequence[int] = ()) -> PrequentialSeries:
    """Prequential accuracy, F-measure, G-mean and Kappa-Plus over time.

    Parameters
    ----------
    y, yhat : array_like of {0, 1}
        True labels and the predictions made before each label was revealed.
    t : array_like, optional
        Time index of each entry (defaults to 1..n).
    window : int, optional
        Sliding window length; cumulative when omitted.
    reset_at : sequence of int
        Time indices at which cumulative counting restarts (segment starts).

    Notes
    -----
    The No-Change classifier predicts the previous label, so its first
    prediction within a counting span has no target and is left out of
    ``p'_e``. Kappa-Plus is NaN while ``p'_e == 1``.
    """
    y = np.asarray(y, dtype=np.int64)
    yhat = np.asarray(yhat, dtype=np.int64)
    if y.size == 0:
        raise ValueError("prediction log is empty")
    if y.shape != yhat.shape:
        raise ValueError("y and yhat differ in length")
    t = np.arange(1, y.size + 1) if t is None else np.asarray(t)
    starts = sorted({0, *(int(np.searchsorted(t, r)) for r in reset_at)} - {y.size})
    cols = {k: np.empty(y.size) for k in ("oac", "f", "g", "kp")}
    for a, b in zip(starts, starts[1:] + [y.size]):
        ys, ps = y[a:b], yhat[a:b]
        tp = _running((ys == 1) & (ps == 1), window)
        tn = _running((ys == 0) & (ps == 0), window)
        pos = _running(ys == 1, window)
        neg = _running(ys == 0, window)
        pred_pos = _running(ps == 1, window)
        n = pos + neg
        nc_hit = np.concatenate([[0.0], (ys[1:] == ys[:-1]).astype(float)])
        nc_valid = np.concatenate([[0.0], np.ones(ys.size - 1)])
        nc = _running(nc_hit, window)
        nc_n = _running(nc_valid, window)
        with np.errstate(divide="ignore", invalid="ignore"):
            oac = (tp + tn) / n
            prec = np.where(pred_pos > 0, tp / pred_pos, np.nan)
            rec = np.where(pos > 0, tp / pos, np.nan)
            spec = np.where(neg > 0, tn / neg, np.nan)
            f = np.where(prec + rec > 0, 2 * prec * rec / (prec + rec), np.nan)
            g = np.sqrt(rec * spec)
            pe = np.where(nc_n > 0, nc / nc_n, np.nan)
            kp = np.where(pe < 1, (oac - pe) / (1 - pe), np.nan)
        cols["oac"][a:b], cols["f"][a:b], cols["g"][a:b], cols["kp"][a:b] = oac, f, g, kp
    return PrequentialSeries(t, cols["oac"], cols["f"], cols["g"], cols["kp"], window)


def delay_summary(delays_by_detector: Mapping[str, Sequence[float]]) -> dict[str, float]:
    """Mean detection delay per detector; NaN for a detector with no hits."""
    return {name: (float(np.mean(d)) if len(d) else math.nan)
            for name, d in delays_by_detector.items()}


def write_delay_table(path, rows: Mapping[str, Mapping[str, float]]) -> None:
    """One row per dataset, one mean-delay column per detector."""
    detectors: list[str] = []
    for r in rows.values():
        detectors.extend(k for k in r if k not in detectors)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["dataset", *detectors])
        for name, r in rows.items():
            wr.writerow([name, *(f"{r.get(d, math.nan):.2f}" for d in detectors)])


def detection_histogram(detections_per_run: Sequence[Sequence[int]], length: int,
                        bin_width: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Counts of detections over time pooled across runs. Returns ``(edges, counts)``."""
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    edges = np.arange(1, length + bin_width + 1, bin_width)
    pooled = np.concatenate([np.asarray(d, dtype=float) for d in detections_per_run]) \
        if len(detections_per_run) else np.empty(0)
    counts, _ = np.histogram(pooled, bins=edges)
    return edges, counts


def write_metrics_csv(path, columns: Mapping[str, Sequence], header_comment: str | None = None) -> None:
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    with open(path, "w", newline="") as fh:
        if header_comment:
            for line in header_comment.splitlines():
                fh.write(f"# {line}\n")
        wr = csv.writer(fh)
        wr.writerow(names)
        for i in range(n):
            wr.writerow([_fmt(columns[c][i]) for c in names])


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)
