"""Thresholding, classification metrics, and score-distribution summaries.

The decision threshold is a percentile (default 99) of the training scores,
computed with linear interpolation between closest ranks. A window is flagged
anomalous iff its score is strictly above the threshold; a score exactly at
the threshold counts as normal.

AUC is the rank statistic over positive/negative score pairs; ties contribute
one half. When the labels contain a single class, AUC is undefined and
reported as None (``NA`` in CSV, ``null`` in JSON); the remaining metrics are
still computed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

VIOLIN_GRID_POINTS = 128


@dataclass
class MetricsReport:
    auc: float | None
    precision: float
    recall: float
    f1: float
    accuracy: float
    balanced_accuracy: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int

    METRIC_FIELDS = ("auc", "precision", "recall", "f1", "accuracy",
                     "balanced_accuracy")

    def as_dict(self) -> dict:
        return {
            "auc": self.auc,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "threshold": self.threshold,
            "counts": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
        }


@dataclass
class ScoreSet:
    """Scores of one evaluation group (train / test-normal / test-anomalous)."""

    scores: np.ndarray
    labels: np.ndarray
    group: str

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.scores.shape != self.labels.shape:
            raise InputError("scores/labels length mismatch")


@dataclass
class ViolinSummary:
    group: str
    n: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    grid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)


def compute_threshold(train_scores, percentile: float = 99.0) -> float:
    """Linear-interpolation percentile of the training scores."""
    scores = np.asarray(train_scores, dtype=np.float64)
    if scores.size == 0:
        raise InputError("cannot take a percentile of zero scores")
    if not 0.0 <= percentile <= 100.0:
        raise InputError(f"percentile must be in [0, 100]: {percentile}")
    return float(np.percentile(scores, percentile, method="linear"))


def classify(scores, threshold: float) -> np.ndarray:
    """1 (anomalous) iff score > threshold; the boundary counts as normal."""
    return (np.asarray(scores, dtype=np.float64) > threshold).astype(np.uint8)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc_score(labels, scores) -> float | None:
    """Rank-statistic AUC; None when labels hold a single class."""
    labels = np.asarray(labels, dtype=np.uint8)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _average_ranks(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def compute_metrics(labels, predictions, scores=None,
                    threshold: float = float("nan")) -> MetricsReport:
    """Confusion counts plus the six benchmark metrics.

    ``scores`` feeds the AUC; without scores (or with single-class labels)
    AUC is None.
    """
    labels = np.asarray(labels, dtype=np.uint8)
    predictions = np.asarray(predictions, dtype=np.uint8)
    if labels.shape != predictions.shape:
        raise InputError("labels/predictions length mismatch")
    tp = int(((labels == 1) & (predictions == 1)).sum())
    fp = int(((labels == 0) & (predictions == 1)).sum())
    tn = int(((labels == 0) & (predictions == 0)).sum())
    fn = int(((labels == 1) & (predictions == 0)).sum())
    total = max(tp + fp + tn + fn, 1)

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    accuracy = (tp + tn) / total
    tpr = tp / (tp + fn) if tp + fn else 0.0
    tnr = tn / (tn + fp) if tn + fp else 0.0
    balanced = 0.5 * (tpr + tnr)
    auc = auc_score(labels, scores) if scores is not None else None
    return MetricsReport(auc, precision, recall, f1, accuracy, balanced,
                         threshold, tp, fp, tn, fn)


def _silverman_bandwidth(values: np.ndarray) -> float:
    n = values.size
    if n < 2:
        return 0.0
    std = float(values.std(ddof=1))
    iqr = float(np.percentile(values, 75, method="linear")
                - np.percentile(values, 25, method="linear"))
    candidates = [std]
    if iqr > 0:
        candidates.append(iqr / 1.34)
    width = min(c for c in candidates)
    return 0.9 * width * n ** (-0.2)


def violin_summary(score_sets: list[ScoreSet],
                   warn=None) -> list[ViolinSummary]:
    """Quartiles plus a Gaussian-kernel density curve per score group.

    Density uses Silverman's bandwidth sampled at 128 evenly spaced points
    over the group range; a constant group degenerates to a spike (all grid
    points at the constant, uniform unit density). Empty groups are skipped
    with a warning callback.
    """
    out = []
    for ss in score_sets:
        if ss.scores.size == 0:
            if warn is not None:
                warn(f"violin group {ss.group!r} is empty; skipped")
            continue
        values = ss.scores
        q1, med, q3 = (float(np.percentile(values, p, method="linear"))
                       for p in (25, 50, 75))
        lo, hi = float(values.min()), float(values.max())
        bw = _silverman_bandwidth(values)
        if hi == lo or bw == 0.0:  # bw is 0 only for constant or n=1 groups
            grid = np.full(VIOLIN_GRID_POINTS, float(values[0]))
            density = np.ones(VIOLIN_GRID_POINTS)
        else:
            grid = np.linspace(lo, hi, VIOLIN_GRID_POINTS)
            diffs = (grid[:, None] - values[None, :]) / bw
            density = np.exp(-0.5 * diffs ** 2).sum(axis=1) \
                / (values.size * bw * math.sqrt(2 * math.pi))
        out.append(ViolinSummary(ss.group, int(values.size), lo, q1, med, q3,
                                 hi, grid, density))
    return out


# ---------------------------------------------------------------------------
# serialization


def format_cell(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def metrics_to_csv_row(report: MetricsReport) -> list[str]:
    return [format_cell(getattr(report, name)) for name in MetricsReport.METRIC_FIELDS] \
        + [format_cell(report.threshold), str(report.tp), str(report.fp),
           str(report.tn), str(report.fn)]


METRICS_CSV_HEADER = ["dataset", "subset", "model", *MetricsReport.METRIC_FIELDS,
                      "threshold", "tp", "fp", "tn", "fn"]


def save_metrics_csv(path, rows: list[tuple[str, str, str, MetricsReport]]) -> None:
    """Rows of (dataset, subset, model, report) to one flat CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_HEADER)
        for dataset, subset, model, report in rows:
            writer.writerow([dataset, subset, model] + metrics_to_csv_row(report))


def save_metrics_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_violin_csv(path, summaries: list[ViolinSummary]) -> None:
    """Long-format CSV: one summary row per group, then grid/density samples."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "field", "index", "value"])
        for s in summaries:
            for name in ("n", "minimum", "q1", "median", "q3", "maximum"):
                writer.writerow([s.group, name, "", format_cell(getattr(s, name))])
            for i, (g, d) in enumerate(zip(s.grid, s.density)):
                writer.writerow([s.group, "grid", i, repr(float(g))])
                writer.writerow([s.group, "density", i, repr(float(d))])


def load_violin_csv(path) -> list[ViolinSummary]:
    groups: dict[str, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["group", "field", "index", "value"]:
            raise InputError(f"{path}: not a violin CSV")
        for group, name, idx, value in reader:
            slot = groups.setdefault(group, {"grid": {}, "density": {}})
            if name in ("grid", "density"):
                slot[name][int(idx)] = float(value)
            elif name == "n":
                slot[name] = int(value)
            else:
                slot[name] = float(value)
    out = []
    for group, slot in groups.items():
        grid = np.array([slot["grid"][i] for i in sorted(slot["grid"])])
        density = np.array([slot["density"][i] for i in sorted(slot["density"])])
        out.append(ViolinSummary(group, slot["n"], slot["minimum"], slot["q1"],
                                 slot["median"], slot["q3"], slot["maximum"],
                                 grid, density))
    return out


def violin_svg(summaries: list[ViolinSummary], title: str = "") -> str:
    """Self-contained SVG rendering of the violin summaries."""
    width, height = 640, 400
    margin_l, margin_r, margin_t, margin_b = 70, 20, 40, 60
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b
    if not summaries:
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
                f'height="{height}"><text x="20" y="40">no data</text></svg>')

    lo = min(s.minimum for s in summaries)
    hi = max(s.maximum for s in summaries)
    if hi == lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def y_of(v: float) -> float:
        return margin_t + plot_h * (1.0 - (v - lo) / (hi - lo))

    slot_w = plot_w / len(summaries)
    half_max = 0.42 * slot_w
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" font-family="sans-serif" font-size="12">']
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
                     f'font-size="14">{title}</text>')
    parts.append(f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
                 f'y2="{margin_t + plot_h}" stroke="black"/>')
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        y = y_of(v)
        parts.append(f'<line x1="{margin_l - 4}" y1="{y:.1f}" x2="{margin_l}" '
                     f'y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{margin_l - 8}" y="{y + 4:.1f}" '
                     f'text-anchor="end">{v:.3g}</text>')

    colors = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"]
    for i, s in enumerate(summaries):
        cx = margin_l + slot_w * (i + 0.5)
        dmax = float(np.max(s.density)) if np.max(s.density) > 0 else 1.0
        left, right = [], []
        for g, d in zip(s.grid, s.density):
            offset = half_max * float(d) / dmax
            left.append(f"{cx - offset:.2f},{y_of(float(g)):.2f}")
            right.append(f"{cx + offset:.2f},{y_of(float(g)):.2f}")
        points = " ".join(left + right[::-1])
        color = colors[i % len(colors)]
        parts.append(f'<polygon points="{points}" fill="{color}" '
                     f'fill-opacity="0.55" stroke="{color}"/>')
        parts.append(f'<line x1="{cx:.1f}" y1="{y_of(s.minimum):.1f}" '
                     f'x2="{cx:.1f}" y2="{y_of(s.maximum):.1f}" '
                     f'stroke="black" stroke-width="0.8"/>')
        parts.append(f'<rect x="{cx - 5:.1f}" y="{y_of(s.q3):.1f}" width="10" '
                     f'height="{max(y_of(s.q1) - y_of(s.q3), 0.5):.1f}" '
                     f'fill="black" fill-opacity="0.35"/>')
        parts.append(f'<line x1="{cx - 8:.1f}" y1="{y_of(s.median):.1f}" '
                     f'x2="{cx + 8:.1f}" y2="{y_of(s.median):.1f}" '
                     f'stroke="white" stroke-width="2"/>')
        parts.append(f'<text x="{cx:.1f}" y="{margin_t + plot_h + 18}" '
                     f'text-anchor="middle">{s.group} (n={s.n})</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def save_violin_svg(path, summaries: list[ViolinSummary], title: str = "") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(violin_svg(summaries, title))
