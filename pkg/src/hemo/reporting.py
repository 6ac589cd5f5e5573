"""CSV tables and SVG figures for evaluation reports.

Tables are written with full-precision floats and no timestamps, so reruns
with the same config are byte-identical. Figures mirror the comparison
style used for the models: sensitivity against precision with the f2 score
annotated at each point.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import CellMatchResult, CvReport, render_percent_rows, row_normalize

plt.rcParams["svg.hashsalt"] = "hemo"

METRIC_NAMES = ("sensitivity", "specificity", "precision", "f2")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_cv_summary_csv(report: CvReport, path) -> None:
    """Fold-averaged per-class metrics plus the macro row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "frequency"] + list(METRIC_NAMES))
        for c in report.class_ids:
            freq = sum(f.report.frequencies[c] for f in report.folds)
            writer.writerow(
                [c, freq] + [_fmt(report.mean_metric(c, m)) for m in METRIC_NAMES]
            )
        writer.writerow(["macro", ""] + [_fmt(report.macro_metric(m)) for m in METRIC_NAMES])


def write_cv_folds_csv(report: CvReport, path) -> None:
    """Per-class rows, per-fold columns, one block per metric."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        fold_cols = [f"fold_{f.fold}" for f in report.folds]
        writer.writerow(["class", "metric"] + fold_cols + ["mean"])
        for c in report.class_ids:
            for m in METRIC_NAMES:
                values = [getattr(f.report.per_class[c], m) for f in report.folds]
                writer.writerow(
                    [c, m] + [_fmt(v) for v in values] + [_fmt(report.mean_metric(c, m))]
                )


def write_confusion_csvs(report: CvReport, out_dir) -> None:
    out_dir = Path(out_dir)
    cm = report.summed_confusion
    with open(out_dir / "confusion_counts.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + list(report.class_ids))
        for c, row in zip(report.class_ids, cm):
            writer.writerow([c] + [int(v) for v in row])
    with open(out_dir / "confusion_percent.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + list(report.class_ids))
        for c, row in zip(report.class_ids, render_percent_rows(cm)):
            writer.writerow([c] + [_fmt(v) for v in row])


def write_cell_confusion_csvs(result: CellMatchResult, out_dir, id_names: dict[int, str]) -> None:
    out_dir = Path(out_dir)
    ids = list(range(result.confusion.shape[0]))
    with open(out_dir / "confusion_counts.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + [id_names.get(i, str(i)) for i in ids])
        for i, row in zip(ids, result.confusion):
            writer.writerow([id_names.get(i, str(i))] + [int(v) for v in row])
    with open(out_dir / "confusion_percent.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + [id_names.get(i, str(i)) for i in ids])
        for i, row in zip(ids, render_percent_rows(result.confusion)):
            writer.writerow([id_names.get(i, str(i))] + [_fmt(v) for v in row])


def _save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_sensitivity_precision(report: CvReport, path, title: str = "") -> None:
    """Scatter of per-class (sensitivity, precision) with f2 annotations."""
    fig, ax = plt.subplots(figsize=(6, 5))
    for c in report.class_ids:
        x = report.mean_metric(c, "sensitivity")
        y = report.mean_metric(c, "precision")
        f2 = report.mean_metric(c, "f2")
        ax.scatter([x], [y], s=40)
        ax.annotate(f"{c}: f2={f2:.2f}", (x, y), fontsize=8,
                    textcoords="offset points", xytext=(5, 4))
    mx = report.macro_metric("sensitivity")
    my = report.macro_metric("precision")
    ax.scatter([mx], [my], s=90, marker="*", color="black")
    ax.annotate(f"macro: f2={report.macro_metric('f2'):.2f}", (mx, my), fontsize=8,
                textcoords="offset points", xytext=(5, 4))
    ax.set_xlabel("sensitivity")
    ax.set_ylabel("precision")
    ax.set_xlim(-0.02, 1.05)
    ax.set_ylim(-0.02, 1.05)
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    _save_svg(fig, path)


def plot_f2_bars(report: CvReport, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    classes = report.class_ids
    ax.bar([str(c) for c in classes], [report.mean_metric(c, "f2") for c in classes])
    ax.set_xlabel("class")
    ax.set_ylabel("f2")
    ax.set_ylim(0, 1.05)
    if title:
        ax.set_title(title)
    _save_svg(fig, path)


def plot_runs_comparison(points: list[tuple[str, float, float, float]], path) -> None:
    """Overlay macro (sensitivity, precision, f2) points of several runs."""
    fig, ax = plt.subplots(figsize=(6, 5))
    for name, sens, prec, f2 in points:
        ax.scatter([sens], [prec], s=60)
        ax.annotate(f"{name} (f2={f2:.2f})", (sens, prec), fontsize=8,
                    textcoords="offset points", xytext=(5, 4))
    ax.set_xlabel("sensitivity")
    ax.set_ylabel("precision")
    ax.set_xlim(-0.02, 1.05)
    ax.set_ylim(-0.02, 1.05)
    ax.grid(True, alpha=0.3)
    _save_svg(fig, path)


def read_summary_csv(path) -> dict:
    """Read back a summary.csv written by write_cv_summary_csv."""
    out = {"per_class": {}, "macro": None}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            metrics = {m: float(row[m]) for m in METRIC_NAMES}
            if row["class"] == "macro":
                out["macro"] = metrics
            else:
                out["per_class"][int(row["class"])] = metrics
    return out
