"""Report rendering: CSV tables with matplotlib figures beside them.

Every writer takes an output directory, writes its delimited file(s) and
PNG figure(s) there, and returns the created paths. Figures use the Agg
backend so batch runs never touch a display.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ingestion import CATEGORIES, SEXES, SPLITS, DatasetStats

_SPLIT_TITLES = {"train": "Training", "val": "Validation"}


def _ensure_dir(out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def write_stats_report(stats: DatasetStats, out_dir) -> list[Path]:
    """Per-cell scan counts as CSV plus a grouped bar chart per split."""
    out_dir = _ensure_dir(out_dir)
    csv_path = out_dir / "dataset_counts.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["split", "label", "female", "male", "total"])
        for split in SPLITS:
            for label in CATEGORIES:
                f = stats.counts[(split, label, "female")]
                m = stats.counts[(split, label, "male")]
                writer.writerow([split, label, f, m, f + m])
            writer.writerow(
                [split, "ALL", stats.totals[(split, "female")], stats.totals[(split, "male")],
                 stats.totals[(split, "female")] + stats.totals[(split, "male")]]
            )

    fig, axes = plt.subplots(1, len(SPLITS), figsize=(10, 4), sharey=False)
    x = np.arange(len(CATEGORIES))
    width = 0.38
    for ax, split in zip(np.atleast_1d(axes), SPLITS):
        female = [stats.counts[(split, label, "female")] for label in CATEGORIES]
        male = [stats.counts[(split, label, "male")] for label in CATEGORIES]
        ax.bar(x - width / 2, female, width, label="female")
        ax.bar(x + width / 2, male, width, label="male")
        ax.set_xticks(x)
        ax.set_xticklabels(CATEGORIES)
        ax.set_title(f"{_SPLIT_TITLES[split]} scans")
        ax.set_ylabel("scans")
        ax.legend()
    fig.tight_layout()
    fig_path = out_dir / "dataset_counts.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return [csv_path, fig_path]


def write_eval_report(result: dict, out_dir) -> list[Path]:
    """Metrics CSV, confusion CSV, confusion heatmap, and F1 bar chart."""
    out_dir = _ensure_dir(out_dir)
    labels = result.get("labels", list(CATEGORIES))
    per_f1 = result["per_category_f1"]
    cm = np.asarray(result["confusion"])

    metrics_path = out_dir / "metrics.csv"
    with metrics_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "f1"])
        for label in labels:
            writer.writerow([label, f"{per_f1[label]:.6f}"])
        writer.writerow(["macro", f"{result['macro_f1']:.6f}"])

    confusion_path = out_dir / "confusion.csv"
    with confusion_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + list(labels))
        for label, row in zip(labels, cm):
            writer.writerow([label] + [int(v) for v in row])

    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(cm, cmap="Blues")
    ax.set_xticks(range(len(labels)), labels)
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(len(labels)):
        for j in range(len(labels)):
            ax.text(j, i, str(int(cm[i, j])), ha="center", va="center",
                    color="white" if cm[i, j] > cm.max() / 2 else "black")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(f"confusion (macro F1 = {result['macro_f1']:.3f})")
    fig.tight_layout()
    heatmap_path = out_dir / "confusion.png"
    fig.savefig(heatmap_path, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.bar(labels, [per_f1[label] for label in labels])
    ax.axhline(result["macro_f1"], color="tab:red", linestyle="--",
               label=f"macro = {result['macro_f1']:.3f}")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("F1")
    ax.legend()
    fig.tight_layout()
    bars_path = out_dir / "f1_scores.png"
    fig.savefig(bars_path, dpi=120)
    plt.close(fig)
    return [metrics_path, confusion_path, heatmap_path, bars_path]


def write_pipeline_report(report_dict: dict, out_dir) -> list[Path]:
    """Per-scan stage timings as CSV plus a stacked bar figure."""
    out_dir = _ensure_dir(out_dir)
    scans = report_dict["scans"]
    stages = ["assemble", "trim", "resize", "normalize", "augment", "write"]

    csv_path = out_dir / "stage_timings.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scan_id", "status"] + [f"{s}_s" for s in stages])
        for scan in scans:
            timings = scan.get("timings", {})
            writer.writerow(
                [scan["scan_id"], scan["status"]]
                + [f"{timings.get(s, 0.0):.4f}" for s in stages]
            )

    fig, ax = plt.subplots(figsize=(max(5.0, 0.8 * len(scans) + 2), 4))
    ids = [scan["scan_id"] for scan in scans]
    bottom = np.zeros(len(scans))
    for stage in stages:
        values = np.array([scan.get("timings", {}).get(stage, 0.0) for scan in scans])
        if values.any():
            ax.bar(ids, values, bottom=bottom, label=stage)
            bottom += values
    ax.set_ylabel("seconds")
    ax.set_title("pipeline stage timings")
    if bottom.any():
        ax.legend()
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    fig_path = out_dir / "stage_timings.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return [csv_path, fig_path]
