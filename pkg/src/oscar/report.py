"""Report rendering: aligned text tables, CSV, and matplotlib figures on disk."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import AccuracyReport, ProtocolConfig, TrialResult
from .schemas import SCHEMA_VERSION
from .simulate import SweepRow

_MODE_LABEL = {"baseline": "Baseline", "oscar": "OSCAR"}
_DELTA_HEADER = "Δ Accuracy (OSCAR - Baseline)"


def report_document(
    report: AccuracyReport,
    model_id: str,
    provider: str,
    seed: int,
    config: ProtocolConfig,
) -> dict:
    videos = []
    for video in sorted(report.per_video):
        row: dict = {"video": video}
        for mode in report.modes:
            row[mode] = report.per_video[video][mode]
        row["steps"] = {
            str(step): {mode: acc for mode, acc in sorted(report.per_step[video][step].items())}
            for step in sorted(report.per_step[video])
        }
        videos.append(row)
    corpus: dict = {
        mode: {"mean": report.corpus_mean[mode], "sd": report.corpus_sd[mode]} for mode in report.modes
    }
    if report.delta is not None:
        corpus["delta"] = report.delta
    return {
        "v": SCHEMA_VERSION,
        "model": model_id,
        "provider": provider,
        "seed": seed,
        "modes": list(report.modes),
        "sd_kind": report.sd_kind,
        "config": {
            "segments": config.segments,
            "trials": config.trials,
            "fusion_weight": config.fusion_weight,
            "status_reduce": config.status_reduce,
            "blur_radius": config.blur_radius,
            "debounce": config.debounce,
        },
        "videos": videos,
        "corpus": corpus,
    }


def _table_cells(report: AccuracyReport, model_id: str) -> tuple[list[str], list[str]]:
    header = ["VLM Model"]
    row = [model_id]
    for mode in report.modes:
        header += [f"{_MODE_LABEL[mode]} Accuracy", f"{_MODE_LABEL[mode]} Standard Deviation"]
        row += [f"{report.corpus_mean[mode]:.1f}%", f"{report.corpus_sd[mode]:.1f}%"]
    if report.delta is not None:
        header.append(_DELTA_HEADER)
        row.append(f"{report.delta:.1f}%")
    return header, row


def render_table(report: AccuracyReport, model_id: str) -> str:
    """Aligned-column text table mirroring the published results layout."""
    header, row = _table_cells(report, model_id)
    widths = [max(len(h), len(r)) for h, r in zip(header, row)]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(header, widths)).rstrip(),
        "  ".join("-" * width for width in widths),
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip(),
    ]
    return "\n".join(lines) + "\n"


def write_report_csv(report: AccuracyReport, model_id: str, path: str | Path) -> None:
    header, row = _table_cells(report, model_id)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerow(row)


def write_trials_csv(trials: Sequence[TrialResult], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["video", "step", "trial", "mode", "predicted", "correct"])
        for t in sorted(trials, key=lambda t: (t.video, t.step, t.mode, t.trial)):
            writer.writerow([t.video, t.step, t.trial, t.mode, t.predicted, "true" if t.correct else "false"])


def fig_accuracy(report: AccuracyReport, model_id: str, path: str | Path) -> None:
    """Grouped accuracy bars with SD whiskers, one bar per mode."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    positions = np.arange(len(report.modes))
    means = [report.corpus_mean[m] for m in report.modes]
    sds = [report.corpus_sd[m] for m in report.modes]
    colors = ["#888888", "#2a6f97"][: len(report.modes)]
    ax.bar(positions, means, yerr=sds, capsize=4, color=colors, width=0.6)
    ax.set_xticks(positions)
    ax.set_xticklabels([_MODE_LABEL[m] for m in report.modes])
    ax.set_ylabel("Step prediction accuracy (%)")
    ax.set_ylim(0, 100)
    ax.set_title(f"{model_id}: corpus accuracy")
    for x, mean in zip(positions, means):
        ax.annotate(f"{mean:.1f}%", (x, mean), textcoords="offset points", xytext=(0, 4), ha="center")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_per_video(report: AccuracyReport, path: str | Path) -> None:
    """Per-video accuracy by mode, sorted by video id."""
    videos = sorted(report.per_video)
    fig, ax = plt.subplots(figsize=(max(5.0, 0.35 * len(videos) + 2), 3.5))
    positions = np.arange(len(videos))
    width = 0.8 / max(len(report.modes), 1)
    colors = {"baseline": "#888888", "oscar": "#2a6f97"}
    for i, mode in enumerate(report.modes):
        values = [report.per_video[v][mode] for v in videos]
        ax.bar(positions + i * width, values, width=width, label=_MODE_LABEL[mode], color=colors[mode])
    ax.set_xticks(positions + width * (len(report.modes) - 1) / 2)
    ax.set_xticklabels(videos, rotation=90, fontsize=7)
    ax.set_ylabel("Accuracy (%)")
    ax.set_ylim(0, 100)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_step_scores(
    step_scores: Sequence[float],
    fused_scores: Sequence[float],
    path: str | Path,
    title: str = "Per-step similarity",
) -> None:
    """Side-by-side per-step bars: step-text scores vs fused scores."""
    n = len(step_scores)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * n + 1.5), 3.2))
    positions = np.arange(n)
    ax.bar(positions - 0.2, step_scores, width=0.4, label="Step text", color="#888888")
    ax.bar(positions + 0.2, fused_scores, width=0.4, label="Fused", color="#2a6f97")
    ax.set_xticks(positions)
    ax.set_xticklabels([str(i + 1) for i in range(n)])
    ax.set_xlabel("Recipe step")
    ax.set_ylabel("Similarity score")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["clutter", "repeat_steps", "lingering", "status_signal", "jitter", "baseline", "oscar", "delta"]
        )
        for row in rows:
            n = row.noise
            writer.writerow(
                [n.clutter, n.repeat_steps, n.lingering, n.status_signal, n.jitter,
                 f"{row.baseline:.6f}", f"{row.oscar:.6f}", f"{row.delta:.6f}"]
            )


def fig_sweep(rows: Sequence[SweepRow], knob: str, path: str | Path) -> None:
    """Accuracy and delta against one varying noise knob."""
    xs = [getattr(row.noise, knob) for row in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(xs, [r.baseline for r in rows], marker="o", label="Baseline", color="#888888")
    ax.plot(xs, [r.oscar for r in rows], marker="o", label="OSCAR", color="#2a6f97")
    ax.plot(xs, [r.delta for r in rows], marker="s", label="Delta", color="#c44536", ls="--")
    ax.set_xlabel(knob.replace("_", " "))
    ax.set_ylabel("Accuracy (%)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
