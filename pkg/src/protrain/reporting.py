"""Rendering benchmark run reports to tables and figures.

Input is the JSON-ready dict produced by ``run_benchmark``. Output is a
side-by-side comparison across systems: a CSV, a Markdown table, and bar
charts rendered with the Agg backend so no display is needed.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

__all__ = [
    "COLUMNS",
    "load_report",
    "report_rows",
    "write_csv",
    "write_markdown",
    "render_figures",
    "write_report_bundle",
]

# Column order used by every table; detection first, then suggestion quality.
COLUMNS = ("Precision", "Recall", "F1", "EWR", "BLEU-2", "ROUGE-L", "SemScore", "WER")

MISSING = "-"


def load_report(path: str | Path) -> dict:
    report = json.loads(Path(path).read_text(encoding="utf-8"))
    if "system" not in report or "percent" not in report:
        raise ValueError(f"{path} is not a benchmark report")
    return report


def report_rows(reports: Sequence[dict]) -> list[dict[str, str]]:
    """One table row per system, all values already percent-formatted."""
    rows = []
    for report in reports:
        percent_row = report.get("percent", {})
        row = {"System": report.get("system", "?")}
        for column in COLUMNS:
            value = percent_row.get(column)
            row[column] = f"{value:.1f}" if isinstance(value, (int, float)) else MISSING
        rows.append(row)
    return rows


def write_csv(rows: Sequence[dict[str, str]], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["System", *COLUMNS])
        writer.writeheader()
        writer.writerows(rows)
    return path


def write_markdown(rows: Sequence[dict[str, str]], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["System", *COLUMNS]
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(row[col] for col in header) + " |")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _grouped_bars(ax, systems, metrics, values):
    # values[metric][system], fractions already scaled to percent
    width = 0.8 / max(1, len(systems))
    for i, system in enumerate(systems):
        offsets = [j + i * width for j in range(len(metrics))]
        ax.bar(offsets, [values[m][i] for m in metrics], width=width, label=system)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(metrics))])
    ax.set_xticklabels(metrics)
    ax.set_ylabel("percent")
    ax.legend(fontsize=8)


def render_figures(reports: Sequence[dict], out_dir: str | Path, stem: str = "report") -> list[Path]:
    """Bar charts comparing systems; skips panels with no data."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    detection_reports = [r for r in reports if r.get("detection")]
    if detection_reports:
        systems = [r["system"] for r in detection_reports]
        metrics = ["precision", "recall", "f1", "ewr"]
        values = {
            m: [100.0 * r["detection"][m] for r in detection_reports] for m in metrics
        }
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, systems, metrics, values)
        ax.set_title("word-level detection")
        fig.tight_layout()
        path = out_dir / f"{stem}_detection.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    suggestion_reports = [r for r in reports if r.get("suggestion")]
    if suggestion_reports:
        systems = [r["system"] for r in suggestion_reports]
        metrics = ["bleu2", "rouge_l", "semantic_f1"]
        values = {
            m: [100.0 * r["suggestion"][m] for r in suggestion_reports] for m in metrics
        }
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, systems, metrics, values)
        ax.set_title("suggestion quality")
        fig.tight_layout()
        path = out_dir / f"{stem}_suggestion.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written


def write_report_bundle(
    reports: Sequence[dict], out_dir: str | Path, stem: str = "report"
) -> list[Path]:
    """CSV + Markdown + figures for a set of run reports."""
    out_dir = Path(out_dir)
    rows = report_rows(reports)
    written = [
        write_csv(rows, out_dir / f"{stem}.csv"),
        write_markdown(rows, out_dir / f"{stem}.md"),
    ]
    written.extend(render_figures(reports, out_dir, stem=stem))
    return written
