"""
Result files of an experiment

    trials.csv               one row per trial (TRIAL_COLUMNS), deterministic
    timing.csv               wall-clock columns per trial (TIMING_COLUMNS)
    summary.csv              one row per (method, samples) cell (SUMMARY_COLUMNS)
    table.txt                methods side by side per sample count
    success_vs_samples.svg   success rate against sample count per method
"""
import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union
from xml.sax.saxutils import escape

import numpy as np

from ttpoe.schemas.controller import Method
from ttpoe.schemas.experiment import SummaryRow, TrialResult
from ttpoe.services.metrics import summarize

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRIAL_COLUMNS = [
    "world", "method", "samples", "trial", "seed", "success", "steps",
    "total_cost", "violation_fraction", "degenerate_steps", "rebuilds",
]
TIMING_COLUMNS = ["world", "method", "samples", "trial", "step_time", "rebuild_time"]
SUMMARY_COLUMNS = [
    "world", "method", "samples", "trials", "success_rate", "pairs",
    "mean_log_steps", "mean_log_cost", "violation_fraction",
]

METHOD_LABELS = {
    Method.MPPI: "MPPI",
    Method.PROJ_MPPI: "Proj-MPPI",
    Method.TT_POE_MPPI: "TT-PoE-MPPI",
}
_PLOT_COLORS = {
    Method.MPPI: "#1f77b4",
    Method.PROJ_MPPI: "#ff7f0e",
    Method.TT_POE_MPPI: "#2ca02c",
}


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Method):
        return value.value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path: Path, columns: Sequence[str], rows: Sequence[Dict]) -> Path:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
    return path


def write_trials_csv(results: Sequence[TrialResult], path: PathLike) -> Path:
    return _write_rows(Path(path), TRIAL_COLUMNS, [r.model_dump() for r in results])


def write_timing_csv(results: Sequence[TrialResult], path: PathLike) -> Path:
    return _write_rows(Path(path), TIMING_COLUMNS, [r.model_dump() for r in results])


def write_summary_csv(summary: Sequence[SummaryRow], path: PathLike) -> Path:
    return _write_rows(Path(path), SUMMARY_COLUMNS, [s.model_dump() for s in summary])


def read_trials_csv(path: PathLike) -> List[TrialResult]:
    """Parse a trials.csv written by write_trials_csv"""
    with open(path, "r", newline="") as f:
        rows = list(csv.DictReader(f))
    return [
        TrialResult(
            world=row["world"],
            method=Method(row["method"]),
            samples=int(row["samples"]),
            trial=int(row["trial"]),
            seed=int(row["seed"]),
            success=row["success"] == "1",
            steps=int(row["steps"]),
            total_cost=float(row["total_cost"]),
            violation_fraction=float(row["violation_fraction"]),
            degenerate_steps=int(row["degenerate_steps"]),
            rebuilds=int(row["rebuilds"]),
        )
        for row in rows
    ]


def _fmt(value: Optional[float], pattern: str = "{:+.2f}") -> str:
    return "n/a" if value is None else pattern.format(value)


def format_table(summary: Sequence[SummaryRow]) -> str:
    """Plain-text table: one line per sample count, success / log steps / log cost per method"""
    if not summary:
        return "(no results)\n"
    methods = [m for m in Method if any(s.method == m for s in summary)]
    samples = sorted({s.samples for s in summary})
    cells = {(s.method, s.samples): s for s in summary}
    width = 24
    lines = [
        f"world: {summary[0].world}   (log values normalized to MPPI on paired successful trials; negative is better)",
        "N".rjust(6) + "".join(METHOD_LABELS[m].center(width) for m in methods),
        "".rjust(6) + "".join("succ  log-steps log-cost".center(width) for _ in methods),
    ]
    for n in samples:
        line = str(n).rjust(6)
        for m in methods:
            s = cells.get((m, n))
            if s is None:
                line += "-".center(width)
                continue
            text = f"{s.success_rate:5.0%} {_fmt(s.mean_log_steps):>9} {_fmt(s.mean_log_cost):>8}"
            line += text.center(width)
        lines.append(line)
    return "\n".join(lines) + "\n"


def success_plot_svg(summary: Sequence[SummaryRow], width: int = 480, height: int = 320) -> str:
    """Static line plot of success rate against log2 sample count"""
    pad_left, pad_right, pad_top, pad_bottom = 60, 130, 30, 50
    plot_w = width - pad_left - pad_right
    plot_h = height - pad_top - pad_bottom
    samples = sorted({s.samples for s in summary}) or [1]
    lo, hi = np.log2(samples[0]), np.log2(samples[-1])
    span = hi - lo if hi > lo else 1.0

    def px(n: int) -> float:
        return pad_left + (np.log2(n) - lo) / span * plot_w if hi > lo else pad_left + plot_w / 2

    def py(rate: float) -> float:
        return pad_top + (1.0 - rate) * plot_h

    title = escape(f"Success rate vs samples: {summary[0].world}" if summary else "Success rate vs samples")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle">{title}</text>',
        f'<line x1="{pad_left}" y1="{pad_top + plot_h}" x2="{pad_left + plot_w}" y2="{pad_top + plot_h}" stroke="black"/>',
        f'<line x1="{pad_left}" y1="{pad_top}" x2="{pad_left}" y2="{pad_top + plot_h}" stroke="black"/>',
    ]
    for rate in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = py(rate)
        parts.append(f'<line x1="{pad_left - 4}" y1="{y:.1f}" x2="{pad_left}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{pad_left - 8}" y="{y + 4:.1f}" text-anchor="end">{rate:.0%}</text>')
    for n in samples:
        x = px(n)
        parts.append(f'<line x1="{x:.1f}" y1="{pad_top + plot_h}" x2="{x:.1f}" y2="{pad_top + plot_h + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{pad_top + plot_h + 18}" text-anchor="middle">{n}</text>')
    parts.append(
        f'<text x="{pad_left + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle">samples per step (N)</text>'
    )

    legend_y = pad_top + 10
    for method in Method:
        rows = sorted((s for s in summary if s.method == method), key=lambda s: s.samples)
        if not rows:
            continue
        color = _PLOT_COLORS[method]
        points = " ".join(f"{px(s.samples):.1f},{py(s.success_rate):.1f}" for s in rows)
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>')
        for s in rows:
            parts.append(f'<circle cx="{px(s.samples):.1f}" cy="{py(s.success_rate):.1f}" r="3" fill="{color}"/>')
        lx = pad_left + plot_w + 12
        parts.append(f'<line x1="{lx}" y1="{legend_y}" x2="{lx + 18}" y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 24}" y="{legend_y + 4}">{escape(METHOD_LABELS[method])}</text>')
        legend_y += 18
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_reports(results: Sequence[TrialResult], outdir: PathLike) -> List[Path]:
    """Summary CSV, text table and plot derived from per-trial results"""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = summarize(results)
    table = outdir / "table.txt"
    table.write_text(format_table(summary))
    plot = outdir / "success_vs_samples.svg"
    plot.write_text(success_plot_svg(summary))
    return [write_summary_csv(summary, outdir / "summary.csv"), table, plot]


def emit_outputs(results: Sequence[TrialResult], outdir: PathLike) -> List[Path]:
    """
    Write every result file into outdir

    Raises:
        OSError: outdir cannot be created or written
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [
        write_trials_csv(results, outdir / "trials.csv"),
        write_timing_csv(results, outdir / "timing.csv"),
    ]
    written += emit_reports(results, outdir)
    logger.info(f"Wrote {', '.join(p.name for p in written)} to {outdir}")
    return written
