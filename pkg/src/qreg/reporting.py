"""Render benchmark results: R^2 matrix on stdout, TTS plot data on disk."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .bench import ResultRow, load_results

TTS_BOUNDARY_NOTE = (
    "TTS = wall time of the solver call only; dataset generation and Gram "
    "accumulation are excluded. Adaptive TTS spans the initial fixed solve "
    "plus the whole tuning loop."
)


def format_r2_table(rows: list[ResultRow]) -> str:
    """Features x solver matrix of mean R^2; errored cells render as an em dash."""
    solvers = sorted({r.solver for r in rows})
    features = sorted({r.features for r in rows})
    cells: dict[tuple[int, str], list[float]] = {}
    for r in rows:
        if not r.errored and r.r2 is not None:
            cells.setdefault((r.features, r.solver), []).append(r.r2)
    width = max(8, *(len(s) for s in solvers)) + 2
    lines = [f"# {TTS_BOUNDARY_NOTE}"]
    lines.append("features".ljust(10) + "".join(s.rjust(width) for s in solvers))
    for f in features:
        row = [str(f).ljust(10)]
        for s in solvers:
            values = cells.get((f, s))
            row.append(("—" if values is None else f"{np.mean(values):.4f}").rjust(width))
        lines.append("".join(row))
    return "\n".join(lines)


def write_tts_plot(rows: list[ResultRow], out_path: str | Path) -> None:
    """Plot-ready CSV of per-cell TTS on a log10 scale; error rows are dropped."""
    with open(out_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["features", "solver", "seed", "tts_ms", "log10_tts_ms"])
        for r in rows:
            if r.errored or r.tts_ms is None:
                continue
            writer.writerow([r.features, r.solver, r.seed, repr(r.tts_ms), repr(math.log10(r.tts_ms))])


def report(results_path: str | Path, plot_path: str | Path | None = None) -> str:
    """Load results, write the TTS plot file, and return the formatted table.

    ``plot_path`` defaults to ``tts_plot.csv`` next to the results file.
    """
    results_path = Path(results_path)
    rows = load_results(results_path)
    if plot_path is None:
        plot_path = results_path.parent / "tts_plot.csv"
    write_tts_plot(rows, plot_path)
    return format_r2_table(rows)
