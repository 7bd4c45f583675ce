"""Mean and one-standard-deviation bands over per-seed metric CSVs.

Inputs are the experiment runner's per-seed CSV files (header
``iter,exploitability,kl_to_reference,wall_ms,seed``).  All statistics
are computed here, never upstream: the CSVs stay raw per-seed data.
The band uses the population convention (ddof = 0), recorded in the
metadata written next to every rendered figure.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

STD_CONVENTION = "population (ddof=0)"
FIGURE_SIZE = (6.4, 4.0)
FIGURE_DPI = 100


class ColumnError(ValueError):
    """A requested metric column is missing or unusable in some file."""


class GridError(ValueError):
    """Per-seed files do not share one iteration grid."""


@dataclass(frozen=True)
class CurveBundle:
    """Per-seed series on a common grid plus derived statistics."""

    metric: str
    iterations: np.ndarray
    per_seed: np.ndarray  # (n_seeds, n_iterations)
    mean: np.ndarray
    std: np.ndarray
    sources: tuple[str, ...]
    meta: dict = field(default_factory=dict)


def read_series(path: str | Path, metric: str) -> tuple[np.ndarray, np.ndarray]:
    """One CSV column as (iterations, values); strict about the schema."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        for required in ("iter", metric):
            if reader.fieldnames is None or required not in reader.fieldnames:
                raise ColumnError(
                    f"column {required!r} not present in {path} "
                    f"(have: {reader.fieldnames})"
                )
        iterations, values = [], []
        for row in reader:
            cell = row[metric]
            if cell == "" or cell is None:
                raise ColumnError(f"column {metric!r} has empty values in {path}")
            iterations.append(int(row["iter"]))
            values.append(float(cell))
    if not iterations:
        raise ColumnError(f"{path} contains no data rows")
    return np.asarray(iterations), np.asarray(values)


def build_bundle(paths: Sequence[str | Path], metric: str) -> CurveBundle:
    """Load every CSV, check the shared grid, compute mean and std."""
    if not paths:
        raise ValueError("at least one CSV is required")
    grids, series = [], []
    for path in paths:
        iters, values = read_series(path, metric)
        grids.append(iters)
        series.append(values)
    base = grids[0]
    for path, grid in zip(list(paths)[1:], grids[1:]):
        if grid.shape != base.shape or not np.array_equal(grid, base):
            raise GridError(
                f"{path} uses a different iteration grid than {paths[0]}"
            )
    per_seed = np.vstack(series)
    return CurveBundle(
        metric=metric,
        iterations=base,
        per_seed=per_seed,
        mean=per_seed.mean(axis=0),
        std=per_seed.std(axis=0, ddof=0),
        sources=tuple(str(p) for p in paths),
        meta={
            "std_convention": STD_CONVENTION,
            "n_seeds": per_seed.shape[0],
            "n_iterations": int(base.size),
        },
    )


def render_curves(
    paths: Sequence[str | Path],
    metric: str,
    out_path: str | Path,
    log_scale: bool = False,
) -> CurveBundle:
    """Render mean +/- one std across seeds and write the image.

    Figure size, dpi and fonts are pinned so repeated renders of the
    same inputs produce identical dimensions and statistics.  A JSON
    sidecar (``<out>.stats.json``) records the statistics conventions.
    """
    bundle = build_bundle(paths, metric)
    fig, ax = plt.subplots(figsize=FIGURE_SIZE, dpi=FIGURE_DPI)
    try:
        ax.plot(bundle.iterations, bundle.mean, color="#1f5fa8", lw=1.6, label="mean")
        ax.fill_between(
            bundle.iterations,
            bundle.mean - bundle.std,
            bundle.mean + bundle.std,
            color="#1f5fa8",
            alpha=0.25,
            linewidth=0,
            label="+/- 1 std",
        )
        ax.set_xlabel("iteration")
        ax.set_ylabel(metric)
        if log_scale:
            ax.set_yscale("log")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(out_path)
    finally:
        plt.close(fig)
    sidecar = Path(str(out_path) + ".stats.json")
    sidecar.write_text(
        json.dumps(
            {
                "metric": bundle.metric,
                **bundle.meta,
                "sources": list(bundle.sources),
                "iteration_range": [
                    int(bundle.iterations[0]),
                    int(bundle.iterations[-1]),
                ],
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return bundle
