"""Offline rendering of convergence curves from experiment CSVs."""

from .curves import (
    ColumnError,
    CurveBundle,
    GridError,
    STD_CONVENTION,
    build_bundle,
    read_series,
    render_curves,
)

__version__ = "0.1.0"
