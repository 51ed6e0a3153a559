"""Configuration, sweeps, CSV/SVG output and the command-line interface."""

from .config import ConfigError, SweepConfig, apply_overrides, desk_preset, load_config
from .sweep import (CSV_HEADER, ComparisonReport, SweepRow, compare_theory, compute_row, emit_csv,
                    parse_csv, run_sweep)

__all__ = ["ConfigError", "SweepConfig", "apply_overrides", "desk_preset", "load_config", "CSV_HEADER",
           "ComparisonReport", "SweepRow", "compare_theory", "compute_row", "emit_csv", "parse_csv",
           "run_sweep", "emit_svg"]


def emit_svg(rows, out_dir, prefix="sweep"):
    from .plots import emit_svg as _emit

    return _emit(rows, out_dir, prefix)
