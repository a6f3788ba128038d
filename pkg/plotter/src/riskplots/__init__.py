"""Figure rendering for interp-risk sweep CSVs."""

from .plot import (
    PlotInputError,
    PlotSpec,
    PlotSummary,
    cli,
    load_rows,
    parse_spec_file,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "PlotInputError",
    "PlotSpec",
    "PlotSummary",
    "cli",
    "load_rows",
    "parse_spec_file",
    "render",
]
