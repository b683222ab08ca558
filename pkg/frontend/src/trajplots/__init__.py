"""Two-panel trajectory / switching-signal figures from simulation CSVs."""

from .render import (
    PlotSpec,
    RenderResult,
    SchemaMismatchError,
    load_trajectory,
    render,
)

__all__ = ["PlotSpec", "RenderResult", "SchemaMismatchError",
           "load_trajectory", "render"]
__version__ = "0.1.0"
