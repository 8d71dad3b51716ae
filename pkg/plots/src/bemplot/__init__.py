"""Figure rendering for acoustic BEM sweep CSVs."""

from .figures import KINDS, PlotSpec, render

__all__ = ["KINDS", "PlotSpec", "render"]
__version__ = "0.1.0"
