"""Figure rendering for the causal-recourse pipeline's CSV artifacts."""

from .render import KINDS, PlotSpec, SchemaError, render

__all__ = ["KINDS", "PlotSpec", "SchemaError", "render"]
__version__ = "0.1.0"
