"""Figure rendering for condcontrol CSV artifacts."""

from .render import FIGURE_KINDS, PlotDataError, PlotJob, render

__all__ = ["FIGURE_KINDS", "PlotDataError", "PlotJob", "render"]
