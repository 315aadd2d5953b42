from .render import FigureJob, RenderError, fit_slope, render

__all__ = ["FigureJob", "RenderError", "fit_slope", "render"]
