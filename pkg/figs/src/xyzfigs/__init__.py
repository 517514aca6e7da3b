"""Batch figure rendering for experiment CSV outputs."""

from .render import FIGURE_KINDS, FigureSpec, SchemaError, build_figure, render

__version__ = "0.1.0"
