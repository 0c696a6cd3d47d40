"""Figure rendering for epinews experiment bundles."""

from .render import FIGURE_IDS, FigureSpec, SchemaError, render

__version__ = "0.1.0"
