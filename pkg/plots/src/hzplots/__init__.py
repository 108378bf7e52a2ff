"""Figure rendering for polygon-set and trajectory JSON files.

Strictly a presentation layer: it reads the JSON files the reachability CLI
writes and never recomputes any set.
"""

from .render import FigureSpec, load_figure_spec, render

__version__ = "0.1.0"
