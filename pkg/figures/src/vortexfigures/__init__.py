"""Figure rendering for vortexlab CSV outputs.

A pure renderer: every number drawn comes straight from the input CSVs,
is echoed into a sidecar ``.values.txt`` file, and identical inputs give
byte-identical SVG output.
"""

from .spec import FigureSpec, SchemaError
from .render import render

__all__ = ["FigureSpec", "SchemaError", "render"]
__version__ = "0.1.0"
