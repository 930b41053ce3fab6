"""Static figures from the subniche harness's CSV files.

The package never imports the harness: CSV rows in, PNG files out.
"""

from .figures import KINDS, FigureSpec, SchemaError, build_figure, render

__all__ = ["KINDS", "FigureSpec", "SchemaError", "build_figure", "render"]
