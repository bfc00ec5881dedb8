"""Figure renderer for omsqueeze CSV outputs."""

__version__ = "0.1.0"

from .figspec import FIGURES, CurveStyle, FigureSpec
from .render import InputError, build_figure, read_matrix_csv, read_series_csv, render

__all__ = ["FIGURES", "CurveStyle", "FigureSpec", "InputError", "build_figure",
           "read_matrix_csv", "read_series_csv", "render", "__version__"]
