"""Figure rendering for repeatersim sweep CSVs."""

from .figures import KINDS, FigureSpec, RenderResult, load_sweep, render

__version__ = "0.1.0"

__all__ = ["KINDS", "FigureSpec", "RenderResult", "load_sweep", "render", "__version__"]
