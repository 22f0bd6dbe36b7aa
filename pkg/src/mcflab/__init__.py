"""Numerical laboratory for intersections of mean curvature flows."""

from .errors import LabError

__version__ = "0.1.0"
__all__ = ["LabError", "__version__"]
