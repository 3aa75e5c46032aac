"""Renormalized-volume verification toolkit for conformally compact
Einstein model geometries."""

from renvol.series import LogSeries

__version__ = "0.1.0"

__all__ = ["LogSeries", "__version__"]
