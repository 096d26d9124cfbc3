"""Trace exporter for PyTorch models.

Writes per-layer activation dumps in the nncov trace directory format;
the format is the only contract shared with the analysis toolkit.
"""

from .export import ExportError, ExportSpec, export, resolve_model, select_modules

__version__ = "0.1.0"

__all__ = ["ExportError", "ExportSpec", "export", "resolve_model", "select_modules"]
