"""Command-line surface: file formats, configuration, reports and the ``logdepth`` entry point."""
from .main import build_parser, main

__all__ = ["build_parser", "main"]
