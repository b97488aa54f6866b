"""Compression-length complexity and decompression-time logical depth of images."""
__version__ = "0.1.0"
