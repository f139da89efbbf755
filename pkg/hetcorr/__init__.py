"""Balanced heterodyne cross-correlation receiver simulator."""

__version__ = "0.1.0"
