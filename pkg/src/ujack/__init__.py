"""Jackknife multiplier bootstrap for suprema of U-processes."""

__version__ = "0.1.0"
