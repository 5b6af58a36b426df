"""Numerical laboratory for self-similar NLS profiles and binormal-flow filaments."""

__version__ = "0.1.0"
