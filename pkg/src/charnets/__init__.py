"""Characteristic nets of hyperbolic 2x2 normal systems."""

__version__ = "0.1.0"
