"""Numerical laboratory for Hoelder regularity, mollification and pressure on T^3."""

__version__ = "0.1.0"
