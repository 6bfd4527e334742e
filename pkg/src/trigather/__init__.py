"""Gathering myopic robots on an infinite triangular grid."""

__version__ = "0.1.0"
