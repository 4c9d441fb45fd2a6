"""Euler-system elements in K2 of CM elliptic curves, with numerical certificates."""

__version__ = "0.1.0"
