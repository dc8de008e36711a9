"""Exact and Monte Carlo tools for disordered spin systems and height functions."""

__version__ = "0.1.0"
