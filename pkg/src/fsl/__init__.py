"""Numerical laboratory for scalar conservation laws with critical fractional dissipation."""

__version__ = "0.1.0"
