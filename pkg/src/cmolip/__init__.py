"""Numerical toolkit for fractional mean oscillation, Lipschitz approximation
and commutators of homogeneous integral operators on uniform grids."""

__version__ = "0.1.0"
