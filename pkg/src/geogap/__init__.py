"""Numerical geodesic quadrilaterals: torsion and curvature from gaps."""

__version__ = "0.1.0"
