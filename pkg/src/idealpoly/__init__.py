"""Ideal hyperbolic polygons: horogons, spines, boundary-tight stretch
maps, deflations to metric ribbon trees, and polygon gluing."""

__version__ = "0.1.0"
