"""Spherical curves with bounded geodesic curvature: invariants, classification and explicit homotopies."""

__version__ = "0.1.0"
