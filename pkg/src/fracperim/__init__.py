"""Fractional perimeters, isoperimetric deficits and asymmetries of convex and nearly spherical sets."""

__version__ = "0.1.0"
