# lkengine/geometry/__init__.py
"""Numerical geometry: metric charts, curvature, Weyl sums, quadrature,
fiber collapse of submersions and the tube-volume oracle."""
