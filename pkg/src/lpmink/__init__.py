"""Numerical machinery for the Lp Minkowski problem, p in (-n, 1), n in {2, 3}.

The package builds a convex body whose Lp surface area measure matches a
prescribed spherical measure, via energy minimization over volume-one
bodies with an eps-regularized integrand, eps-continuation, and a final
rescale by the stationarity multiplier.
"""

from lpmink.sphere import DirectionGrid, build_grid, sphere_area, unit_ball_volume

__all__ = [
    "DirectionGrid",
    "build_grid",
    "sphere_area",
    "unit_ball_volume",
]

__version__ = "0.1.0"
