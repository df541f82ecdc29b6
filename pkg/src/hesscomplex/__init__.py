"""Spline discretization of the 3D Hessian complex on affine box domains.

The package builds the discrete complex (scalar splines, symmetric and
traceless matrix spline spaces, vector spline spaces) with its coefficient
differential maps, commuting quasi-interpolant projectors, mixed
Hodge-Laplacian solvers for levels 1..4, and a linearized evolution driver,
plus a CLI for verification and convergence studies.
"""

from .geometry import AffineGeometry, FieldKind, deformed_cube, identity_geometry
from .splines import KnotVector, Mesh1D, UnivariateSplineSpace, make_uniform_space

__all__ = [
    "AffineGeometry",
    "FieldKind",
    "KnotVector",
    "Mesh1D",
    "UnivariateSplineSpace",
    "deformed_cube",
    "identity_geometry",
    "make_uniform_space",
]

__version__ = "0.1.0"
