"""Affine box geometry and the four field transformations between the
parametric cube and the physical domain.

A geometry is the map F(z) = A z + b with invertible A, so the Jacobian is
the constant matrix A.  Four pullbacks carry physical fields to parametric
ones, one per slot of the complex:

* scalar:            composition with F,
* symmetric matrix:  double-covariant sandwich  J^T S J,
* traceless matrix:  det(J) J^T T J^{-T}  (Piola-like, trace preserving),
* vector:            det(J) J^T v         (weighted covariant).

The signed determinant is used as written in the transforms; only volume
elements for integration take its absolute value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "AffineGeometry",
    "FieldKind",
    "pullback",
    "pushforward",
    "identity_geometry",
    "deformed_cube",
    "verify_commuting_pullbacks",
]


class FieldKind(Enum):
    """Transformation behavior of a field slot in the complex."""

    SCALAR = 1
    SYM_MATRIX = 2
    TRACELESS_MATRIX = 3
    VECTOR = 4


@dataclass(frozen=True, eq=False)
class AffineGeometry:
    """Affine parametrization F(z) = A z + b of the physical domain."""

    matrix: np.ndarray
    offset: np.ndarray
    jacobian: np.ndarray = field(init=False, repr=False)
    inverse: np.ndarray = field(init=False, repr=False)
    det: float = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float).reshape(3, 3)
        b = np.asarray(self.offset, dtype=float).reshape(3)
        det = float(np.linalg.det(a))
        if abs(det) < 1e-14:
            raise ValueError("geometry matrix is singular")
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "offset", b)
        object.__setattr__(self, "jacobian", a)
        object.__setattr__(self, "inverse", np.linalg.inv(a))
        object.__setattr__(self, "det", det)

    @property
    def abs_det(self) -> float:
        return abs(self.det)

    def map_points(self, zeta: np.ndarray) -> np.ndarray:
        """F applied to points shaped (..., 3)."""
        zeta = np.asarray(zeta, dtype=float)
        return zeta @ self.matrix.T + self.offset

    def unmap_points(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.offset) @ self.inverse.T

    @property
    def is_identity(self) -> bool:
        return np.array_equal(self.matrix, np.eye(3)) and not self.offset.any()


def identity_geometry() -> AffineGeometry:
    return AffineGeometry(np.eye(3), np.zeros(3))


def deformed_cube() -> AffineGeometry:
    """The sheared-cube benchmark domain used in the experiment suite."""
    a = np.array([[1.0, 0.5, 0.5], [0.0, 1.0, 0.5], [0.5, 0.0, 1.0]])
    return AffineGeometry(a, np.zeros(3))


def _sandwich(left: np.ndarray, values: np.ndarray, right: np.ndarray) -> np.ndarray:
    return np.einsum("ab,...bc,cd->...ad", left, values, right)


def pullback(kind: FieldKind, geom: AffineGeometry, values: np.ndarray) -> np.ndarray:
    """Parametric values from physical field values at mapped points.

    ``values`` are samples of the physical field at F(z); shapes are (...,)
    for scalars, (..., 3) for vectors and (..., 3, 3) for matrices.
    """
    values = np.asarray(values, dtype=float)
    j = geom.jacobian
    if kind is FieldKind.SCALAR:
        return values
    if kind is FieldKind.SYM_MATRIX:
        _check_matrix_shape(values)
        return _sandwich(j.T, values, j)
    if kind is FieldKind.TRACELESS_MATRIX:
        _check_matrix_shape(values)
        return geom.det * _sandwich(j.T, values, geom.inverse.T)
    if kind is FieldKind.VECTOR:
        if values.shape[-1] != 3:
            raise ValueError("vector field values must have shape (..., 3)")
        return geom.det * values @ j
    raise ValueError(f"unknown field kind {kind}")


def pushforward(kind: FieldKind, geom: AffineGeometry, values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pullback`: physical values from parametric ones."""
    values = np.asarray(values, dtype=float)
    jinv = geom.inverse
    if kind is FieldKind.SCALAR:
        return values
    if kind is FieldKind.SYM_MATRIX:
        _check_matrix_shape(values)
        return _sandwich(jinv.T, values, jinv)
    if kind is FieldKind.TRACELESS_MATRIX:
        _check_matrix_shape(values)
        return _sandwich(jinv.T, values, geom.jacobian.T) / geom.det
    if kind is FieldKind.VECTOR:
        if values.shape[-1] != 3:
            raise ValueError("vector field values must have shape (..., 3)")
        return values @ jinv / geom.det
    raise ValueError(f"unknown field kind {kind}")


def _check_matrix_shape(values: np.ndarray):
    if values.ndim < 2 or values.shape[-2:] != (3, 3):
        raise ValueError("matrix field values must have shape (..., 3, 3)")


def verify_commuting_pullbacks(geom: AffineGeometry, fields=None, n_elements: int = 4):
    """Quadrature residuals of the three pullback/derivative exchange rules.

    For smooth fields phi, S, T the parametric derivative of the pulled-back
    field must match the pullback of the physical derivative:

    * hessian of pullback(scalar)    vs  sym-matrix pullback of hessian,
    * row curl of pullback(sym)      vs  traceless pullback of row curl,
    * row div of pullback(traceless) vs  vector pullback of row div.

    The left sides differentiate the pulled-back field symbolically in
    parametric coordinates; the right sides differentiate physically and
    transform numerically, so the two routes are independent.  Returns a
    dict of relative L2 residuals.
    """
    from . import fields as af
    from .quadrature import element_rule, smooth_rule_order
    from .splines import Mesh1D

    if fields is None:
        fields = af.default_smooth_fields(geom)
    phi, s_field, t_field = fields

    mesh = Mesh1D(np.linspace(0.0, 1.0, n_elements + 1))
    rule = element_rule(mesh, smooth_rule_order(4, n_elements))
    pts = rule.flat_nodes
    wf = rule.flat_weights
    w3 = wf[:, None, None] * wf[None, :, None] * wf[None, None, :]
    grid = (pts, pts, pts)

    def rel(diff, ref):
        num = np.sqrt(np.sum(w3[..., None] * diff**2))
        den = np.sqrt(np.sum(w3[..., None] * ref**2))
        return float(num / max(den, 1e-300))

    def eval_exprs(exprs):
        return np.stack([e.eval_grid(*grid) for e in exprs], axis=-1)

    shape33 = (len(pts), len(pts), len(pts), 3, 3)

    lhs1 = eval_exprs(af.parametric_hessian(af.pullback_expressions(phi)))
    rhs1 = pullback(
        FieldKind.SYM_MATRIX, geom, af.hessian(phi).eval_grid(*grid).reshape(shape33)
    ).reshape(lhs1.shape)

    lhs2 = eval_exprs(af.parametric_row_curl(af.pullback_expressions(s_field)))
    rhs2 = pullback(
        FieldKind.TRACELESS_MATRIX,
        geom,
        af.row_curl(s_field).eval_grid(*grid).reshape(shape33),
    ).reshape(lhs2.shape)

    lhs3 = eval_exprs(af.parametric_row_div(af.pullback_expressions(t_field)))
    rhs3 = pullback(FieldKind.VECTOR, geom, af.row_div(t_field).eval_grid(*grid))

    return {
        "hessian": rel(lhs1 - rhs1, rhs1),
        "curl": rel(lhs2 - rhs2, rhs2),
        "div": rel(lhs3 - rhs3, rhs3),
    }
