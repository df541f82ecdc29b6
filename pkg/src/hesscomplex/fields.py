"""Closed-form separable fields with exact differentiation.

An :class:`Expression` is a sum of terms ``c * f1(z1) f2(z2) f3(z3)`` where
each univariate factor is ``sin(pi z)^a cos(pi z)^b z^m``.  This class is
closed under partial differentiation, addition and products, which is all the
manufactured solutions and their right-hand sides need: applying the level-k
operators (fourth order at most) stays exact, so convergence studies carry no
differencing noise.

A :class:`Field` wraps component expressions in *parametric* coordinates
together with the affine geometry: the physical field value at x = F(z) is
the stored expression evaluated at z.  Physical derivatives are linear
combinations of parametric ones through the constant inverse Jacobian, so
all operators below are exact as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .geometry import AffineGeometry, FieldKind

__all__ = [
    "Expression",
    "Field",
    "differentiate",
    "hessian",
    "row_curl",
    "row_div",
    "gradient",
    "divdiv",
    "sym_part",
    "dev_part",
    "trace_of",
    "hodge_rhs",
    "dual_solution",
    "manufactured_solution",
    "default_smooth_fields",
    "p1_expressions",
    "p1_projection_coefficients",
    "p1_field",
]

PI = np.pi

# univariate factor sin(pi z)^a * cos(pi z)^b * z^m, encoded (a, b, m)
Factor = tuple[int, int, int]
ONE: Factor = (0, 0, 0)


def _factor_eval(f: Factor, x: np.ndarray) -> np.ndarray:
    a, b, m = f
    out = np.ones_like(x)
    if a:
        out = out * np.sin(PI * x) ** a
    if b:
        out = out * np.cos(PI * x) ** b
    if m:
        out = out * x**m
    return out


def _factor_partial(f: Factor) -> list[tuple[float, Factor]]:
    a, b, m = f
    out = []
    if a:
        out.append((a * PI, (a - 1, b + 1, m)))
    if b:
        out.append((-b * PI, (a + 1, b - 1, m)))
    if m:
        out.append((float(m), (a, b, m - 1)))
    return out


def _factor_mul(f: Factor, g: Factor) -> Factor:
    return (f[0] + g[0], f[1] + g[1], f[2] + g[2])


class Expression:
    """Sum of separable sin/cos/monomial product terms on the unit cube."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms: dict[tuple[Factor, Factor, Factor], float] = {}
        if terms:
            for key, coef in terms.items():
                if coef != 0.0:
                    self.terms[key] = self.terms.get(key, 0.0) + coef

    # -- constructors ----------------------------------------------------

    @classmethod
    def constant(cls, c: float) -> "Expression":
        return cls({(ONE, ONE, ONE): float(c)})

    @classmethod
    def separable(cls, coef: float, f1: Factor, f2: Factor, f3: Factor) -> "Expression":
        return cls({(f1, f2, f3): float(coef)})

    @classmethod
    def monomial(cls, axis: int, power: int, coef: float = 1.0) -> "Expression":
        key = [ONE, ONE, ONE]
        key[axis] = (0, 0, power)
        return cls({tuple(key): float(coef)})

    @classmethod
    def sin_pi_power(cls, axis: int, power: int, coef: float = 1.0) -> "Expression":
        key = [ONE, ONE, ONE]
        key[axis] = (power, 0, 0)
        return cls({tuple(key): float(coef)})

    @classmethod
    def sin_product(cls, power: int) -> "Expression":
        """sin(pi z1)^power sin(pi z2)^power sin(pi z3)^power."""
        f = (power, 0, 0)
        return cls({(f, f, f): 1.0})

    # -- algebra ---------------------------------------------------------

    def __add__(self, other: "Expression") -> "Expression":
        out = dict(self.terms)
        for key, coef in other.terms.items():
            out[key] = out.get(key, 0.0) + coef
        return Expression(out)

    def __sub__(self, other: "Expression") -> "Expression":
        return self + (-1.0) * other

    def __neg__(self) -> "Expression":
        return (-1.0) * self

    def __rmul__(self, scalar: float) -> "Expression":
        return Expression({k: scalar * c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Expression):
            out: dict = {}
            for ka, ca in self.terms.items():
                for kb, cb in other.terms.items():
                    key = tuple(_factor_mul(fa, fb) for fa, fb in zip(ka, kb))
                    out[key] = out.get(key, 0.0) + ca * cb
            return Expression(out)
        return self.__rmul__(other)

    def is_zero(self) -> bool:
        return not any(abs(c) > 0.0 for c in self.terms.values())

    # -- calculus --------------------------------------------------------

    def partial(self, axis: int) -> "Expression":
        """Exact parametric partial derivative along ``axis`` in {0, 1, 2}."""
        out: dict = {}
        for key, coef in self.terms.items():
            for dcoef, dfac in _factor_partial(key[axis]):
                new = list(key)
                new[axis] = dfac
                k = tuple(new)
                out[k] = out.get(k, 0.0) + coef * dcoef
        return Expression(out)

    # -- evaluation -------------------------------------------------------

    def eval_grid(self, x1: np.ndarray, x2: np.ndarray, x3: np.ndarray) -> np.ndarray:
        """Values on the tensor grid x1 x x2 x x3, exploiting separability."""
        x1, x2, x3 = (np.asarray(x, float) for x in (x1, x2, x3))
        out = np.zeros((len(x1), len(x2), len(x3)))
        for (f1, f2, f3), coef in self.terms.items():
            out += coef * np.einsum(
                "i,j,k->ijk", _factor_eval(f1, x1), _factor_eval(f2, x2), _factor_eval(f3, x3)
            )
        return out

    def eval_points(self, pts: np.ndarray) -> np.ndarray:
        """Values at scattered parametric points shaped (..., 3)."""
        pts = np.asarray(pts, float)
        out = np.zeros(pts.shape[:-1])
        for (f1, f2, f3), coef in self.terms.items():
            out += (
                coef
                * _factor_eval(f1, pts[..., 0])
                * _factor_eval(f2, pts[..., 1])
                * _factor_eval(f3, pts[..., 2])
            )
        return out


ZERO = Expression()


def differentiate(expr: Expression, alpha: Iterable[int]) -> Expression:
    """Exact mixed parametric derivative; ``alpha`` is the multi-index
    (orders per direction)."""
    out = expr
    for axis, order in enumerate(alpha):
        for _ in range(order):
            out = out.partial(axis)
    return out


# ---------------------------------------------------------------------------
# physical fields
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Field:
    """Analytic physical field; components stored as parametric expressions.

    ``components`` holds 1 expression for scalars, 3 for vectors and 9
    (row-major) for matrices.  ``kind`` records how the field transforms.
    """

    kind: FieldKind | None
    components: tuple[Expression, ...]
    geom: AffineGeometry

    def __post_init__(self):
        n = len(self.components)
        expected = {FieldKind.SCALAR: 1, FieldKind.VECTOR: 3}
        if self.kind in expected and n != expected[self.kind]:
            raise ValueError(f"{self.kind} field needs {expected[self.kind]} components")
        if self.kind in (FieldKind.SYM_MATRIX, FieldKind.TRACELESS_MATRIX) and n != 9:
            raise ValueError("matrix fields store 9 row-major components")

    @property
    def nc(self) -> int:
        return len(self.components)

    def entry(self, i: int, j: int) -> Expression:
        return self.components[3 * i + j]

    def phys_partial(self, comp: Expression, axis: int) -> Expression:
        """Physical derivative via the constant inverse Jacobian chain rule."""
        inv = self.geom.inverse
        out = ZERO
        for m in range(3):
            c = inv[m, axis]
            if c != 0.0:
                out = out + c * comp.partial(m)
        return out

    def eval_grid(self, x1, x2, x3) -> np.ndarray:
        """Component values on a parametric tensor grid, stacked last."""
        return np.stack([c.eval_grid(x1, x2, x3) for c in self.components], axis=-1)

    def eval_points(self, pts) -> np.ndarray:
        return np.stack([c.eval_points(pts) for c in self.components], axis=-1)


def _matrix_field(entries, geom, kind=None) -> Field:
    comps = tuple(entries[i][j] for i in range(3) for j in range(3))
    return Field(kind, comps, geom)


def hessian(f: Field) -> Field:
    """Physical Hessian of a scalar field (symmetric matrix field)."""
    phi = f.components[0]
    ent = [[f.phys_partial(f.phys_partial(phi, i), j) for j in range(3)] for i in range(3)]
    return _matrix_field(ent, f.geom, FieldKind.SYM_MATRIX)


def gradient(f: Field) -> Field:
    """Jacobian matrix of a vector field, entry (i, j) = d v_i / d x_j."""
    ent = [[f.phys_partial(f.components[i], j) for j in range(3)] for i in range(3)]
    return _matrix_field(ent, f.geom, None)


def row_curl(f: Field) -> Field:
    """Row-wise curl of a matrix field."""
    ent = [[ZERO] * 3 for _ in range(3)]
    for i in range(3):
        r = [f.entry(i, 0), f.entry(i, 1), f.entry(i, 2)]
        ent[i][0] = f.phys_partial(r[2], 1) - f.phys_partial(r[1], 2)
        ent[i][1] = f.phys_partial(r[0], 2) - f.phys_partial(r[2], 0)
        ent[i][2] = f.phys_partial(r[1], 0) - f.phys_partial(r[0], 1)
    kind = FieldKind.TRACELESS_MATRIX if f.kind is FieldKind.SYM_MATRIX else None
    return _matrix_field(ent, f.geom, kind)


def row_div(f: Field) -> Field:
    """Row-wise divergence of a matrix field (vector field)."""
    comps = tuple(
        f.phys_partial(f.entry(i, 0), 0)
        + f.phys_partial(f.entry(i, 1), 1)
        + f.phys_partial(f.entry(i, 2), 2)
        for i in range(3)
    )
    return Field(FieldKind.VECTOR, comps, f.geom)


def divdiv(f: Field) -> Field:
    """Double divergence of a matrix field (scalar field)."""
    d = row_div(f)
    out = ZERO
    for i in range(3):
        out = out + d.phys_partial(d.components[i], i)
    return Field(FieldKind.SCALAR, (out,), f.geom)


def sym_part(f: Field, kind=FieldKind.SYM_MATRIX) -> Field:
    """(M + M^T) / 2; the symmetrization dictated by L2 duality."""
    ent = [[0.5 * (f.entry(i, j) + f.entry(j, i)) for j in range(3)] for i in range(3)]
    return _matrix_field(ent, f.geom, kind)


def dev_part(f: Field, kind=FieldKind.TRACELESS_MATRIX) -> Field:
    """Deviatoric (trace-free) part M - tr(M)/3 I."""
    tr = trace_of(f)
    ent = [[f.entry(i, j) for j in range(3)] for i in range(3)]
    for i in range(3):
        ent[i][i] = ent[i][i] - (1.0 / 3.0) * tr
    return _matrix_field(ent, f.geom, kind)


def trace_of(f: Field) -> Expression:
    return f.entry(0, 0) + f.entry(1, 1) + f.entry(2, 2)


def scale_field(c: float, f: Field) -> Field:
    return Field(f.kind, tuple(c * comp for comp in f.components), f.geom)


def add_fields(a: Field, b: Field, kind=None) -> Field:
    if a.nc != b.nc:
        raise ValueError("component count mismatch")
    return Field(kind or a.kind, tuple(x + y for x, y in zip(a.components, b.components)), a.geom)


# ---------------------------------------------------------------------------
# parametric-side operators (for the pullback commutation check)
# ---------------------------------------------------------------------------


def pullback_expressions(f: Field) -> list[Expression]:
    """Symbolic parametric entries of the pulled-back field."""
    g = f.geom
    j = g.jacobian
    if f.kind is FieldKind.SCALAR:
        return [f.components[0]]
    if f.kind is FieldKind.VECTOR:
        return [
            g.det * _combo([(j[c, a], f.components[c]) for c in range(3)])
            for a in range(3)
        ]
    if f.kind is FieldKind.SYM_MATRIX:
        return [
            _combo(
                [
                    (j[c, a] * j[d, b], f.entry(c, d))
                    for c in range(3)
                    for d in range(3)
                ]
            )
            for a in range(3)
            for b in range(3)
        ]
    if f.kind is FieldKind.TRACELESS_MATRIX:
        inv = g.inverse
        return [
            g.det
            * _combo(
                [
                    (j[c, a] * inv[b, d], f.entry(c, d))
                    for c in range(3)
                    for d in range(3)
                ]
            )
            for a in range(3)
            for b in range(3)
        ]
    raise ValueError("field kind required for pullback")


def _combo(pairs) -> Expression:
    out = ZERO
    for coef, expr in pairs:
        if coef != 0.0:
            out = out + coef * expr
    return out


def parametric_hessian(exprs: list[Expression]) -> list[Expression]:
    phi = exprs[0]
    return [phi.partial(i).partial(j) for i in range(3) for j in range(3)]


def parametric_row_curl(mat9: list[Expression]) -> list[Expression]:
    out = []
    for i in range(3):
        r = mat9[3 * i : 3 * i + 3]
        out += [
            r[2].partial(1) - r[1].partial(2),
            r[0].partial(2) - r[2].partial(0),
            r[1].partial(0) - r[0].partial(1),
        ]
    return out


def parametric_row_div(mat9: list[Expression]) -> list[Expression]:
    return [
        mat9[3 * i + 0].partial(0) + mat9[3 * i + 1].partial(1) + mat9[3 * i + 2].partial(2)
        for i in range(3)
    ]


# ---------------------------------------------------------------------------
# linear polynomial (lowest complex level) helpers
# ---------------------------------------------------------------------------


def p1_expressions(geom: AffineGeometry) -> list[Expression]:
    """The basis {1, x, y, z} of physical linear polynomials, written in
    parametric coordinates through x = A z + b."""
    out = [Expression.constant(1.0)]
    for i in range(3):
        e = Expression.constant(float(geom.offset[i]))
        for m in range(3):
            c = geom.matrix[i, m]
            if c != 0.0:
                e = e + Expression.monomial(m, 1, c)
        out.append(e)
    return out


def p1_projection_coefficients(f: Field, n_quad: int = 24) -> np.ndarray:
    """L2-orthogonal projection of a scalar field onto {1, x, y, z}; returns
    the 4 coefficients.  Integrals by Gauss quadrature on the unit cube."""
    x, w = np.polynomial.legendre.leggauss(n_quad)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
    basis = p1_expressions(f.geom)
    vals = [b.eval_grid(x, x, x) for b in basis]
    gram = np.array(
        [[np.sum(w3 * vals[i] * vals[j]) for j in range(4)] for i in range(4)]
    ) * f.geom.abs_det
    phi = f.components[0].eval_grid(x, x, x)
    rhs = np.array([np.sum(w3 * phi * vals[j]) for j in range(4)]) * f.geom.abs_det
    return np.linalg.solve(gram, rhs)


def p1_field(coeffs: np.ndarray, geom: AffineGeometry) -> Field:
    basis = p1_expressions(geom)
    expr = ZERO
    for c, b in zip(coeffs, basis):
        expr = expr + float(c) * b
    return Field(FieldKind.SCALAR, (expr,), geom)


# ---------------------------------------------------------------------------
# manufactured solutions, right-hand sides, companion fields
# ---------------------------------------------------------------------------


def manufactured_solution(k: int, geom: AffineGeometry) -> Field:
    """The smooth exact solutions of the experiment suite.

    Level 1 uses the product of sin^4 factors; levels 2..4 are built from
    v = product of sin^2 factors: the full matrix of v's (symmetric), a
    traceless matrix with v entries, and the constant-direction vector
    (v, v, v).
    """
    if k == 1:
        return Field(FieldKind.SCALAR, (Expression.sin_product(4),), geom)
    v = Expression.sin_product(2)
    if k == 2:
        return Field(FieldKind.SYM_MATRIX, (v,) * 9, geom)
    if k == 3:
        comps = (v, v, v, ZERO, v, ZERO, ZERO, ZERO, -2.0 * v)
        return Field(FieldKind.TRACELESS_MATRIX, comps, geom)
    if k == 4:
        return Field(FieldKind.VECTOR, (v, v, v), geom)
    raise ValueError(f"level must be 1..4, got {k}")


def default_smooth_fields(geom: AffineGeometry):
    """Scalar, symmetric and traceless smooth test fields."""
    return (
        manufactured_solution(1, geom),
        manufactured_solution(2, geom),
        manufactured_solution(3, geom),
    )


def hodge_rhs(k: int, u: Field, geom: AffineGeometry | None = None) -> Field:
    """Right-hand side f = L_k u by exact application of the level-k
    operator (the linear-polynomial projection is computed by quadrature)."""
    geom = geom or u.geom
    if k == 1:
        pi_u = p1_field(p1_projection_coefficients(u), geom)
        dd = divdiv(hessian(u))
        return Field(FieldKind.SCALAR, (pi_u.components[0] + dd.components[0],), geom)
    if k == 2:
        a = sym_part(row_curl(row_curl(u)))
        b = hessian(divdiv(u))
        return add_fields(a, b, FieldKind.SYM_MATRIX)
    if k == 3:
        a = dev_part(gradient(row_div(u)))
        b = row_curl(sym_part(row_curl(u)))
        return add_fields(scale_field(-1.0, a), b, FieldKind.TRACELESS_MATRIX)
    if k == 4:
        return scale_field(-1.0, row_div(dev_part(gradient(u))))
    raise ValueError(f"level must be 1..4, got {k}")


def dual_solution(k: int, u: Field, geom: AffineGeometry | None = None) -> Field:
    """Companion exact field sigma of the mixed formulation at level k."""
    geom = geom or u.geom
    if k == 1:
        return p1_field(p1_projection_coefficients(u), geom)
    if k == 2:
        return divdiv(u)
    if k == 3:
        return sym_part(row_curl(u))
    if k == 4:
        return scale_field(-1.0, dev_part(gradient(u)))
    raise ValueError(f"level must be 1..4, got {k}")
