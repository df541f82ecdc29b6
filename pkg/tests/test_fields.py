import numpy as np
import pytest

from hesscomplex import fields as fl
from hesscomplex.geometry import FieldKind, deformed_cube, identity_geometry

RNG = np.random.default_rng(7)
GEOM = deformed_cube()


def richardson_partial(expr, x0, axis, h=1e-3):
    """Central difference with one Richardson step."""

    def central(hh):
        e = np.zeros(3)
        e[axis] = hh
        return (expr.eval_points(x0 + e) - expr.eval_points(x0 - e)) / (2 * hh)

    d1, d2 = central(h), central(h / 2)
    return (4 * d2 - d1) / 3


def test_partial_matches_finite_differences():
    expr = fl.Expression.sin_product(4) + fl.Expression.monomial(1, 3, 0.7)
    pts = RNG.random((5, 3)) * 0.8 + 0.1
    for axis in range(3):
        exact = expr.partial(axis).eval_points(pts)
        approx = richardson_partial(expr, pts, axis)
        assert np.abs(exact - approx).max() / max(np.abs(exact).max(), 1.0) < 1e-6


def test_differentiate_chain_rule_closed_form():
    # d/dz sin(pi z)^4 * g = 4 pi sin^3 cos * g
    expr = fl.Expression.separable(1.0, (4, 0, 0), (2, 0, 0), (1, 0, 0))
    d = fl.differentiate(expr, (1, 0, 0))
    pts = RNG.random((20, 3))
    z = pts[..., 0]
    expected = (
        4 * np.pi * np.sin(np.pi * z) ** 3 * np.cos(np.pi * z)
        * np.sin(np.pi * pts[..., 1]) ** 2
        * np.sin(np.pi * pts[..., 2])
    )
    assert np.abs(d.eval_points(pts) - expected).max() < 1e-12


def test_differentiate_constant_is_zero():
    c = fl.Expression.constant(3.5)
    assert fl.differentiate(c, (1, 1, 0)).is_zero()


def test_fourth_derivative_against_finite_differences():
    expr = fl.Expression.sin_pi_power(0, 4)
    d4 = fl.differentiate(expr, (4, 0, 0))
    x0 = np.array([[0.3, 0.5, 0.5]])
    h = 1e-2
    vals = []
    for k in range(-3, 4):
        vals.append(expr.eval_points(x0 + np.array([k * h, 0, 0]))[0])
    fd = (-vals[0] + 12 * vals[1] - 39 * vals[2] + 56 * vals[3]
          - 39 * vals[4] + 12 * vals[5] - vals[6]) / (6 * h**4)
    exact = d4.eval_points(x0)[0]
    assert abs(fd - exact) / abs(exact) < 1e-5


def test_product_and_grid_evaluation_agree():
    a = fl.Expression.sin_pi_power(0, 2) + fl.Expression.monomial(2, 2)
    b = fl.Expression.monomial(1, 1, 2.0)
    prod = a * b
    x = RNG.random(4)
    y = RNG.random(3)
    z = RNG.random(5)
    grid = prod.eval_grid(x, y, z)
    pts = np.stack(np.meshgrid(x, y, z, indexing="ij"), axis=-1)
    assert np.abs(grid - a.eval_points(pts) * b.eval_points(pts)).max() < 1e-13


def test_dev_sym_trace_identities():
    comps = tuple(
        fl.Expression.separable(RNG.standard_normal(), (2, 0, 0), (0, 0, 1), (1, 1, 0))
        for _ in range(9)
    )
    m = fl.Field(None, comps, GEOM)
    pts = RNG.random((30, 3))
    dev = fl.dev_part(m)
    assert np.abs(fl.trace_of(dev).eval_points(pts)).max() < 1e-13
    sym = fl.sym_part(m)
    vals = sym.eval_points(pts).reshape(-1, 3, 3)
    assert np.abs(vals - np.swapaxes(vals, -1, -2)).max() < 1e-14


def test_hessian_of_quadratic_physical_coordinate():
    # hessian of x^2 in physical coordinates is constant 2 e11
    x = fl.p1_expressions(GEOM)[1]
    f = fl.Field(FieldKind.SCALAR, (x * x,), GEOM)
    h = fl.hessian(f)
    vals = h.eval_points(RNG.random((10, 3))).reshape(-1, 3, 3)
    expected = np.zeros((3, 3))
    expected[0, 0] = 2.0
    assert np.abs(vals - expected).max() < 1e-12


def test_hodge_rhs_level4_constant_vector_is_zero():
    c = fl.Field(FieldKind.VECTOR, (fl.Expression.constant(1.0),) * 3, GEOM)
    f = fl.hodge_rhs(4, c)
    assert all(comp.is_zero() for comp in f.components)


def test_hodge_rhs_level1_finite_difference_oracle():
    u = fl.manufactured_solution(1, identity_geometry())
    f = fl.hodge_rhs(1, u)
    # check div div hessian phi at a point via Richardson-extrapolated
    # central differences
    phi = u.components[0]
    x0 = np.array([0.5, 0.5, 0.5])

    def phi_at(dx):
        return phi.eval_points(np.array([x0 + dx]))[0]

    def richardson(stencil, h):
        d1, d2 = stencil(h), stencil(h / 2)
        return (16 * d2 - d1) / 15

    def d4(axis):
        def stencil(h):
            e = np.zeros(3)
            e[axis] = h
            return (
                phi_at(2 * e) - 4 * phi_at(e) + 6 * phi_at(np.zeros(3))
                - 4 * phi_at(-e) + phi_at(-2 * e)
            ) / h**4

        return richardson(stencil, 1e-3)

    def d22(ai, aj):
        def stencil(h):
            def second(fun, axis):
                def out(dx):
                    e = np.zeros(3)
                    e[axis] = h
                    return (fun(dx + e) - 2 * fun(dx) + fun(dx - e)) / h**2

                return out

            return second(second(phi_at, ai), aj)(np.zeros(3))

        return richardson(stencil, 1e-3)

    dd = d4(0) + d4(1) + d4(2) + 2 * (d22(0, 1) + d22(0, 2) + d22(1, 2))
    pi_term = fl.p1_field(fl.p1_projection_coefficients(u), u.geom)
    expected = pi_term.components[0].eval_points(np.array([x0]))[0] + dd
    got = f.components[0].eval_points(np.array([x0]))[0]
    assert abs(got - expected) / abs(expected) < 1e-5


def test_hodge_rhs_level3_is_traceless():
    u = fl.manufactured_solution(3, GEOM)
    f = fl.hodge_rhs(3, u)
    pts = RNG.random((25, 3))
    tr = fl.trace_of(f)
    assert np.abs(tr.eval_points(pts)).max() < 1e-12


def test_dual_solution_level4_traceless_relation():
    u = fl.manufactured_solution(4, GEOM)
    t = fl.dual_solution(4, u)
    pts = RNG.random((25, 3))
    assert np.abs(fl.trace_of(t).eval_points(pts)).max() < 1e-13
    # matches -dev(grad v) componentwise
    ref = fl.scale_field(-1.0, fl.dev_part(fl.gradient(u)))
    assert np.abs(t.eval_points(pts) - ref.eval_points(pts)).max() < 1e-13


def test_dual_solution_level2_constant_matrix_gives_zero():
    s = fl.Field(FieldKind.SYM_MATRIX, (fl.Expression.constant(1.0),) * 9, GEOM)
    phi = fl.dual_solution(2, s)
    assert phi.components[0].is_zero()


def test_dual_solution_level3_finite_difference_curl():
    u = fl.manufactured_solution(3, GEOM)
    s = fl.dual_solution(3, u)
    pts = RNG.random((5, 3)) * 0.6 + 0.2
    # sym row-curl via finite differences of the physical field
    h = 1e-4

    def phys_entry(i, j, at):
        return u.components[3 * i + j].eval_points(GEOM.unmap_points(at))

    def curl_entry(i, a, at):
        j1, j2 = [(1, 2), (2, 0), (0, 1)][a]
        e1 = np.zeros(3)
        e1[j1] = h
        e2 = np.zeros(3)
        e2[j2] = h
        d1 = (phys_entry(i, j2, at + e1) - phys_entry(i, j2, at - e1)) / (2 * h)
        d2 = (phys_entry(i, j1, at + e2) - phys_entry(i, j1, at - e2)) / (2 * h)
        return d1 - d2

    at = GEOM.map_points(pts)
    got = s.eval_points(pts).reshape(-1, 3, 3)
    fd = np.zeros_like(got)
    for i in range(3):
        for a in range(3):
            fd[:, i, a] = curl_entry(i, a, at)
    fd = 0.5 * (fd + np.swapaxes(fd, -1, -2))
    assert np.abs(got - fd).max() / np.abs(got).max() < 1e-6


def test_manufactured_solutions_shapes_and_traces():
    pts = RNG.random((10, 3))
    u2 = fl.manufactured_solution(2, GEOM)
    vals = u2.eval_points(pts).reshape(-1, 3, 3)
    assert np.abs(vals - np.swapaxes(vals, -1, -2)).max() == 0.0
    u3 = fl.manufactured_solution(3, GEOM)
    assert np.abs(fl.trace_of(u3).eval_points(pts)).max() < 1e-15
    with pytest.raises(ValueError):
        fl.manufactured_solution(5, GEOM)


def test_p1_projection_reproduces_linears():
    # projecting a linear polynomial returns its own coefficients
    coeffs = np.array([0.3, -1.2, 0.8, 2.0])
    f = fl.p1_field(coeffs, GEOM)
    out = fl.p1_projection_coefficients(f)
    assert np.abs(out - coeffs).max() < 1e-12
