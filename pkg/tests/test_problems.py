import numpy as np
import pytest

from hesscomplex import assembly as asm
from hesscomplex import fields as fl
from hesscomplex import problems as pb
from hesscomplex.complexes import build_complex, hessian_matrix
from hesscomplex.geometry import FieldKind, deformed_cube, identity_geometry
from hesscomplex.projection import build_tensor_projector, physical_project
from hesscomplex.solve import SolveConfig, solve_symmetric

RNG = np.random.default_rng(808)
GEOM = deformed_cube()


@pytest.fixture(autouse=True)
def _fresh_cache():
    asm.clear_gram_cache()
    yield
    asm.clear_gram_cache()


def test_compute_errors_reproduction_of_projected_polynomial():
    # projecting a trilinear polynomial and measuring errors against it
    # gives zero (reproduction)
    cs = build_complex(2, 1, 2)
    geom = identity_geometry()
    x, y, z = fl.p1_expressions(geom)[1:]
    u = fl.Field(FieldKind.SCALAR, (x + 2.0 * y + 0.3 * z,), geom)
    proj = build_tensor_projector(1, cs.directions)
    coeffs = physical_project(proj, geom, u)
    errs = pb.compute_errors(
        1, coeffs, u, geom, cs,
        d_matrix=hessian_matrix(cs), d_exact=pb.derivative_field(1, u),
    )
    assert errs["graph"] < 1e-10


def test_compute_errors_zero_coefficients_give_field_norm():
    # int sin(pi t)^2 dt = 1/2 and int sin(pi t)^4 dt = 3/8 per factor
    cs = build_complex(2, 1, 2)
    geom = identity_geometry()
    u1 = fl.Field(FieldKind.SCALAR, (fl.Expression.sin_product(1),), geom)
    errs = pb.compute_errors(1, np.zeros(cs.dim(1)), u1, geom, cs)
    assert errs["l2"] == pytest.approx(0.5**1.5, rel=1e-12)
    u2 = fl.Field(FieldKind.SCALAR, (fl.Expression.sin_product(2),), geom)
    errs = pb.compute_errors(1, np.zeros(cs.dim(1)), u2, geom, cs)
    assert errs["l2"] == pytest.approx((3.0 / 8.0) ** 1.5, rel=1e-12)


def test_compute_errors_discrete_derivative_two_path():
    # for a discrete field the derivative error of its own image is zero:
    # the D-matrix route and direct derivative evaluation coincide
    cs = build_complex(2, 1, 2)
    c = RNG.standard_normal(cs.dim(1))
    d1 = hessian_matrix(cs)
    hess_disc = pb.DiscreteField(2, cs, GEOM, d1 @ c)
    errs = pb.compute_errors(1, c, pb.DiscreteField(1, cs, GEOM, c), GEOM, cs,
                             d_matrix=d1, d_exact=hess_disc)
    assert errs["graph"] < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_galerkin_consistency_in_space_solution(k):
    # when the exact solution pair lies in the discrete spaces the mixed
    # solve returns it to solver precision
    cs = build_complex(2, 1, 2)
    u = fl.manufactured_solution(k, GEOM)
    system = asm.build_saddle_system(k, cs, GEOM, fl.hodge_rhs(k, u))
    ustar = RNG.standard_normal(system.n_u)
    from scipy.sparse.linalg import spsolve

    sigstar = spsolve(system.mass_sigma.tocsc(), system.coupling.T @ ustar)
    rhs_u = system.coupling @ sigstar + (
        system.stiffness @ ustar if system.stiffness is not None else 0.0
    )
    rhs = np.concatenate([np.zeros(system.n_sigma), np.asarray(rhs_u)])
    x, rep = solve_symmetric(system.matrix, rhs)
    sig, uc = system.split(x)
    scale = max(np.abs(ustar).max(), 1.0)
    assert np.abs(uc - ustar).max() / scale < 1e-8
    assert np.abs(sig - sigstar).max() / scale < 1e-8


def test_solve_hodge_zero_solution():
    # f = 0 gives the zero solution and errors equal to the exact norms of
    # the zero field
    geom = GEOM
    zero = fl.Field(FieldKind.VECTOR, (fl.Expression(),) * 3, geom)
    case = pb.HodgeCase(
        k=4, geom=geom, u=zero,
        sigma=fl.Field(FieldKind.TRACELESS_MATRIX, (fl.Expression(),) * 9, geom),
        f=zero,
    )
    rep = pb.solve_hodge(case, 2, n_elements=2)
    assert rep.err_u_l2 < 1e-9
    assert rep.err_sigma_graph < 1e-9


def test_solve_hodge_k1_coarse_convergence():
    case = pb.manufactured_case(1, GEOM)
    r2 = pb.solve_hodge(case, 2, n_elements=2)
    r4 = pb.solve_hodge(case, 2, n_elements=4)
    assert r4.err_u_graph < r2.err_u_graph
    # sigma is reproduced exactly for this right-hand side (moments of the
    # compactly supported exact solution)
    assert r2.err_sigma_l2 < 1e-9
    assert r2.solver.residual < 1e-10
    assert (r2.dofs_sigma, r2.dofs_u) == (4, 64)


def test_convergence_study_rows_and_slopes():
    rows = pb.convergence_study(4, [2], [2, 4], GEOM)
    assert len(rows) == 2
    assert np.isnan(rows[0]["slope"])
    assert rows[1]["slope"] > 0.0
    assert rows[0]["dofs"] == 198 + 54
    for key in ("err_sigma_graph", "err_u_graph", "err_u_l2", "residual", "seconds"):
        assert key in rows[0]


def test_naive_mode_rejects_other_levels():
    case = pb.manufactured_case(1, GEOM)
    with pytest.raises(ValueError):
        pb.solve_hodge_naive(case, 2, 2)


def test_naive_mode_dof_bookkeeping():
    case = pb.manufactured_case(2, GEOM)
    rep = pb.solve_hodge_naive(case, 2, 2)
    n1 = build_complex(2, 1, 2).dim(1)
    assert rep.dofs_sigma == n1
    assert rep.dofs_u == 6 * n1
    case3 = pb.manufactured_case(3, GEOM)
    rep3 = pb.solve_hodge_naive(case3, 2, 2)
    assert rep3.dofs_sigma == 6 * n1
    assert rep3.dofs_u == 8 * n1


def test_naive_mode_zero_exact_solution():
    geom = identity_geometry()
    zero9 = fl.Field(FieldKind.SYM_MATRIX, (fl.Expression(),) * 9, geom)
    case = pb.HodgeCase(
        k=2, geom=geom,
        u=zero9,
        sigma=fl.Field(FieldKind.SCALAR, (fl.Expression(),), geom),
        f=zero9,
    )
    rep = pb.solve_hodge_naive(case, 2, 2)
    assert rep.err_u_graph < 1e-10
    assert rep.err_sigma_graph < 1e-10


def test_naive_galerkin_consistency_against_structure_preserving():
    # both discretizations solve the same weak form; with an in-space
    # right-hand side built from the naive system they agree on residuals
    case = pb.manufactured_case(2, GEOM)
    rep = pb.solve_hodge_naive(case, 2, 2, config=SolveConfig(tol=1e-10))
    assert rep.solver.residual < 1e-8


def test_leb_zero_initial_data():
    cs = build_complex(2, 1, 1)
    traj = pb.leb_evolve(
        np.zeros(cs.dim(1)), np.zeros(cs.dim(2)), np.zeros(cs.dim(3)),
        0.05, 0.5, cs, GEOM,
    )
    assert np.abs(traj.energies).max() == 0.0
    assert all(np.abs(s.sigma).max() == 0.0 for s in traj.states)


def test_leb_energy_conservation_and_row_counts():
    cs = build_complex(2, 1, 2)
    s0 = RNG.standard_normal(cs.dim(1))
    e0 = RNG.standard_normal(cs.dim(2))
    b0 = RNG.standard_normal(cs.dim(3))
    traj = pb.leb_evolve(s0, e0, b0, 0.01, 1.0, cs, GEOM, keep_states=False)
    assert len(traj.times) == 101
    assert traj.energy_drift <= 1e-10


def test_leb_first_step_consistency():
    # the midpoint step satisfies M1 (s1 - s0)/dt = D1^T M2 (e0 + e1)/2
    cs = build_complex(2, 1, 2)
    s0 = RNG.standard_normal(cs.dim(1))
    e0 = RNG.standard_normal(cs.dim(2))
    b0 = RNG.standard_normal(cs.dim(3))
    dt = 0.01
    traj = pb.leb_evolve(s0, e0, b0, dt, dt, cs, GEOM)
    st0, st1 = traj.states
    m1 = asm.mass_matrix(1, cs, GEOM)
    m2 = asm.mass_matrix(2, cs, GEOM)
    d1 = hessian_matrix(cs)
    lhs = m1 @ ((st1.sigma - st0.sigma) / dt)
    rhs = d1.T @ (m2 @ (0.5 * (st0.e_field + st1.e_field)))
    assert np.abs(lhs - rhs).max() / max(np.abs(rhs).max(), 1.0) < 1e-10


def test_leb_validates_inputs():
    cs = build_complex(2, 1, 1)
    with pytest.raises(ValueError):
        pb.leb_evolve(np.zeros(3), np.zeros(cs.dim(2)), np.zeros(cs.dim(3)), 0.1, 1.0, cs, GEOM)
    with pytest.raises(ValueError):
        pb.leb_evolve(
            np.zeros(cs.dim(1)), np.zeros(cs.dim(2)), np.zeros(cs.dim(3)), -0.1, 1.0, cs, GEOM
        )


def test_commuting_square_residuals_small():
    cs = build_complex(2, 1, 2)
    u = fl.manufactured_solution(2, GEOM)
    assert pb.verify_commuting_square(2, cs, GEOM, u) < 1e-8
