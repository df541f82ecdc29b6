import numpy as np
import pytest

from hesscomplex.splines import KnotVector, Mesh1D, make_uniform_space

RNG = np.random.default_rng(20240817)

SPACES = [(2, 1, 2), (2, 1, 4), (3, 2, 5), (3, 1, 3), (4, 3, 4), (4, 2, 3), (1, 0, 6), (0, -1, 4)]


def test_uniform_space_dimensions():
    # dim = p + 1 + (N - 1)(p - r)
    s = make_uniform_space(2, 1, 2)
    assert s.dim == 4
    assert np.allclose(s.knots.values, [0, 0, 0, 0.5, 1, 1, 1])
    assert make_uniform_space(0, -1, 3).dim == 3
    assert make_uniform_space(2, 1, 1).dim == 3
    for p, r, n in SPACES:
        assert make_uniform_space(p, r, n).dim == p + 1 + (n - 1) * (p - r)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        make_uniform_space(2, 2, 2)  # r > p - 1
    with pytest.raises(ValueError):
        make_uniform_space(2, -2, 2)
    with pytest.raises(ValueError):
        make_uniform_space(-1, -1, 2)
    with pytest.raises(ValueError):
        make_uniform_space(2, 1, 0)
    with pytest.raises(ValueError):
        KnotVector(np.array([0.0, 0.0, 0.5, 1.0, 1.0]), 2)  # not open for p=2
    with pytest.raises(ValueError):
        Mesh1D(np.array([0.0, 0.5, 0.5, 1.0]))


def test_bernstein_values_and_derivative():
    b = make_uniform_space(2, 1, 1)
    vals = [b.eval_basis(i, 0.5) for i in range(3)]
    assert np.allclose(vals, [0.25, 0.5, 0.25], atol=1e-14)
    # d/dx (1-x)^2 at 0.5
    assert b.eval_basis_derivative(0, 0.5, 1) == pytest.approx(-1.0, abs=1e-14)


def test_degree0_indicator():
    s = make_uniform_space(0, -1, 2)
    assert s.eval_basis(0, 0.25) == 1.0
    assert s.eval_basis(1, 0.25) == 0.0
    assert s.eval_basis(1, 0.75) == 1.0


def test_index_validation():
    s = make_uniform_space(2, 1, 2)
    with pytest.raises(ValueError):
        s.eval_basis(s.dim, 0.5)
    with pytest.raises(ValueError):
        s.eval_basis(-1, 0.5)
    with pytest.raises(ValueError):
        s.eval_basis_derivative(0, 0.5, order=3)
    with pytest.raises(ValueError):
        make_uniform_space(1, 0, 2).eval_basis_derivative(0, 0.5, order=2)


@pytest.mark.parametrize("p,r,n", SPACES)
def test_partition_of_unity_and_nonnegativity(p, r, n):
    s = make_uniform_space(p, r, n)
    pts = np.concatenate([RNG.random(1000), [0.0, 1.0]])
    table = s.value_table(pts)
    assert np.abs(table.sum(axis=1) - 1.0).max() < 1e-12
    assert table.min() >= -1e-14


@pytest.mark.parametrize("p,r,n", SPACES)
def test_local_support(p, r, n):
    s = make_uniform_space(p, r, n)
    pts = RNG.random(200)
    table = s.value_table(pts)
    for i in range(s.dim):
        lo, hi = s.support(i)
        outside = (pts < lo - 1e-12) | (pts > hi + 1e-12)
        assert np.abs(table[outside, i]).max(initial=0.0) == 0.0


def test_derivative_matrix_bernstein():
    b = make_uniform_space(2, 1, 1)
    e = b.derivative_matrix().toarray()
    assert np.allclose(e, [[-2.0, 2.0, 0.0], [0.0, -2.0, 2.0]])


@pytest.mark.parametrize("p,r,n", [(2, 1, 2), (2, 1, 4), (3, 2, 8), (4, 3, 4), (4, 2, 6)])
def test_derivative_matrix_is_pointwise_derivative(p, r, n):
    s = make_uniform_space(p, r, n)
    e = s.derivative_matrix().toarray()
    target = s.derivative_space()
    pts = RNG.random(10)
    recon = target.value_table(pts) @ e
    assert np.abs(recon - s.derivative_table(pts, 1)).max() < 1e-12
    # constants have zero derivative
    assert np.abs(e @ np.ones(s.dim)).max() < 1e-13


def test_derivative_matrix_requires_degree_and_regularity():
    with pytest.raises(ValueError):
        make_uniform_space(0, -1, 2).derivative_matrix()
    with pytest.raises(ValueError):
        make_uniform_space(2, -1, 2).derivative_matrix()


@pytest.mark.parametrize("order", [1, 2])
def test_basis_derivatives_match_finite_differences(order):
    s = make_uniform_space(3, 2, 4)
    h = 1e-5
    for i in range(s.dim):
        for x in (0.11, 0.37, 0.62, 0.93):
            if order == 1:
                fd = (s.eval_basis(i, x + h) - s.eval_basis(i, x - h)) / (2 * h)
                tol = 1e-6
            else:
                fd = (
                    s.eval_basis(i, x + h) - 2 * s.eval_basis(i, x) + s.eval_basis(i, x - h)
                ) / h**2
                tol = 1e-4
            assert s.eval_basis_derivative(i, x, order) == pytest.approx(fd, abs=tol)


def test_derivative_of_partition_of_unity_is_zero():
    s = make_uniform_space(3, 2, 5)
    for x in (0.1, 0.5, 0.77):
        total = sum(s.eval_basis_derivative(i, x, 1) for i in range(s.dim))
        assert abs(total) < 1e-11


def test_support_extension():
    # whole domain on a single element
    assert make_uniform_space(2, 1, 1).support_extension(0) == (0.0, 1.0)
    # interval (xi_{i-p}, xi_{i+p+1}) clipped: first element of p=2, N=4
    s = make_uniform_space(2, 1, 4)
    assert s.support_extension(0) == (0.0, 0.75)
    assert s.support_extension(1) == (0.0, 1.0)
    assert s.support_extension(3) == (0.25, 1.0)
    # degree-0 supports are the element itself
    s0 = make_uniform_space(0, -1, 3)
    lo, hi = s0.support_extension(1)
    assert (lo, hi) == pytest.approx((1 / 3, 2 / 3))
    with pytest.raises(ValueError):
        s.support_extension(4)


@pytest.mark.parametrize("p,r,n", [(2, 1, 4), (3, 2, 4), (3, 1, 3), (4, 2, 3)])
def test_interior_smoothness(p, r, n):
    # one-sided limits agree at breakpoints: values for r >= 0, first
    # derivatives for r >= 1 (polynomial extension per element)
    s = make_uniform_space(p, r, n)
    for e in range(1, n):
        x = s.mesh.breakpoints[e]
        left, fl_ = s.eval_nonzero(x, element=e - 1)
        right, fr = s.eval_nonzero(x, element=e)
        vleft = np.zeros(s.dim)
        vleft[fl_ : fl_ + p + 1] = left
        vright = np.zeros(s.dim)
        vright[fr : fr + p + 1] = right
        assert np.abs(vleft - vright).max() < 1e-12
        if r >= 1:
            dl = s.derivative_table(np.array([x - 1e-9]), 1)[0]
            dr = s.derivative_table(np.array([x + 1e-9]), 1)[0]
            assert np.abs(dl - dr).max() < 1e-5


def test_greville_reproduces_identity():
    for p, r, n in [(2, 1, 3), (3, 2, 5), (4, 3, 2)]:
        s = make_uniform_space(p, r, n)
        pts = RNG.random(50)
        vals = s.value_table(pts) @ s.greville()
        assert np.abs(vals - pts).max() < 1e-13
