"""Galerkin assembly on the parametric cube with constant affine metric
weights.

Because the geometry map is affine, every physical L2 pairing of two
component basis functions factors into a constant metric weight times a
separable integral, so matrices are built from 3D cross Gram matrices of
component spaces.  Grams are assembled element by element (per-element
univariate local Gram blocks combined into the dense local block and
scattered into triplets; numba kernel with numpy fallback), or via Kronecker
products of global univariate Grams as the fast path on identity geometry
and as an independent oracle in tests.

The metric weight tensors pair the 9 (or 3, or 1) pulled-back matrix entries
of the two sides:

* level 1:  |det J|
* level 2:  G_ik G_jl |det J|          with G = J^{-1} J^{-T}
* level 3:  G_ik H_jl / |det J|        with H = J^T J
* level 4:  G_ik / |det J|

A generic entry-term bilinear assembler covers the non-structure-preserving
(componentwise scalar) discretization and the quadrature cross-checks of the
factorized stiffness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .complexes import (
    SYM_COMPONENT_OF_ENTRY,
    TR_ENTRY_TABLE,
    ComplexSpaces,
    TensorSplineSpace,
)
from .fields import Field, p1_expressions
from .geometry import AffineGeometry, FieldKind, pullback, pushforward
from .quadrature import element_rule, smooth_rule_order

__all__ = [
    "gram_3d",
    "clear_gram_cache",
    "metric_weights",
    "entry_component_table",
    "mass_matrix",
    "coupling_matrix",
    "stiffness_matrix",
    "load_vector",
    "p1_embedding",
    "p1_gram",
    "SaddleSystem",
    "build_saddle_system",
    "evaluate_entry_grids",
    "quadrature_grid",
    "assemble_bilinear",
    "EntryTerm",
    "LEVEL_KIND",
]

LEVEL_KIND = {
    1: FieldKind.SCALAR,
    2: FieldKind.SYM_MATRIX,
    3: FieldKind.TRACELESS_MATRIX,
    4: FieldKind.VECTOR,
}

_GRAM_CACHE: dict = {}


def clear_gram_cache() -> None:
    _GRAM_CACHE.clear()


def _univariate_gram(sa, sb, q: int) -> np.ndarray:
    rule = element_rule(sa.mesh, q)
    ta, fa = sa.element_tables(rule.nodes)
    tb, fb = sb.element_tables(rule.nodes)
    loc = kernels.local_grams(ta, tb, rule.weights)
    out = np.zeros((sa.dim, sb.dim))
    la, lb = ta.shape[2], tb.shape[2]
    for e in range(loc.shape[0]):
        out[fa[e] : fa[e] + la, fb[e] : fb[e] + lb] += loc[e]
    return out


def gram_3d(
    sa: TensorSplineSpace,
    sb: TensorSplineSpace,
    q: int | None = None,
    method: str = "elements",
) -> sp.csr_matrix:
    """Cross mass matrix of two tensor spline spaces on the shared mesh.

    ``method='elements'`` loops mesh elements and scatters dense local
    blocks; ``method='kron'`` forms the Kronecker product of the three
    univariate Grams.  The results agree to roundoff.
    """
    if q is None:
        q = max(max(sa.degrees), max(sb.degrees)) + 2
    key = (sa.signature, sb.signature, q, method)
    hit = _GRAM_CACHE.get(key)
    if hit is not None:
        return hit
    if method == "kron":
        g1, g2, g3 = (
            sp.csr_matrix(_univariate_gram(a, b, q))
            for a, b in zip(sa.spaces, sb.spaces)
        )
        out = sp.kron(sp.kron(g1, g2), g3).tocsr()
    elif method == "elements":
        locs, fas, fbs = [], [], []
        for a, b in zip(sa.spaces, sb.spaces):
            rule = element_rule(a.mesh, q)
            ta, fa = a.element_tables(rule.nodes)
            tb, fb = b.element_tables(rule.nodes)
            locs.append(kernels.local_grams(ta, tb, rule.weights))
            fas.append(fa)
            fbs.append(fb)
        rows, cols, vals = kernels.gram3d_triplets(
            locs[0], locs[1], locs[2], fas, fbs, sa.shape, sb.shape
        )
        out = sp.coo_matrix((vals, (rows, cols)), shape=(sa.dim, sb.dim)).tocsr()
    else:
        raise ValueError(f"unknown gram method {method!r}")
    _GRAM_CACHE[key] = out
    return out


def metric_weights(level: int, geom: AffineGeometry) -> np.ndarray:
    """Constant entry-pairing weights of the physical L2 product in terms of
    pulled-back entries."""
    g = geom.inverse @ geom.inverse.T
    h = geom.jacobian.T @ geom.jacobian
    d = geom.abs_det
    if level == 1:
        return np.array([[d]])
    if level == 2:
        return np.einsum("ik,jl->ijkl", g, g).reshape(9, 9) * d
    if level == 3:
        return np.einsum("ik,jl->ijkl", g, h).reshape(9, 9) / d
    if level == 4:
        return g / d
    raise ValueError(f"level must be 1..4, got {level}")


def entry_component_table(level: int) -> list[list[tuple[int, float]]]:
    """Per pulled-back entry: the (component index, sign) terms composing it."""
    if level == 1:
        return [[(0, 1.0)]]
    if level == 2:
        return [
            [(SYM_COMPONENT_OF_ENTRY[(i, j)], 1.0)] for i in range(3) for j in range(3)
        ]
    if level == 3:
        return [list(TR_ENTRY_TABLE[(i, j)]) for i in range(3) for j in range(3)]
    if level == 4:
        return [[(c, 1.0)] for c in range(3)]
    raise ValueError(f"level must be 1..4, got {level}")


def _collapsed_weights(level: int, geom: AffineGeometry, n_comp: int) -> np.ndarray:
    table = entry_component_table(level)
    w = metric_weights(level, geom)
    out = np.zeros((n_comp, n_comp))
    for e, terms_e in enumerate(table):
        for e2, terms_e2 in enumerate(table):
            wee = w[e, e2]
            if wee == 0.0:
                continue
            for a, sa in terms_e:
                for b, sb in terms_e2:
                    out[a, b] += wee * sa * sb
    return out


def mass_matrix(
    level: int,
    cs: ComplexSpaces,
    geom: AffineGeometry,
    q: int | None = None,
    method: str | None = None,
) -> sp.csr_matrix:
    """Symmetric positive definite physical mass matrix of a level."""
    comps = cs.components(level)
    if method is None:
        method = "kron" if geom.is_identity else "elements"
    w = _collapsed_weights(level, geom, len(comps))
    blocks = [[None] * len(comps) for _ in comps]
    for a in range(len(comps)):
        for b in range(len(comps)):
            if w[a, b] == 0.0:
                continue
            blocks[a][b] = w[a, b] * gram_3d(comps[a], comps[b], q, method)
    return sp.bmat(blocks, format="csr")


def coupling_matrix(
    k: int,
    cs: ComplexSpaces,
    geom: AffineGeometry,
    d_prev: sp.spmatrix,
    q: int | None = None,
) -> sp.csr_matrix:
    """B = M_k d^{k-1}: pairing of differentiated level-(k-1) fields with
    level-k test functions."""
    m = mass_matrix(k, cs, geom, q)
    if d_prev.shape[0] != m.shape[1]:
        raise ValueError("differential target does not match level")
    return (m @ d_prev).tocsr()


def stiffness_matrix(
    d_k: sp.spmatrix, mass_next: sp.spmatrix
) -> sp.csr_matrix:
    """K = d_k^T M_{k+1} d_k, exactly factorized through the coefficient map."""
    return (d_k.T @ mass_next @ d_k).tocsr()


# ---------------------------------------------------------------------------
# quadrature grids, field entry evaluation and load vectors
# ---------------------------------------------------------------------------


def quadrature_grid(cs: ComplexSpaces, q: int | None = None):
    """Per-direction flat quadrature nodes and weights on the shared mesh."""
    if q is None:
        q = smooth_rule_order(cs.p, cs.n_elements)
    rules = [element_rule(s.mesh, q) for s in cs.directions]
    nodes = tuple(r.flat_nodes for r in rules)
    weights = tuple(r.flat_weights for r in rules)
    return nodes, weights


def evaluate_entry_grids(
    level: int, cs: ComplexSpaces, coeffs: np.ndarray, grid
) -> np.ndarray:
    """Pulled-back entry values of a coefficient vector on a tensor grid,
    shaped (m1, m2, m3, n_entries)."""
    comps = cs.split(level, np.asarray(coeffs, float))
    spaces = cs.components(level)
    vals = [s.evaluate(c, grid) for s, c in zip(spaces, comps)]
    table = entry_component_table(level)
    out = np.zeros(vals[0].shape + (len(table),))
    for e, terms in enumerate(table):
        for a, sign in terms:
            out[..., e] += sign * vals[a]
    return out


def field_pullback_entries(
    level: int, geom: AffineGeometry, field: Field, grid
) -> np.ndarray:
    """Pulled-back entries of an analytic physical field on a tensor grid."""
    vals = field.eval_grid(*grid)
    kind = LEVEL_KIND[level]
    if kind is FieldKind.SCALAR:
        return pullback(kind, geom, vals[..., 0])[..., None]
    if kind is FieldKind.VECTOR:
        return pullback(kind, geom, vals)
    mat = pullback(kind, geom, vals.reshape(*vals.shape[:3], 3, 3))
    return mat.reshape(*vals.shape[:3], 9)


def entries_to_physical(level: int, geom: AffineGeometry, entries: np.ndarray) -> np.ndarray:
    """Push pulled-back entry grids forward to physical entry values."""
    kind = LEVEL_KIND[level]
    if kind is FieldKind.SCALAR:
        return entries
    if kind is FieldKind.VECTOR:
        return pushforward(kind, geom, entries)
    mat = pushforward(kind, geom, entries.reshape(*entries.shape[:-1], 3, 3))
    return mat.reshape(*entries.shape[:-1], 9)


def load_vector(
    level: int,
    f: Field,
    cs: ComplexSpaces,
    geom: AffineGeometry,
    q: int | None = None,
) -> np.ndarray:
    """Right-hand side <f, basis_i> over all components of a level."""
    if f.nc != {1: 1, 2: 9, 3: 9, 4: 3}[level]:
        raise ValueError(f"field with {f.nc} components does not match level {level}")
    grid, weights = quadrature_grid(cs, q)
    fhat = field_pullback_entries(level, geom, f, grid)
    w = metric_weights(level, geom)
    paired = np.einsum("xyze,ea->xyza", fhat, w)
    table = entry_component_table(level)
    spaces = cs.components(level)
    out = []
    for a, space in enumerate(spaces):
        g = np.zeros(paired.shape[:3])
        for e, terms in enumerate(table):
            for comp, sign in terms:
                if comp == a:
                    g += sign * paired[..., e]
        t1, t2, t3 = space.value_tables(grid)
        acc = np.tensordot(t1 * weights[0][None, :], g, axes=(1, 0))  # (n1,m2,m3)
        acc = np.tensordot(acc, (t2 * weights[1][None, :]).T, axes=(1, 0))  # (n1,m3,n2)
        acc = np.tensordot(acc, (t3 * weights[2][None, :]).T, axes=(1, 0))  # (n1,n2,n3)
        out.append(acc.reshape(-1))
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# lowest level: linear polynomials
# ---------------------------------------------------------------------------


def p1_gram(geom: AffineGeometry, n_quad: int = 4) -> np.ndarray:
    """4x4 Gram of the physical basis {1, x, y, z} by quadrature."""
    x, w = np.polynomial.legendre.leggauss(n_quad)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
    vals = [b.eval_grid(x, x, x) for b in p1_expressions(geom)]
    return (
        np.array([[np.sum(w3 * vi * vj) for vj in vals] for vi in vals])
        * geom.abs_det
    )


def p1_embedding(cs: ComplexSpaces, geom: AffineGeometry) -> sp.csr_matrix:
    """Exact spline coefficients of the physical polynomials {1, x, y, z}
    in the scalar level; linear functions have Greville coefficients."""
    g1, g2, g3 = (s.greville() for s in cs.directions)
    shape = cs.level1.shape
    cols = [np.ones(shape).reshape(-1)]
    for i in range(3):
        a = geom.matrix[i]
        c = (
            geom.offset[i]
            + a[0] * g1[:, None, None]
            + a[1] * g2[None, :, None]
            + a[2] * g3[None, None, :]
        ) * np.ones(shape)
        cols.append(c.reshape(-1))
    return sp.csr_matrix(np.stack(cols, axis=1))


# ---------------------------------------------------------------------------
# saddle systems
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SaddleSystem:
    """Symmetric indefinite block system of the level-k mixed problem.

    The first mixed equation is negated during assembly, so the stored
    matrix is [[-M_sigma, B^T], [B, K]] (K absent at the top level); the
    solution set is unchanged and symmetric solvers apply.
    """

    k: int
    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_sigma: int
    n_u: int
    mass_sigma: sp.spmatrix
    coupling: sp.spmatrix
    stiffness: sp.spmatrix | None

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return x[: self.n_sigma], x[self.n_sigma :]


def build_saddle_system(
    k: int,
    cs: ComplexSpaces,
    geom: AffineGeometry,
    f: Field,
    q: int | None = None,
    differentials: dict | None = None,
) -> SaddleSystem:
    """Assemble the level-k discrete mixed system with right-hand side f."""
    from .complexes import curl_matrix, div_matrix, hessian_matrix

    if k not in (1, 2, 3, 4):
        raise ValueError(f"level must be 1..4, got {k}")
    diffs = differentials if differentials is not None else {}

    def get_diff(level):
        if level not in diffs:
            diffs[level] = {1: hessian_matrix, 2: curl_matrix, 3: div_matrix}[level](cs)
        return diffs[level]

    if k == 1:
        m_sigma = sp.csr_matrix(p1_gram(geom))
        b = coupling_matrix(1, cs, geom, p1_embedding(cs, geom))
        kmat = stiffness_matrix(get_diff(1), mass_matrix(2, cs, geom))
    else:
        m_sigma = mass_matrix(k - 1, cs, geom)
        b = coupling_matrix(k, cs, geom, get_diff(k - 1))
        kmat = (
            None
            if k == 4
            else stiffness_matrix(get_diff(k), mass_matrix(k + 1, cs, geom))
        )
    rhs_u = load_vector(k, f, cs, geom, q)
    n_sigma, n_u = b.shape[1], b.shape[0]
    zero = sp.csr_matrix((n_u, n_u))
    matrix = sp.bmat(
        [[-m_sigma, b.T], [b, kmat if kmat is not None else zero]], format="csr"
    )
    rhs = np.concatenate([np.zeros(n_sigma), rhs_u])
    return SaddleSystem(
        k=k,
        matrix=matrix,
        rhs=rhs,
        n_sigma=n_sigma,
        n_u=n_u,
        mass_sigma=m_sigma,
        coupling=b,
        stiffness=kmat,
    )


# ---------------------------------------------------------------------------
# generic entry-term bilinear assembly (naive mode, quadrature cross-checks)
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class EntryTerm:
    """One contribution to a matrix entry: a coefficient map into a
    component space (None means identity from a coefficient slice)."""

    space: TensorSplineSpace
    op: sp.spmatrix  # (space.dim, n_total)


def assemble_bilinear(
    entries_a: list[list[EntryTerm]],
    n_a: int,
    entries_b: list[list[EntryTerm]],
    n_b: int,
    weights: np.ndarray,
    q: int | None = None,
    method: str = "elements",
) -> sp.csr_matrix:
    """sum_{e,e'} W[e,e'] <entry_e(A), entry_e'(B)> over coefficient maps."""
    out = sp.csr_matrix((n_a, n_b))
    for e, terms_a in enumerate(entries_a):
        for e2, terms_b in enumerate(entries_b):
            w = weights[e, e2]
            if w == 0.0 or not terms_a or not terms_b:
                continue
            for ta in terms_a:
                for tb in terms_b:
                    g = gram_3d(ta.space, tb.space, q, method)
                    out = out + w * (ta.op.T @ g @ tb.op)
    return out.tocsr()
