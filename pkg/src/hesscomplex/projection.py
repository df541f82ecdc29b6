"""Quasi-interpolant projectors onto spline spaces.

Univariate building blocks:

* ``plain``: coefficients from locally supported dual functionals.  Each
  functional is the local L2 dual of its basis function: the Gram system of
  the basis functions overlapping the support is solved and evaluated by
  per-span Gauss quadrature, giving biorthogonality, locality (only function
  values inside the support extension are used) and mesh-independent
  stability.
* ``c1``: the derivative coefficient matrix applied to the plain projection
  of the antiderivative; target space has degree and regularity lowered by
  one.  Commutes with d/dx by construction.
* ``c2``: two derivative matrices applied to the plain projection of the
  double antiderivative; commutes with d^2/dx^2.

Integration by parts moves the antiderivatives onto the (piecewise
polynomial) basis functions, so every functional reduces to a weight matrix
against field samples on one per-span Gauss grid; projecting is then a
single matrix product.  Tensor-product projectors per component follow the
per-direction kind patterns of the discrete complex, and physical fields are
projected by pulling them back first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import AffineGeometry, FieldKind, pullback
from .quadrature import QuadratureRule, element_rule, gauss_rule, smooth_rule_order
from .splines import UnivariateSplineSpace

__all__ = [
    "DualFunctionalSet",
    "UnivariateProjector",
    "TensorProjector",
    "build_dual_functionals",
    "build_univariate_projector",
    "project",
    "build_tensor_projector",
    "tensor_project",
    "physical_project",
    "COMPONENT_KINDS",
]

PLAIN, C1, C2 = "plain", "c1", "c2"

# per-level, per-component triples of univariate projector kinds (and the
# matching degree reductions of the component spaces)
COMPONENT_KINDS: dict[int, list[tuple[str, str, str]]] = {
    1: [(PLAIN, PLAIN, PLAIN)],
    2: [
        (C2, PLAIN, PLAIN),
        (C1, C1, PLAIN),
        (C1, PLAIN, C1),
        (PLAIN, C2, PLAIN),
        (PLAIN, C1, C1),
        (PLAIN, PLAIN, C2),
    ],
    3: [
        (C1, C1, C1),
        (C2, PLAIN, C1),
        (C2, C1, PLAIN),
        (PLAIN, C2, C1),
        (C1, C2, PLAIN),
        (PLAIN, C1, C2),
        (C1, PLAIN, C2),
    ],
    4: [
        (C2, C1, C1),
        (C1, C2, C1),
        (C1, C1, C2),
    ],
}
# level 3 kinds are listed for components t1, t2, t3, t4, t6, t7, t8; t5
# shares the t1 triple (both live in the all-(p-1) space).
COMPONENT_KINDS[3] = [
    COMPONENT_KINDS[3][0],  # t1
    COMPONENT_KINDS[3][1],  # t2
    COMPONENT_KINDS[3][2],  # t3
    COMPONENT_KINDS[3][3],  # t4
    COMPONENT_KINDS[3][0],  # t5
    COMPONENT_KINDS[3][4],  # t6
    COMPONENT_KINDS[3][5],  # t7
    COMPONENT_KINDS[3][6],  # t8
]


@dataclass(frozen=True, eq=False)
class DualFunctionalSet:
    """Locally supported dual functionals of a spline basis.

    ``matrix[i]`` are quadrature weights against samples at ``nodes``;
    row i vanishes outside the support of basis function i.
    """

    space: UnivariateSplineSpace
    rule: QuadratureRule
    matrix: np.ndarray  # (dim, n_nodes)

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.flat_nodes

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return self.matrix @ np.asarray(f(self.nodes), dtype=float)


def _support_masks(space: UnivariateSplineSpace, rule: QuadratureRule):
    """Per basis function: overlapping basis indices and node mask of the
    support."""
    knots = space.knots.values
    p = space.degree
    n = space.dim
    nodes = rule.flat_nodes
    masks, overlaps = [], []
    for i in range(n):
        lo, hi = knots[i], knots[i + p + 1]
        masks.append((nodes > lo) & (nodes < hi))
        js = [
            j
            for j in range(max(0, i - p), min(n, i + p + 1))
            if min(hi, knots[j + p + 1]) - max(lo, knots[j]) > 1e-14
        ]
        overlaps.append(js)
    return masks, overlaps


def build_dual_functionals(
    space: UnivariateSplineSpace, q: int | None = None
) -> DualFunctionalSet:
    """Local L2-dual functionals: lambda_i(B_j) = delta_ij."""
    q = q or space.degree + 2
    rule = element_rule(space.mesh, q)
    nodes, w = rule.flat_nodes, rule.flat_weights
    table = space.value_table(nodes)  # (n_nodes, dim)
    masks, overlaps = _support_masks(space, rule)
    lam = np.zeros((space.dim, len(nodes)))
    for i in range(space.dim):
        js = overlaps[i]
        mask = masks[i]
        bw = table[mask][:, js]  # (m, len(js))
        gram = bw.T @ (w[mask][:, None] * bw)
        rhs = np.zeros(len(js))
        rhs[js.index(i)] = 1.0
        try:
            y = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:  # guarded; valid knots never hit this
            raise ValueError(f"singular local Gram system at basis {i}") from exc
        lam[i, mask] = (bw @ y) * w[mask]
    return DualFunctionalSet(space=space, rule=rule, matrix=lam)


@dataclass(frozen=True, eq=False)
class UnivariateProjector:
    """Projector of one of the three kinds as a sample-weight matrix."""

    kind: str
    source: UnivariateSplineSpace
    target: UnivariateSplineSpace
    rule: QuadratureRule
    matrix: np.ndarray  # (target.dim, n_nodes)

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.flat_nodes


def _basis_antiderivative_tables(space: UnivariateSplineSpace, rule: QuadratureRule):
    """First and second antiderivatives of all basis functions, evaluated at
    the quadrature nodes and at the breakpoints (exactly, via sub-span Gauss
    rules)."""
    mesh = space.mesh
    n_el, q = rule.nodes.shape
    nodes, w = rule.flat_nodes, rule.flat_weights
    table = space.value_table(nodes)  # (M, n)

    # exact per-element integrals of B_j and of t * B_j
    spanint_b = np.einsum("m,mj->jm", w, table).reshape(space.dim, n_el, q).sum(axis=2)
    spanint_tb = (
        np.einsum("m,m,mj->jm", w, nodes, table).reshape(space.dim, n_el, q).sum(axis=2)
    )
    cum_b = np.concatenate(
        [np.zeros((space.dim, 1)), np.cumsum(spanint_b, axis=1)], axis=1
    )  # (n, n_el+1): antiderivative at breakpoints
    cum_tb = np.concatenate(
        [np.zeros((space.dim, 1)), np.cumsum(spanint_tb, axis=1)], axis=1
    )

    # partial integrals from the left breakpoint to each node
    starts = np.repeat(mesh.breakpoints[:-1], q)
    lengths = nodes - starts
    gx, gw = gauss_rule(space.degree + 2)
    sub = starts[:, None] + lengths[:, None] * gx[None, :]  # (M, qsub)
    sub_tables = space.value_table(sub.reshape(-1)).reshape(len(nodes), len(gx), -1)
    part_b = np.einsum("s,msj->jm", gw, sub_tables) * lengths[None, :]
    part_tb = np.einsum("s,ms,msj->jm", gw, sub, sub_tables) * lengths[None, :]

    el_of_node = np.repeat(np.arange(n_el), q)
    q1 = cum_b[:, el_of_node] + part_b  # int_0^x B_j
    r1 = cum_tb[:, el_of_node] + part_tb  # int_0^x t B_j dt
    q2 = nodes[None, :] * q1 - r1  # int_0^x (x - t) B_j dt
    q1_at_bp = cum_b
    q2_at_bp = mesh.breakpoints[None, :] * cum_b - cum_tb
    return q1, q2, q1_at_bp, q2_at_bp


def _antiderivative_projection_matrix(
    duals: DualFunctionalSet, order: int
) -> np.ndarray:
    """Matrix of f-sample weights computing the plain-projection coefficients
    of the ``order``-fold antiderivative of f (order 1 or 2).

    Integration by parts moves the antiderivatives of f onto antiderivatives
    of the basis functions, leaving only full-span quadratures of f.
    """
    space = duals.space
    rule = duals.rule
    knots = space.knots.values
    p = space.degree
    nodes, w = rule.flat_nodes, rule.flat_weights
    table = space.value_table(nodes)
    masks, overlaps = _support_masks(space, rule)
    q1, q2, q1_bp, q2_bp = _basis_antiderivative_tables(space, rule)
    bp = list(space.mesh.breakpoints)

    def bp_index(x):
        return int(np.argmin(np.abs(np.asarray(bp) - x)))

    out = np.zeros((space.dim, len(nodes)))
    for i in range(space.dim):
        js = overlaps[i]
        mask = masks[i]
        bw = table[mask][:, js]
        gram = bw.T @ (w[mask][:, None] * bw)
        rhs = np.zeros(len(js))
        rhs[js.index(i)] = 1.0
        y = np.linalg.solve(gram, rhs)

        a_idx = bp_index(knots[i])
        b_idx = bp_index(knots[i + p + 1])
        before_a = w * (np.arange(len(nodes)) < a_idx * rule.order)
        before_b = w * (np.arange(len(nodes)) < b_idx * rule.order)
        alpha, beta = bp[a_idx], bp[b_idx]

        row = np.zeros(len(nodes))
        for yj, j in zip(y, js):
            if order == 1:
                # int B_j A1 = Q1_j(b) A1(b) - Q1_j(a) A1(a) - int Q1_j f
                row += yj * (q1_bp[j, b_idx] * before_b - q1_bp[j, a_idx] * before_a)
                row -= yj * np.where(mask, w * q1[j], 0.0)
            else:
                # int B_j A2 = [Q1_j A2 - Q2_j A1]_a^b + int Q2_j f
                a2_b = (beta - nodes) * before_b
                a2_a = (alpha - nodes) * before_a
                row += yj * (q1_bp[j, b_idx] * a2_b - q1_bp[j, a_idx] * a2_a)
                row -= yj * (q2_bp[j, b_idx] * before_b - q2_bp[j, a_idx] * before_a)
                row += yj * np.where(mask, w * q2[j], 0.0)
        out[i] = row
    return out


def build_univariate_projector(
    space: UnivariateSplineSpace, kind: str = PLAIN, q: int | None = None
) -> UnivariateProjector:
    """Projector of the given kind rooted at ``space`` (the plain target);
    c1 and c2 target the first and second derivative spaces."""
    q = q or space.degree + 2
    duals = build_dual_functionals(space, q)
    if kind == PLAIN:
        return UnivariateProjector(
            kind=kind, source=space, target=space, rule=duals.rule, matrix=duals.matrix
        )
    if kind == C1:
        if space.regularity < 0:
            raise ValueError("c1 projector needs source regularity >= 0")
        e1 = space.derivative_matrix()
        pa = _antiderivative_projection_matrix(duals, order=1)
        return UnivariateProjector(
            kind=kind,
            source=space,
            target=space.derivative_space(),
            rule=duals.rule,
            matrix=e1 @ pa,
        )
    if kind == C2:
        if space.regularity < 1 or space.degree < 2:
            raise ValueError("c2 projector needs regularity >= 1 and degree >= 2")
        e1 = space.derivative_matrix()
        e2 = space.derivative_space().derivative_matrix()
        pa2 = _antiderivative_projection_matrix(duals, order=2)
        return UnivariateProjector(
            kind=kind,
            source=space,
            target=space.derivative_space().derivative_space(),
            rule=duals.rule,
            matrix=e2 @ (e1 @ pa2),
        )
    raise ValueError(f"unknown projector kind {kind!r}")


def project(proj: UnivariateProjector, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Coefficients of the projection of ``f`` in the target space."""
    vals = np.asarray(f(proj.nodes), dtype=float)
    return proj.matrix @ vals


# ---------------------------------------------------------------------------
# tensor-product projectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TensorProjector:
    """Per-component tensor products of univariate projectors for one level."""

    level: int
    sources: tuple[UnivariateSplineSpace, UnivariateSplineSpace, UnivariateSplineSpace]
    projectors: list[tuple[UnivariateProjector, UnivariateProjector, UnivariateProjector]]

    @property
    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        first = self.projectors[0]
        return tuple(p.nodes for p in first)

    def component_dims(self) -> list[tuple[int, int, int]]:
        return [tuple(p.target.dim for p in trio) for trio in self.projectors]


def build_tensor_projector(
    level: int,
    sources: Sequence[UnivariateSplineSpace],
    q: int | None = None,
) -> TensorProjector:
    """Tensor projector for a complex level from the three direction spaces
    of the scalar level."""
    if level not in COMPONENT_KINDS:
        raise ValueError(f"level must be 1..4, got {level}")
    if q is None:
        q = smooth_rule_order(sources[0].degree, sources[0].mesh.n_elements)
    cache: dict[tuple[int, str], UnivariateProjector] = {}

    def get(d: int, kind: str) -> UnivariateProjector:
        key = (d, kind)
        if key not in cache:
            cache[key] = build_univariate_projector(sources[d], kind, q)
        return cache[key]

    projs = [
        tuple(get(d, kind) for d, kind in enumerate(trio))
        for trio in COMPONENT_KINDS[level]
    ]
    return TensorProjector(level=level, sources=tuple(sources), projectors=projs)


# component selection from the 9 row-major pullback entries
_SYM_ENTRY_OF_COMPONENT = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
_TR_ENTRY_OF_COMPONENT = [
    (0, 0, 1.0),
    (0, 1, 1.0),
    (0, 2, 1.0),
    (1, 0, 1.0),
    (2, 2, -1.0),  # t5 = -entry(3,3)
    (1, 2, 1.0),
    (2, 0, 1.0),
    (2, 1, 1.0),
]


def component_grids_from_entries(level: int, entries: np.ndarray) -> list[np.ndarray]:
    """Pick per-component scalar grids from pulled-back entry grids.

    ``entries`` has shape (n1, n2, n3, m) with m = 1 (scalar), 9 (row-major
    matrix) or 3 (vector).
    """
    if level == 1:
        return [entries[..., 0]]
    if level == 2:
        return [entries[..., 3 * i + j] for i, j in _SYM_ENTRY_OF_COMPONENT]
    if level == 3:
        return [s * entries[..., 3 * i + j] for i, j, s in _TR_ENTRY_OF_COMPONENT]
    if level == 4:
        return [entries[..., c] for c in range(3)]
    raise ValueError(f"level must be 1..4, got {level}")


def tensor_project(proj: TensorProjector, entries: np.ndarray) -> list[np.ndarray]:
    """Project pulled-back entry grids sampled on the projector node grid;
    returns per-component coefficient tensors (C order, last axis fastest)."""
    expected = {1: 1, 2: 9, 3: 9, 4: 3}[proj.level]
    if entries.ndim != 4 or entries.shape[-1] != expected:
        raise ValueError(
            f"level {proj.level} expects entry grids (n1, n2, n3, {expected}), "
            f"got {entries.shape}"
        )
    comps = component_grids_from_entries(proj.level, entries)
    out = []
    for grid, trio in zip(comps, proj.projectors):
        c = np.einsum("im,mnl->inl", trio[0].matrix, grid)
        c = np.einsum("jn,inl->ijl", trio[1].matrix, c)
        c = np.einsum("kl,ijl->ijk", trio[2].matrix, c)
        out.append(c)
    return out


_LEVEL_KIND = {
    1: FieldKind.SCALAR,
    2: FieldKind.SYM_MATRIX,
    3: FieldKind.TRACELESS_MATRIX,
    4: FieldKind.VECTOR,
}


def physical_project(
    proj: TensorProjector, geom: AffineGeometry, field
) -> np.ndarray:
    """Project a physical field: pull back, project, concatenate components.

    ``field`` is either an analytic :class:`~hesscomplex.fields.Field` or a
    callable mapping physical points (..., 3) to field values ((...,),
    (..., 3) or (..., 3, 3) by level).
    """
    kind = _LEVEL_KIND[proj.level]
    x1, x2, x3 = proj.nodes
    if callable(field) and not hasattr(field, "eval_grid"):
        zeta = np.stack(
            np.meshgrid(x1, x2, x3, indexing="ij"), axis=-1
        )  # (n1,n2,n3,3)
        phys = np.asarray(field(geom.map_points(zeta)), dtype=float)
    else:
        vals = field.eval_grid(x1, x2, x3)
        if kind in (FieldKind.SYM_MATRIX, FieldKind.TRACELESS_MATRIX):
            phys = vals.reshape(*vals.shape[:3], 3, 3)
        elif kind is FieldKind.SCALAR:
            phys = vals[..., 0]
        else:
            phys = vals
    pulled = pullback(kind, geom, phys)
    if kind is FieldKind.SCALAR:
        entries = pulled[..., None]
    elif kind is FieldKind.VECTOR:
        entries = pulled
    else:
        entries = pulled.reshape(*pulled.shape[:3], 9)
    coeffs = tensor_project(proj, entries)
    return np.concatenate([c.reshape(-1) for c in coeffs])
