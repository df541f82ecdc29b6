"""The discrete Hessian complex: component spline spaces and the sparse
coefficient differential matrices between levels.

With base degree p and regularity r (p >= 2, 1 <= r <= p - 1) per direction,
the five levels hold

* level 0: linear polynomials (dimension 4),
* level 1: the scalar space S^{r,r,r}_{p,p,p},
* level 2: six symmetric-matrix components with degree/regularity lowered
  twice along the row/column directions of each entry,
* level 3: eight traceless-matrix components (entry (2,2) is t5 - t1 and
  (3,3) is -t5, so tracelessness is exact in the coefficients),
* level 4: three vector components.

DOF ordering is component-major, then C-order over the tensor indices (last
direction fastest), which makes every differential block an explicit
Kronecker triple product of univariate derivative maps and identities.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .splines import UnivariateSplineSpace, make_uniform_space

__all__ = [
    "TensorSplineSpace",
    "ComplexSpaces",
    "build_complex",
    "hessian_matrix",
    "curl_matrix",
    "div_matrix",
    "verify_exactness",
    "ExactnessReport",
    "write_coo",
    "SYM_COMPONENTS",
    "TR_ENTRY_TABLE",
]

# SYM component order: entries (1,1),(1,2),(1,3),(2,2),(2,3),(3,3) 1-based
SYM_COMPONENTS = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
SYM_COMPONENT_OF_ENTRY = {
    (0, 0): 0, (0, 1): 1, (0, 2): 2, (1, 0): 1, (1, 1): 3,
    (1, 2): 4, (2, 0): 2, (2, 1): 4, (2, 2): 5,
}
# matrix entries of the traceless layout in terms of the 8 components
TR_ENTRY_TABLE: dict[tuple[int, int], list[tuple[int, float]]] = {
    (0, 0): [(0, 1.0)],
    (0, 1): [(1, 1.0)],
    (0, 2): [(2, 1.0)],
    (1, 0): [(3, 1.0)],
    (1, 1): [(4, 1.0), (0, -1.0)],
    (1, 2): [(5, 1.0)],
    (2, 0): [(6, 1.0)],
    (2, 1): [(7, 1.0)],
    (2, 2): [(4, -1.0)],
}


@dataclass(frozen=True, eq=False)
class TensorSplineSpace:
    """Tensor product of three univariate spline spaces."""

    spaces: tuple[UnivariateSplineSpace, UnivariateSplineSpace, UnivariateSplineSpace]

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(s.dim for s in self.spaces)

    @property
    def dim(self) -> int:
        n1, n2, n3 = self.shape
        return n1 * n2 * n3

    @property
    def degrees(self) -> tuple[int, int, int]:
        return tuple(s.degree for s in self.spaces)

    @property
    def regularities(self) -> tuple[int, int, int]:
        return tuple(s.regularity for s in self.spaces)

    @property
    def signature(self):
        return tuple(s.signature for s in self.spaces)

    def derivative_map(self, axis: int) -> sp.csr_matrix:
        """Kronecker-positioned univariate derivative matrix along ``axis``."""
        mats = [sp.identity(s.dim, format="csr") for s in self.spaces]
        mats[axis] = self.spaces[axis].derivative_matrix()
        return sp.kron(sp.kron(mats[0], mats[1]), mats[2]).tocsr()

    def derivative_space(self, axis: int) -> "TensorSplineSpace":
        spaces = list(self.spaces)
        spaces[axis] = spaces[axis].derivative_space()
        return TensorSplineSpace(tuple(spaces))

    def value_tables(self, grid) -> list[np.ndarray]:
        """Per-direction basis value tables (dim_d, len(grid_d))."""
        return [s.value_table(g).T for s, g in zip(self.spaces, grid)]

    def evaluate(self, coeffs: np.ndarray, grid) -> np.ndarray:
        """Field values on a tensor grid from a flat coefficient vector."""
        c = np.asarray(coeffs, float).reshape(self.shape)
        t1, t2, t3 = self.value_tables(grid)
        out = np.tensordot(t1.T, c, axes=(1, 0))  # (m1, n2, n3)
        out = np.tensordot(out, t2, axes=(1, 0))  # (m1, n3, m2)
        out = np.tensordot(out, t3, axes=(1, 0))  # (m1, m2, m3)
        return out

    def evaluate_points(self, coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Field values at scattered parametric points (..., 3)."""
        pts = np.asarray(pts, float)
        flat = pts.reshape(-1, 3)
        c = np.asarray(coeffs, float).reshape(self.shape)
        t = [s.value_table(flat[:, d]) for d, s in enumerate(self.spaces)]
        vals = np.einsum("ijk,mi,mj,mk->m", c, t[0], t[1], t[2])
        return vals.reshape(pts.shape[:-1])


def _uv(p: int, r: int, n: int) -> UnivariateSplineSpace:
    return make_uniform_space(p, r, n)


@dataclass(frozen=True, eq=False)
class ComplexSpaces:
    """All component spaces of the discrete complex for one (p, r, N)."""

    p: int
    r: int
    n_elements: int
    level1: TensorSplineSpace
    level2: list[TensorSplineSpace]
    level3: list[TensorSplineSpace]
    level4: list[TensorSplineSpace]

    def components(self, level: int) -> list[TensorSplineSpace]:
        if level == 1:
            return [self.level1]
        if level == 2:
            return self.level2
        if level == 3:
            return self.level3
        if level == 4:
            return self.level4
        raise ValueError(f"level must be 1..4, got {level}")

    def dim(self, level: int) -> int:
        if level == 0:
            return 4
        return sum(c.dim for c in self.components(level))

    def offsets(self, level: int) -> np.ndarray:
        dims = [c.dim for c in self.components(level)]
        return np.concatenate([[0], np.cumsum(dims)])

    def split(self, level: int, coeffs: np.ndarray) -> list[np.ndarray]:
        off = self.offsets(level)
        return [coeffs[off[i] : off[i + 1]] for i in range(len(off) - 1)]

    @property
    def h(self) -> float:
        return 1.0 / self.n_elements

    @property
    def directions(self):
        return self.level1.spaces


@lru_cache(maxsize=8)
def build_complex(p: int, r: int, n_elements: int) -> ComplexSpaces:
    """Component spaces of the discrete complex; requires p >= 2 and
    1 <= r <= p - 1."""
    if p < 2:
        raise ValueError("base degree must be >= 2")
    if r < 1 or r > p - 1:
        raise ValueError(f"need 1 <= r <= p-1, got (p={p}, r={r})")
    if n_elements < 1:
        raise ValueError("need at least one element per direction")
    n = n_elements

    def space(dp1, dp2, dp3):
        # dp_i: how often degree and regularity drop in direction i
        return TensorSplineSpace(
            tuple(_uv(p - d, r - d, n) for d in (dp1, dp2, dp3))
        )

    level1 = space(0, 0, 0)
    level2 = [
        space(2, 0, 0),  # entry (1,1)
        space(1, 1, 0),  # entry (1,2)
        space(1, 0, 1),  # entry (1,3)
        space(0, 2, 0),  # entry (2,2)
        space(0, 1, 1),  # entry (2,3)
        space(0, 0, 2),  # entry (3,3)
    ]
    level3 = [
        space(1, 1, 1),  # t1
        space(2, 0, 1),  # t2
        space(2, 1, 0),  # t3
        space(0, 2, 1),  # t4
        space(1, 1, 1),  # t5
        space(1, 2, 0),  # t6
        space(0, 1, 2),  # t7
        space(1, 0, 2),  # t8
    ]
    level4 = [space(2, 1, 1), space(1, 2, 1), space(1, 1, 2)]
    return ComplexSpaces(
        p=p, r=r, n_elements=n, level1=level1, level2=level2, level3=level3, level4=level4
    )


def _partial(space: TensorSplineSpace, axis: int) -> sp.csr_matrix:
    return space.derivative_map(axis)


def hessian_matrix(cs: ComplexSpaces) -> sp.csr_matrix:
    """Coefficient map of the scalar Hessian: level 1 -> level 2 blocks."""
    v1 = cs.level1
    d = [_partial(v1, a) for a in range(3)]
    dspaces = [v1.derivative_space(a) for a in range(3)]
    blocks = []
    for ci, (i, j) in enumerate(SYM_COMPONENTS):
        if i == j:
            second = dspaces[i].derivative_map(i) @ d[i]
        else:
            second = dspaces[i].derivative_map(j) @ d[i]
        blocks.append([second])
    return sp.bmat(blocks, format="csr")


def curl_matrix(cs: ComplexSpaces) -> sp.csr_matrix:
    """Row-wise curl coefficient map: level 2 components -> level 3
    components.  Each traceless component is the matching entry of the curl
    of the symmetric layout; the (2,2) entry is consistent automatically
    because the curl of a symmetric field is traceless."""
    s = cs.level2
    n2 = [c.dim for c in s]

    def dmap(comp: int, axis: int) -> sp.csr_matrix:
        return s[comp].derivative_map(axis)

    # (curl S)_{i,a} with rows of SYM(s1..s6); component index per entry
    def row_entry(i, a):
        # curl of row i: (d2 r3 - d3 r2, d3 r1 - d1 r3, d1 r2 - d2 r1)
        row = [SYM_COMPONENT_OF_ENTRY[(i, j)] for j in range(3)]
        if a == 0:
            return [(row[2], 1, 1.0), (row[1], 2, -1.0)]
        if a == 1:
            return [(row[0], 2, 1.0), (row[2], 0, -1.0)]
        return [(row[1], 0, 1.0), (row[0], 1, -1.0)]

    targets = [
        row_entry(0, 0),  # t1 = (curl S)_11
        row_entry(0, 1),  # t2
        row_entry(0, 2),  # t3
        row_entry(1, 0),  # t4
        [(c, a, -v) for c, a, v in row_entry(2, 2)],  # t5 = -(curl S)_33
        row_entry(1, 2),  # t6
        row_entry(2, 0),  # t7
        row_entry(2, 1),  # t8
    ]
    blocks = []
    for terms in targets:
        row_blocks = [None] * 6
        for comp, axis, sign in terms:
            m = sign * dmap(comp, axis)
            row_blocks[comp] = m if row_blocks[comp] is None else row_blocks[comp] + m
        blocks.append(row_blocks)
    return sp.bmat(
        [[b if b is not None else sp.csr_matrix((t.dim, n)) for b, n in zip(row, n2)]
         for row, t in zip(blocks, cs.level3)],
        format="csr",
    )


def div_matrix(cs: ComplexSpaces) -> sp.csr_matrix:
    """Row-wise divergence coefficient map: level 3 components -> level 4."""
    t = cs.level3
    n3 = [c.dim for c in t]
    rows = []
    for i in range(3):
        acc: list = [None] * 8
        for j in range(3):
            for comp, w in TR_ENTRY_TABLE[(i, j)]:
                m = w * t[comp].derivative_map(j)
                acc[comp] = m if acc[comp] is None else acc[comp] + m
        rows.append(
            [b if b is not None else sp.csr_matrix((cs.level4[i].dim, n)) for b, n in zip(acc, n3)]
        )
    return sp.bmat(rows, format="csr")


@dataclass
class ExactnessReport:
    dims: dict[int, int]
    rank_d1: int
    rank_d2: int
    rank_d3: int
    kernel_d1: int
    kernel_d2: int
    kernel_d3: int

    @property
    def kernel_d1_is_linear_polys(self) -> bool:
        return self.kernel_d1 == 4

    @property
    def exact_at_level2(self) -> bool:
        return self.kernel_d2 == self.rank_d1

    @property
    def exact_at_level3(self) -> bool:
        return self.kernel_d3 == self.rank_d2

    @property
    def exact_at_level4(self) -> bool:
        return self.rank_d3 == self.dims[4]

    @property
    def all_ok(self) -> bool:
        return (
            self.kernel_d1_is_linear_polys
            and self.exact_at_level2
            and self.exact_at_level3
            and self.exact_at_level4
        )


def verify_exactness(cs: ComplexSpaces, max_unknowns: int = 3000) -> ExactnessReport:
    """Dense SVD rank verification of discrete exactness.

    Checks kernel(D1) has dimension 4 (the linear polynomials) and that
    kernel and range dimensions agree at the inner levels.  Refuses systems
    beyond ``max_unknowns`` total coefficients.
    """
    total = sum(cs.dim(level) for level in (1, 2, 3, 4))
    if total > max_unknowns:
        raise ValueError(
            f"exactness check needs dense ranks; {total} unknowns exceed "
            f"the {max_unknowns} guard"
        )
    d1 = hessian_matrix(cs).toarray()
    d2 = curl_matrix(cs).toarray()
    d3 = div_matrix(cs).toarray()

    def rank(a):
        sv = np.linalg.svd(a, compute_uv=False)
        if sv.size == 0 or sv[0] == 0.0:
            return 0
        return int(np.sum(sv > 1e-9 * sv[0]))

    r1, r2, r3 = rank(d1), rank(d2), rank(d3)
    return ExactnessReport(
        dims={k: cs.dim(k) for k in (0, 1, 2, 3, 4)},
        rank_d1=r1,
        rank_d2=r2,
        rank_d3=r3,
        kernel_d1=cs.dim(1) - r1,
        kernel_d2=cs.dim(2) - r2,
        kernel_d3=cs.dim(3) - r3,
    )


def write_coo(path, matrix: sp.spmatrix, header: str = "") -> None:
    """Text export of a sparse matrix as 'row col value' lines."""
    coo = matrix.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write(f"# shape {coo.shape[0]} {coo.shape[1]} nnz {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")
