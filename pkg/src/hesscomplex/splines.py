"""Univariate B-spline spaces on [0, 1]: open knot vectors, basis evaluation
via the one-pass triangular recursion, derivatives by the two-term formula,
derivative coefficient matrices and support bookkeeping.

All spaces are built on uniform breakpoint meshes with a single interior knot
multiplicity ``degree - regularity``, so a space is fully described by
``(degree, regularity, n_elements)``.  Spaces are immutable after
construction; evaluation is reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .kernels import basis_value_windows, find_spans

__all__ = [
    "KnotVector",
    "Mesh1D",
    "UnivariateSplineSpace",
    "make_uniform_space",
]


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open (clamped) nondecreasing knot sequence on [0, 1] for a degree."""

    values: np.ndarray
    degree: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        p = self.degree
        if p < 0:
            raise ValueError("degree must be >= 0")
        if vals.ndim != 1 or len(vals) < 2 * (p + 1):
            raise ValueError("knot vector too short for degree")
        if np.any(np.diff(vals) < 0):
            raise ValueError("knots must be nondecreasing")
        if not (np.all(vals[: p + 1] == 0.0) and np.all(vals[-(p + 1):] == 1.0)):
            raise ValueError("knot vector must be open: p+1 zeros and p+1 ones")
        interior = vals[p + 1 : len(vals) - p - 1]
        if interior.size:
            _, counts = np.unique(interior, return_counts=True)
            if np.any(counts > max(p, 1)):
                raise ValueError("interior knot multiplicity exceeds degree")

    @property
    def n(self) -> int:
        """Dimension of the spanned spline space."""
        return len(self.values) - self.degree - 1

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.values)


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Breakpoint mesh of (0, 1); uniform meshes have regularity constant 1."""

    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        if len(bp) < 2 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def n_elements(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def element_sizes(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def h(self) -> float:
        return float(self.element_sizes.max())


@dataclass(frozen=True, eq=False)
class UnivariateSplineSpace:
    """Spline space of a given degree and global interior regularity."""

    knots: KnotVector
    regularity: int
    _span_of_element: np.ndarray = field(init=False, repr=False)
    _mesh: Mesh1D = field(init=False, repr=False)

    def __post_init__(self):
        p, r = self.degree, self.regularity
        if r < -1 or r > p - 1:
            raise ValueError(f"regularity must satisfy -1 <= r <= p-1, got ({p}, {r})")
        object.__setattr__(self, "_mesh", Mesh1D(self.knots.breakpoints))
        # knot span index of each mesh element
        mids = 0.5 * (self._mesh.breakpoints[:-1] + self._mesh.breakpoints[1:])
        spans = find_spans(self.knots.values, p, self.dim, mids)
        object.__setattr__(self, "_span_of_element", spans)

    @property
    def degree(self) -> int:
        return self.knots.degree

    @property
    def dim(self) -> int:
        return self.knots.n

    @property
    def mesh(self) -> Mesh1D:
        return self._mesh

    @property
    def signature(self) -> tuple[int, int, int]:
        """Hashable identity of the space: (degree, regularity, n_elements)."""
        return (self.degree, self.regularity, self._mesh.n_elements)

    # -- evaluation -----------------------------------------------------

    def eval_basis(self, i: int, x: float) -> float:
        """Value of basis function ``i`` (0-based) at ``x`` in [0, 1]."""
        self._check_index(i)
        vals, first = self.eval_nonzero(x)
        offset = i - first
        if offset < 0 or offset > self.degree:
            return 0.0
        return float(vals[offset])

    def eval_basis_derivative(self, i: int, x: float, order: int = 1) -> float:
        """Derivative of basis function ``i`` at ``x`` by the two-term
        difference formula, applied recursively for order 2."""
        self._check_index(i)
        if order < 1 or order > 2:
            raise ValueError("derivative order must be 1 or 2")
        if order > self.degree:
            raise ValueError(f"order {order} exceeds degree {self.degree}")
        pts = np.array([x])
        span = int(find_spans(self.knots.values, self.degree, self.dim, pts)[0])
        ders = self._derivative_windows(x, span, order)
        offset = i - (span - self.degree)
        if offset < 0 or offset > self.degree:
            return 0.0
        return float(ders[order][offset])

    def eval_nonzero(self, x: float, element: int | None = None):
        """Values of the ``p + 1`` basis functions alive at ``x``; returns
        ``(values, first_index)``.  Passing ``element`` evaluates the
        polynomial extension from that element (one-sided limits)."""
        if element is None:
            pts = np.array([float(x)])
            span = find_spans(self.knots.values, self.degree, self.dim, pts)
        else:
            span = np.array([self._span_of_element[element]])
            pts = np.array([float(x)])
        vals = basis_value_windows(self.knots.values, self.degree, pts, span)[0]
        return vals, int(span[0]) - self.degree

    def value_table(self, pts: np.ndarray) -> np.ndarray:
        """Dense table ``(len(pts), dim)`` of all basis values."""
        pts = np.asarray(pts, dtype=float)
        spans = find_spans(self.knots.values, self.degree, self.dim, pts)
        windows = basis_value_windows(self.knots.values, self.degree, pts, spans)
        table = np.zeros((len(pts), self.dim))
        cols = spans[:, None] - self.degree + np.arange(self.degree + 1)[None, :]
        np.put_along_axis(table, cols, windows, axis=1)
        return table

    def derivative_table(self, pts: np.ndarray, order: int) -> np.ndarray:
        """Dense table of all basis derivative values of a given order."""
        if order == 0:
            return self.value_table(pts)
        pts = np.asarray(pts, dtype=float)
        spans = find_spans(self.knots.values, self.degree, self.dim, pts)
        table = np.zeros((len(pts), self.dim))
        for m, (x, span) in enumerate(zip(pts, spans)):
            ders = self._derivative_windows(float(x), int(span), order)
            first = span - self.degree
            table[m, first : first + self.degree + 1] = ders[order]
        return table

    def element_tables(self, nodes: np.ndarray):
        """Basis values on per-element quadrature nodes.

        ``nodes`` has shape (n_el, q); returns ``(values, first_dof)`` with
        values shaped (n_el, q, p + 1).
        """
        n_el, q = nodes.shape
        spans = np.repeat(self._span_of_element, q)
        flat = nodes.reshape(-1)
        windows = basis_value_windows(self.knots.values, self.degree, flat, spans)
        first = self._span_of_element - self.degree
        return windows.reshape(n_el, q, self.degree + 1), first

    def _derivative_windows(self, x: float, span: int, order: int):
        """Windows of basis values and derivatives up to ``order`` at ``x``.

        Derivatives follow the two-term formula: lower-degree value windows
        are combined with factors p/(knot span length), zero-length spans
        contributing zero.
        """
        knots = self.knots.values
        p = self.degree
        pts = np.array([x])
        windows = {p: basis_value_windows(knots, p, pts, np.array([span]))[0]}
        for q in range(p - 1, max(p - order, 0) - 1, -1):
            windows[q] = basis_value_windows(knots, q, pts, np.array([span]))[0]
        out = {0: windows[p]}
        lower = windows.get(p - 1, np.zeros(max(p, 1)))
        out[1] = _two_term(knots, p, span, lower)
        if order >= 2:
            lower2 = windows.get(p - 2, np.zeros(max(p - 1, 1)))
            dlower = _two_term(knots, p - 1, span, lower2)
            out[2] = _two_term(knots, p, span, dlower)
        return out

    # -- structure ------------------------------------------------------

    def derivative_space(self) -> "UnivariateSplineSpace":
        """The space containing derivatives: degree and regularity drop by 1."""
        if self.degree < 1:
            raise ValueError("cannot differentiate a degree-0 space")
        return UnivariateSplineSpace(
            KnotVector(self.knots.values[1:-1], self.degree - 1),
            self.regularity - 1,
        )

    def derivative_matrix(self) -> sp.csr_matrix:
        """Sparse map E with d/dx sum(c_i B_i) = sum((Ec)_j B'_j) in the
        derivative space; bidiagonal with entries +-p / knot span."""
        p = self.degree
        if p < 1:
            raise ValueError("derivative matrix requires degree >= 1")
        if self.regularity < 0:
            raise ValueError("derivative matrix requires regularity >= 0")
        knots = self.knots.values
        n = self.dim
        rows, cols, vals = [], [], []
        for j in range(1, n):  # target index j-1
            gap = knots[j + p] - knots[j]
            if gap <= 0:
                continue
            a = p / gap
            rows += [j - 1, j - 1]
            cols += [j, j - 1]
            vals += [a, -a]
        return sp.csr_matrix((vals, (rows, cols)), shape=(n - 1, n))

    def support(self, i: int) -> tuple[float, float]:
        """Support interval [xi_i, xi_{i+p+1}] of basis function ``i``."""
        self._check_index(i)
        knots = self.knots.values
        return float(knots[i]), float(knots[i + self.degree + 1])

    def support_extension(self, element: int) -> tuple[float, float]:
        """Extended interval (xi_{i-p}, xi_{i+p+1}) of a mesh element,
        clipped to [0, 1]."""
        if element < 0 or element >= self.mesh.n_elements:
            raise ValueError(f"element index {element} out of range")
        i = int(self._span_of_element[element])
        knots = self.knots.values
        lo = knots[max(i - self.degree, 0)]
        hi = knots[min(i + self.degree + 1, len(knots) - 1)]
        return float(max(lo, 0.0)), float(min(hi, 1.0))

    def greville(self) -> np.ndarray:
        """Greville abscissae; coefficients reproducing the identity x."""
        p = self.degree
        if p == 0:
            bp = self.knots.breakpoints
            return 0.5 * (bp[:-1] + bp[1:])
        knots = self.knots.values
        return np.array(
            [knots[i + 1 : i + p + 1].mean() for i in range(self.dim)]
        )

    def element_dof_range(self, element: int) -> tuple[int, int]:
        first = int(self._span_of_element[element]) - self.degree
        return first, first + self.degree + 1

    def _check_index(self, i: int):
        if i < 0 or i >= self.dim:
            raise ValueError(f"basis index {i} out of range [0, {self.dim})")


def _two_term(knots, q, span, lower):
    """Derivative window of degree-q functions at a span from the window of
    their degree-(q-1) constituents (values or derivatives)."""
    out = np.zeros(q + 1)
    for idx in range(q + 1):
        i = span - q + idx
        acc = 0.0
        li = idx - 1
        if 0 <= li < q:
            gap = knots[i + q] - knots[i]
            if gap > 0:
                acc += q / gap * lower[li]
        if 0 <= idx < q:
            gap = knots[i + q + 1] - knots[i + 1]
            if gap > 0:
                acc -= q / gap * lower[idx]
        out[idx] = acc
    return out


@lru_cache(maxsize=None)
def make_uniform_space(p: int, r: int, n_elements: int) -> UnivariateSplineSpace:
    """Spline space of degree ``p`` and regularity ``r`` on ``n_elements``
    uniform elements of (0, 1); dimension p + 1 + (N - 1)(p - r)."""
    if p < 0:
        raise ValueError("degree must be >= 0")
    if r < -1 or r > p - 1:
        raise ValueError(f"need -1 <= r <= p-1, got (p={p}, r={r})")
    if n_elements < 1:
        raise ValueError("need at least one element")
    mult = p - r
    interior = np.repeat(np.linspace(0.0, 1.0, n_elements + 1)[1:-1], mult)
    values = np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])
    return UnivariateSplineSpace(KnotVector(values, p), r)
