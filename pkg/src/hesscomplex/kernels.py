"""Hot numeric kernels: B-spline basis tables and element-loop Gram assembly.

Each kernel has a numba-jitted implementation and a pure-numpy fallback with
identical output; :mod:`hesscomplex.backend` selects between them.  Everything
here works on plain arrays so the jitted and fallback paths share signatures.
"""

from __future__ import annotations

import numpy as np

from .backend import NUMBA_ENABLED

if NUMBA_ENABLED:
    from numba import njit
else:  # pragma: no cover - exercised via HESSCOMPLEX_BACKEND=numpy runs

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# knot spans
# ---------------------------------------------------------------------------


def find_spans(knots: np.ndarray, degree: int, ndof: int, pts: np.ndarray) -> np.ndarray:
    """Index mu of the nonempty knot span containing each point.

    Points at the right endpoint are assigned to the last nonempty span
    (left-limit convention).
    """
    spans = np.searchsorted(knots, pts, side="right") - 1
    spans = np.clip(spans, degree, ndof - 1)
    # skip zero-length spans that can occur at the right boundary
    while np.any(knots[spans + 1] <= knots[spans]):
        spans = np.where(knots[spans + 1] <= knots[spans], spans - 1, spans)
    return spans.astype(np.int64)


# ---------------------------------------------------------------------------
# basis value tables (one-pass triangular scheme, all p+1 nonzeros per point)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _basis_values_numba(knots, degree, pts, spans):
    npts = pts.shape[0]
    out = np.zeros((npts, degree + 1))
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    for m in range(npts):
        x = pts[m]
        mu = spans[m]
        out[m, 0] = 1.0
        for j in range(1, degree + 1):
            left[j] = x - knots[mu + 1 - j]
            right[j] = knots[mu + j] - x
            saved = 0.0
            for r in range(j):
                denom = right[r + 1] + left[j - r]
                temp = out[m, r] / denom
                out[m, r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            out[m, j] = saved
    return out


def _basis_values_numpy(knots, degree, pts, spans):
    npts = pts.shape[0]
    out = np.zeros((npts, degree + 1))
    out[:, 0] = 1.0
    left = np.zeros((npts, degree + 1))
    right = np.zeros((npts, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = pts - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - pts
        saved = np.zeros(npts)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = out[:, r] / denom
            out[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        out[:, j] = saved
    return out


def basis_value_windows(knots, degree, pts, spans):
    """Values of the ``degree + 1`` basis functions that are nonzero at each
    point; column ``c`` holds function index ``spans[m] - degree + c``."""
    if degree == 0:
        return np.ones((len(pts), 1))
    if NUMBA_ENABLED:
        return _basis_values_numba(
            np.ascontiguousarray(knots, dtype=np.float64),
            degree,
            np.ascontiguousarray(pts, dtype=np.float64),
            np.ascontiguousarray(spans, dtype=np.int64),
        )
    return _basis_values_numpy(knots, degree, np.asarray(pts, float), spans)


# ---------------------------------------------------------------------------
# element-loop Gram assembly
#
# The 3D cross mass matrix between two tensor-product spline spaces on the
# same mesh is assembled element by element: per element the three univariate
# local Gram blocks are formed from quadrature tables, their triple product
# gives the dense local block, and its entries are scattered into COO
# triplets.  Constant metric weights are applied by the caller at the
# component-pair level.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _local_grams_numba(avals, bvals, wq):
    ne, nq, la = avals.shape
    lb = bvals.shape[2]
    out = np.zeros((ne, la, lb))
    for e in range(ne):
        for q in range(nq):
            w = wq[e, q]
            for i in range(la):
                wa = w * avals[e, q, i]
                for j in range(lb):
                    out[e, i, j] += wa * bvals[e, q, j]
    return out


def _local_grams_numpy(avals, bvals, wq):
    return np.einsum("eqi,eqj->eij", avals * wq[:, :, None], bvals)


def local_grams(avals, bvals, wq):
    """Per-element univariate Gram blocks ``(n_el, loc_a, loc_b)``."""
    if NUMBA_ENABLED:
        return _local_grams_numba(avals, bvals, wq)
    return _local_grams_numpy(avals, bvals, wq)


@njit(cache=True)
def _gram3d_triplets_numba(
    g1, g2, g3, fa1, fa2, fa3, fb1, fb2, fb3, na2, na3, nb2, nb3
):
    ne1, la1, lb1 = g1.shape
    ne2, la2, lb2 = g2.shape
    ne3, la3, lb3 = g3.shape
    per_el = la1 * la2 * la3 * lb1 * lb2 * lb3
    total = ne1 * ne2 * ne3 * per_el
    rows = np.empty(total, dtype=np.int64)
    cols = np.empty(total, dtype=np.int64)
    vals = np.empty(total, dtype=np.float64)
    idx = 0
    for e1 in range(ne1):
        for e2 in range(ne2):
            for e3 in range(ne3):
                for i1 in range(la1):
                    r1 = (fa1[e1] + i1) * na2
                    for i2 in range(la2):
                        r2 = (r1 + fa2[e2] + i2) * na3
                        for i3 in range(la3):
                            row = r2 + fa3[e3] + i3
                            for j1 in range(lb1):
                                v1 = g1[e1, i1, j1]
                                c1 = (fb1[e1] + j1) * nb2
                                for j2 in range(lb2):
                                    v2 = v1 * g2[e2, i2, j2]
                                    c2 = (c1 + fb2[e2] + j2) * nb3
                                    for j3 in range(lb3):
                                        rows[idx] = row
                                        cols[idx] = c2 + fb3[e3] + j3
                                        vals[idx] = v2 * g3[e3, i3, j3]
                                        idx += 1
    return rows, cols, vals


def _gram3d_triplets_numpy(
    g1, g2, g3, fa1, fa2, fa3, fb1, fb2, fb3, na2, na3, nb2, nb3
):
    ne1, la1, lb1 = g1.shape
    ne2, la2, lb2 = g2.shape
    ne3, la3, lb3 = g3.shape
    vals = np.einsum("aij,bkl,cmn->abcikmjln", g1, g2, g3)

    ia = (
        (fa1[:, None] + np.arange(la1))[:, :, None, None]
        * na2
        + (fa2[:, None] + np.arange(la2))[None, None, :, :]
    )
    # rows[e1,e2,e3,i1,i2,i3]
    rows = (
        ia[:, :, :, :, None, None] * na3
        + (fa3[:, None] + np.arange(la3))[None, None, None, None, :, :]
    )
    rows = np.transpose(rows, (0, 2, 4, 1, 3, 5))  # (e1,e2,e3,i1,i2,i3)
    jb = (
        (fb1[:, None] + np.arange(lb1))[:, :, None, None]
        * nb2
        + (fb2[:, None] + np.arange(lb2))[None, None, :, :]
    )
    cols = (
        jb[:, :, :, :, None, None] * nb3
        + (fb3[:, None] + np.arange(lb3))[None, None, None, None, :, :]
    )
    cols = np.transpose(cols, (0, 2, 4, 1, 3, 5))  # (e1,e2,e3,j1,j2,j3)

    shape = (ne1, ne2, ne3, la1, la2, la3, lb1, lb2, lb3)
    rfull = np.broadcast_to(
        rows[:, :, :, :, :, :, None, None, None], shape
    ).reshape(-1)
    cfull = np.broadcast_to(
        cols[:, :, :, None, None, None, :, :, :], shape
    ).reshape(-1)
    return rfull.astype(np.int64), cfull.astype(np.int64), vals.reshape(-1)


def gram3d_triplets(g1, g2, g3, fa, fb, na, nb):
    """COO triplets of the 3D cross Gram from per-direction element blocks.

    ``g_d``: local Gram stacks, ``fa``/``fb``: first-dof index arrays per
    direction, ``na``/``nb``: global tensor dims of the two spaces.
    """
    args = (
        g1,
        g2,
        g3,
        fa[0],
        fa[1],
        fa[2],
        fb[0],
        fb[1],
        fb[2],
        na[1],
        na[2],
        nb[1],
        nb[2],
    )
    if NUMBA_ENABLED:
        return _gram3d_triplets_numba(*args)
    return _gram3d_triplets_numpy(*args)
