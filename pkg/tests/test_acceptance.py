"""Acceptance suite: one test per criterion, printing a PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` for the full report.
The convergence ladders follow the desk-scale setup: degrees 2 and 3 over
2, 3, 4, 6, 8 elements per direction on the sheared-cube domain.
"""

import numpy as np
import pytest

from hesscomplex import assembly as asm
from hesscomplex import fields as fl
from hesscomplex import problems as pb
from hesscomplex import projection as pj
from hesscomplex.complexes import (
    build_complex,
    curl_matrix,
    div_matrix,
    hessian_matrix,
    verify_exactness,
)
from hesscomplex.geometry import deformed_cube
from hesscomplex.quadrature import smooth_rule_order
from hesscomplex.solve import SolveConfig, solve_symmetric
from hesscomplex.splines import make_uniform_space

pytestmark = pytest.mark.acceptance

GEOM = deformed_cube()
LADDER = [2, 3, 4, 6, 8]
DEGREES = [2, 3]
RNG = np.random.default_rng(515131)

_STUDIES: dict = {}


def study(k: int, naive: bool = False):
    key = (k, naive)
    if key not in _STUDIES:
        degrees = [2] if naive else DEGREES
        ladder = [2, 3, 4] if naive else LADDER
        _STUDIES[key] = pb.convergence_study(k, degrees, ladder, GEOM, naive=naive)
        asm.clear_gram_cache()
    return _STUDIES[key]


def finest_slope(rows, p, column="err_u_graph"):
    sub = [r for r in rows if r["p"] == p]
    e0, e1 = sub[-2][column], sub[-1][column]
    h0, h1 = sub[-2]["h"], sub[-1]["h"]
    return np.log(e0 / e1) / np.log(h0 / h1)


def errors_of(rows, p, column="err_u_graph"):
    return [r[column] for r in rows if r["p"] == p]


def verdict(name: str, ok: bool, detail: str):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_criterion_01_complex_structure():
    worst_dd = 0.0
    rank_fail = []
    checked = []
    for p in (2, 3, 4):
        for n in (1, 2, 4):
            cs = build_complex(p, p - 1, n)
            d1, d2, d3 = hessian_matrix(cs), curl_matrix(cs), div_matrix(cs)
            scale = max(abs(d1).max(), abs(d2).max(), abs(d3).max())
            z21, z32 = d2 @ d1, d3 @ d2
            m = max(
                abs(z21).max() if z21.nnz else 0.0,
                abs(z32).max() if z32.nnz else 0.0,
            ) / scale
            worst_dd = max(worst_dd, m)
            total = sum(cs.dim(level) for level in (1, 2, 3, 4))
            if total <= 3000:
                rep = verify_exactness(cs)
                checked.append((p, n))
                if not rep.all_ok:
                    rank_fail.append((p, n))
    ok = worst_dd <= 1e-12 and not rank_fail
    verdict(
        "criterion 1 (complex structure)",
        ok,
        f"max scaled |D.D| = {worst_dd:.2e}; exactness ranks verified at {checked}",
    )


def test_criterion_02_commuting_diagram():
    worst = 0.0
    fields = fl.default_smooth_fields(GEOM)
    for p in (2, 3):
        for n in (2, 4):
            cs = build_complex(p, p - 1, n)
            for level, u in zip((1, 2, 3), fields):
                worst = max(worst, pb.verify_commuting_square(level, cs, GEOM, u))
            asm.clear_gram_cache()
    verdict(
        "criterion 2 (commuting diagram)",
        worst <= 1e-8,
        f"max relative square residual = {worst:.2e} (tol 1e-8)",
    )


def test_criterion_03_k1_convergence():
    rows = study(1)
    slopes = {p: finest_slope(rows, p) for p in DEGREES}
    ok = all(slopes[p] >= p - 1 - 0.3 for p in DEGREES)
    verdict(
        "criterion 3 (k=1 convergence)",
        ok,
        f"finest-pair H2-graph slopes {slopes} vs thresholds "
        f"{ {p: p - 1 - 0.3 for p in DEGREES} }",
    )


def test_criterion_04_k2_convergence():
    rows = study(2)
    s2 = finest_slope(rows, 2)
    s3 = finest_slope(rows, 3)
    companion = {p: errors_of(rows, p, "err_sigma_graph") for p in DEGREES}
    mono = all(
        all(a >= b for a, b in zip(v, v[1:])) for v in companion.values()
    )
    ok = s2 >= 0.6 and s3 >= 2 - 0.3 and mono
    verdict(
        "criterion 4 (k=2 convergence)",
        ok,
        f"H(curl)-graph slopes p=2: {s2:.3f} (>=0.6), p=3: {s3:.3f} (>=1.7); "
        f"companion errors monotone: {mono}",
    )


def test_criterion_05_k3_convergence():
    rows = study(3)
    ok = True
    detail = []
    for p in DEGREES:
        su = finest_slope(rows, p)
        ss = finest_slope(rows, p, "err_sigma_graph")
        ok = ok and su >= p - 1 - 0.3 and ss >= p - 1 - 0.3
        detail.append(f"p={p}: H(div) {su:.3f}, companion H(curl) {ss:.3f}")
    verdict(
        "criterion 5 (k=3 convergence)",
        ok,
        "; ".join(detail) + f" (thresholds {[p - 1 - 0.3 for p in DEGREES]})",
    )


def test_criterion_06_k4_convergence():
    rows = study(4)
    ok = True
    detail = []
    for p in DEGREES:
        sl2 = finest_slope(rows, p, "err_u_l2")
        sdiv = finest_slope(rows, p, "err_sigma_graph")
        ok = ok and sl2 >= p - 1 - 0.3 and sdiv >= p - 1 - 0.3
        detail.append(f"p={p}: L2 {sl2:.3f}, companion H(div) {sdiv:.3f}")
    verdict(
        "criterion 6 (k=4 convergence)",
        ok,
        "; ".join(detail) + f" (thresholds {[p - 1 - 0.3 for p in DEGREES]})",
    )


def test_criterion_07_naive_contrast():
    detail = []
    ok = True
    for k in (2, 3):
        sp_errors = errors_of(study(k), 2)[:3]  # N = 2, 3, 4 cells
        mono = all(a >= b for a, b in zip(sp_errors, sp_errors[1:]))
        naive_rows = study(k, naive=True)
        completed = len(naive_rows) == 3 and all(
            np.isfinite(r["err_u_graph"]) for r in naive_rows
        )
        ok = ok and mono and completed
        naive_errs = [f"{r['err_u_graph']:.3e}" for r in naive_rows]
        detail.append(
            f"k={k}: structure-preserving monotone={mono}, "
            f"componentwise errors logged {naive_errs}"
        )
    verdict("criterion 7 (componentwise contrast)", ok, "; ".join(detail))


def test_criterion_08_leb_energy_conservation():
    cs = build_complex(2, 1, 2)
    s0 = RNG.standard_normal(cs.dim(1))
    e0 = RNG.standard_normal(cs.dim(2))
    b0 = RNG.standard_normal(cs.dim(3))
    traj = pb.leb_evolve(s0, e0, b0, 0.01, 1.0, cs, GEOM, keep_states=False)
    asm.clear_gram_cache()
    drift = traj.energy_drift
    verdict(
        "criterion 8 (evolution energy conservation)",
        len(traj.times) == 101 and drift <= 1e-9,
        f"relative drift over 100 midpoint steps = {drift:.2e} (tol 1e-9)",
    )


def test_criterion_09_projection_suite():
    worst_repro = 0.0
    worst_comm = 0.0
    v = lambda x: np.sin(np.pi * x) ** 3 + x**2
    dv = lambda x: 3 * np.pi * np.sin(np.pi * x) ** 2 * np.cos(np.pi * x) + 2 * x
    d2v = lambda x: (
        6 * np.pi**2 * np.sin(np.pi * x) * np.cos(np.pi * x) ** 2
        - 3 * np.pi**2 * np.sin(np.pi * x) ** 3
        + 2
    )
    for p in (2, 3, 4):
        for n in (2, 4, 8):
            s = make_uniform_space(p, p - 1, n)
            q = smooth_rule_order(p, n)
            projs = {
                kind: pj.build_univariate_projector(s, kind, q)
                for kind in ("plain", "c1", "c2")
            }
            for kind, proj in projs.items():
                coeffs = RNG.standard_normal(proj.target.dim)
                out = pj.project(
                    proj, lambda x, t=proj.target, c=coeffs: t.value_table(x) @ c
                )
                worst_repro = max(worst_repro, np.abs(out - coeffs).max())
            e1 = s.derivative_matrix()
            e2 = s.derivative_space().derivative_matrix()
            c1 = np.abs(
                pj.project(projs["c1"], dv) - e1 @ pj.project(projs["plain"], v)
            ).max()
            c2a = np.abs(
                pj.project(projs["c2"], d2v) - e2 @ (e1 @ pj.project(projs["plain"], v))
            ).max()
            c2b = np.abs(
                pj.project(projs["c2"], d2v) - e2 @ pj.project(projs["c1"], dv)
            ).max()
            worst_comm = max(worst_comm, c1, c2a, c2b)
    ok = worst_repro <= 1e-10 and worst_comm <= 1e-8
    verdict(
        "criterion 9 (projection suite)",
        ok,
        f"max reproduction error {worst_repro:.2e} (tol 1e-10), "
        f"max commutation residual {worst_comm:.2e} (tol 1e-8)",
    )


def test_criterion_10_solver_cross_check():
    cs = build_complex(2, 1, 2)
    u = fl.manufactured_solution(2, GEOM)
    system = asm.build_saddle_system(2, cs, GEOM, fl.hodge_rhs(2, u))
    asm.clear_gram_cache()
    xd, _ = solve_symmetric(system, config=SolveConfig(method="direct"))
    xm, rep = solve_symmetric(system, config=SolveConfig(method="minres", tol=1e-8))
    diff = np.abs(xd - xm).max() / max(np.abs(xd).max(), 1e-300)
    ok = diff <= 1e-8 and rep.converged
    verdict(
        "criterion 10 (solver cross-check)",
        ok,
        f"direct vs minres max solution difference = {diff:.2e} "
        f"(tol 1e-8, minres iters {rep.iterations})",
    )
