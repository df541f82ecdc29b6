"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run twice to compare end-to-end backends:

    python benchmarks/bench_kernels.py
    HESSCOMPLEX_BACKEND=numpy python benchmarks/bench_kernels.py

Within one process the script also times both implementations directly
(after a warm-up call so jit compilation is excluded).
"""

import time

import numpy as np

from hesscomplex import kernels
from hesscomplex.backend import NUMBA_ENABLED
from hesscomplex.quadrature import element_rule
from hesscomplex.splines import make_uniform_space


def timeit(fn, repeat=5):
    fn()  # warm-up (jit compile / cache fill)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_basis_tables():
    s = make_uniform_space(3, 2, 64)
    pts = np.random.default_rng(0).random(200_000)
    spans = kernels.find_spans(s.knots.values, 3, s.dim, pts)
    out = {}
    out["numpy"] = timeit(lambda: kernels._basis_values_numpy(s.knots.values, 3, pts, spans))
    if NUMBA_ENABLED:
        out["numba"] = timeit(
            lambda: kernels._basis_values_numba(s.knots.values, 3, pts, spans)
        )
    return out


def bench_gram3d():
    sa = make_uniform_space(3, 2, 8)
    sb = make_uniform_space(2, 1, 8)
    rule = element_rule(sa.mesh, 5)
    av, fa = sa.element_tables(rule.nodes)
    bv, fb = sb.element_tables(rule.nodes)
    ga = kernels._local_grams_numpy(av, bv, rule.weights)
    args = (ga, ga, ga, fa, fa, fa, fb, fb, fb, sa.dim, sa.dim, sb.dim, sb.dim)
    out = {}
    out["numpy"] = timeit(lambda: kernels._gram3d_triplets_numpy(*args), repeat=3)
    if NUMBA_ENABLED:
        out["numba"] = timeit(lambda: kernels._gram3d_triplets_numba(*args), repeat=3)
    return out


def bench_local_grams():
    sa = make_uniform_space(3, 2, 64)
    sb = make_uniform_space(2, 1, 64)
    rule = element_rule(sa.mesh, 12)
    av, _ = sa.element_tables(rule.nodes)
    bv, _ = sb.element_tables(rule.nodes)
    out = {}
    out["numpy"] = timeit(lambda: kernels._local_grams_numpy(av, bv, rule.weights))
    if NUMBA_ENABLED:
        out["numba"] = timeit(lambda: kernels._local_grams_numba(av, bv, rule.weights))
    return out


def main():
    print(f"active backend: {'numba' if NUMBA_ENABLED else 'numpy'}")
    for name, bench in [
        ("basis tables (200k points, p=3)", bench_basis_tables),
        ("univariate local grams (64 el, q=12)", bench_local_grams),
        ("3D gram triplets (8^3 elements)", bench_gram3d),
    ]:
        res = bench()
        line = f"{name:40s}"
        for key in ("numpy", "numba"):
            if key in res:
                line += f"  {key}: {res[key] * 1e3:8.2f} ms"
        if "numba" in res and res["numba"] > 0:
            line += f"  speedup: {res['numpy'] / res['numba']:5.1f}x"
        print(line)


if __name__ == "__main__":
    main()
