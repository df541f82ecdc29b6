"""Command-line front end.

Subcommands:

* ``verify``: structural checks of the discrete complex for one (p, r, N,
  geometry): composition of differentials, exactness ranks, commuting
  projector squares, pullback commutation.
* ``hodge``: convergence study of the level-k mixed problem over degree and
  refinement ladders; CSV output plus a rate table on stdout.
* ``leb``: linearized evolution run from seeded random initial data; CSV of
  energy and field norms per step.

Exit codes: 0 success, 1 property failure, 2 usage error, 3 solver hard
failure.  Configuration may come from a key = value file with [section]
headers; flags override file values.
"""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

__all__ = ["main", "parse_geometry", "load_config"]

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_USAGE = 2
EXIT_SOLVER_FAILURE = 3

CSV_HEADER = (
    "level,k,p,N,h,dofs,err_sigma_graph,err_u_graph,err_u_l2,"
    "slope,solver,residual,iters,seconds"
)


class UsageError(Exception):
    pass


def parse_geometry(spec: str | None):
    """Geometry from '12 comma-separated reals' (row-major matrix then
    offset) or from a config file path; None means the identity."""
    from .geometry import AffineGeometry, identity_geometry

    if spec is None:
        return identity_geometry()
    text = spec
    if "," not in spec:
        cfg = load_config(spec)
        if "geometry" not in cfg:
            raise UsageError(f"no [geometry] section in {spec}")
        text = cfg["geometry"].get("entries", "")
    try:
        vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse geometry numbers: {exc}") from exc
    if len(vals) != 12:
        raise UsageError(f"geometry needs 12 reals (9 matrix + 3 offset), got {len(vals)}")
    try:
        return AffineGeometry(np.array(vals[:9]).reshape(3, 3), np.array(vals[9:]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def load_config(path: str) -> dict:
    """key = value file with [section] headers."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # option names are case-sensitive (N vs n)
    read = parser.read(path)
    if not read:
        raise UsageError(f"cannot read config file {path}")
    return {s: dict(parser[s]) for s in parser.sections()}


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _fmt(x: float) -> str:
    return f"{x:.12e}"


_COMMON_DEFAULTS = {
    "geometry": None,
    "solver": "auto",
    "tol": 1e-10,
    "maxit": 40000,
    "out": None,
    "seed": 0,
}
DEFAULTS = {
    "verify": {"p": 2, "r": None, "N": 2, **_COMMON_DEFAULTS},
    "hodge": {"k": None, "degrees": "2", "N": "2,3,4", "naive": False, **_COMMON_DEFAULTS},
    "leb": {"p": 2, "N": 2, "dt": None, "T": 1.0, **_COMMON_DEFAULTS},
}
_CASTS = {"p": int, "r": int, "N": str, "k": int, "degrees": str, "tol": float,
          "maxit": int, "dt": float, "T": float, "seed": int}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hesscomplex",
        description="Spline Hessian-complex discretization: verification, "
        "mixed Hodge-Laplacian studies, linearized evolution.",
    )
    ap.add_argument("--config", help="key = value config file", default=None)
    sub = ap.add_subparsers(dest="command")

    def add_common(p, cmd):
        d = DEFAULTS[cmd]
        p.add_argument("--geometry", default=d["geometry"],
                       help="12 comma-separated reals (row-major matrix + offset) or config path")
        p.add_argument("--solver", default=d["solver"], choices=["auto", "direct", "minres"])
        p.add_argument("--tol", type=float, default=d["tol"])
        p.add_argument("--maxit", type=int, default=d["maxit"])
        p.add_argument("--out", default=d["out"], help="CSV output path")
        p.add_argument("--seed", type=int, default=d["seed"])

    pv = sub.add_parser("verify", help="structural checks of the discrete complex")
    pv.add_argument("--p", type=int, default=DEFAULTS["verify"]["p"])
    pv.add_argument("--r", type=int, default=DEFAULTS["verify"]["r"])
    pv.add_argument("--N", type=int, default=DEFAULTS["verify"]["N"])
    add_common(pv, "verify")

    ph = sub.add_parser("hodge", help="mixed Hodge-Laplacian convergence study")
    ph.add_argument("--k", type=int, required=True)
    ph.add_argument("--degrees", type=str, default=DEFAULTS["hodge"]["degrees"])
    ph.add_argument("--N", type=str, default=DEFAULTS["hodge"]["N"])
    ph.add_argument("--naive", action="store_true",
                    help="componentwise scalar spaces (levels 2 and 3 only)")
    add_common(ph, "hodge")

    pl = sub.add_parser("leb", help="linearized evolution energy run")
    pl.add_argument("--p", type=int, default=DEFAULTS["leb"]["p"])
    pl.add_argument("--N", type=int, default=DEFAULTS["leb"]["N"])
    pl.add_argument("--dt", type=float, default=DEFAULTS["leb"]["dt"],
                    help="time step (default h/4)")
    pl.add_argument("--T", type=float, default=DEFAULTS["leb"]["T"])
    add_common(pl, "leb")
    return ap


def _apply_config(args, cfg: dict):
    """File values fill in anything the command line left at its default."""
    section = cfg.get(args.command, {})
    defaults = DEFAULTS.get(args.command, {})
    for key, value in section.items():
        attr = key.strip().replace("-", "_")
        if attr == "t":
            attr = "T"
        if not hasattr(args, attr) or attr not in defaults:
            continue
        if getattr(args, attr) == defaults[attr]:
            if attr == "naive":
                setattr(args, attr, value.strip().lower() in ("1", "true", "yes"))
            else:
                default = defaults[attr]
                cast = type(default) if default is not None else _CASTS.get(attr, str)
                setattr(args, attr, cast(value))


def cmd_verify(args) -> int:
    from . import assembly as asm
    from . import fields as fl
    from . import problems as pb
    from .complexes import build_complex, curl_matrix, div_matrix, hessian_matrix, verify_exactness
    from .geometry import verify_commuting_pullbacks

    geom = parse_geometry(args.geometry)
    r = args.r if args.r is not None else args.p - 1
    try:
        cs = build_complex(args.p, r, args.N)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    failures = 0

    def report(name, value, tol):
        nonlocal failures
        ok = value <= tol
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} (tol {tol:.1e})")

    d1, d2, d3 = hessian_matrix(cs), curl_matrix(cs), div_matrix(cs)
    scale = max(abs(d1).max(), abs(d2).max(), abs(d3).max())
    z21 = d2 @ d1
    z32 = d3 @ d2
    report("curl o hessian = 0", (abs(z21).max() if z21.nnz else 0.0) / scale, 1e-12)
    report("div o curl = 0", (abs(z32).max() if z32.nnz else 0.0) / scale, 1e-12)

    total = sum(cs.dim(level) for level in (1, 2, 3, 4))
    if total <= 3000:
        rep = verify_exactness(cs)
        report("kernel(hessian) = linear polys", abs(rep.kernel_d1 - 4), 0)
        report("kernel(curl) = range(hessian)", abs(rep.kernel_d2 - rep.rank_d1), 0)
        report("kernel(div) = range(curl)", abs(rep.kernel_d3 - rep.rank_d2), 0)
        report("div surjective", abs(rep.rank_d3 - cs.dim(4)), 0)
    else:
        print(f"SKIP  exactness ranks ({total} unknowns exceed the dense guard)")

    pull = verify_commuting_pullbacks(geom, n_elements=min(args.N, 4))
    for name, val in pull.items():
        report(f"pullback commutes ({name})", val, 1e-8)

    phi, s_field, t_field = fl.default_smooth_fields(geom)
    for level, u in ((1, phi), (2, s_field), (3, t_field)):
        res = pb.verify_commuting_square(level, cs, geom, u)
        report(f"projector square level {level}", res, 1e-8)
    asm.clear_gram_cache()
    return EXIT_OK if failures == 0 else EXIT_PROPERTY_FAILURE


def cmd_hodge(args) -> int:
    from . import problems as pb
    from .solve import SolveConfig

    geom = parse_geometry(args.geometry)
    if args.k not in (1, 2, 3, 4):
        raise UsageError(f"--k must be 1..4, got {args.k}")
    degrees = _int_list(args.degrees)
    n_list = _int_list(args.N)
    if args.naive and args.k not in (2, 3):
        raise UsageError("--naive is defined for k = 2 and 3 only")
    if min(degrees) < 2:
        raise UsageError("degrees must be >= 2")
    if min(n_list) < 1:
        raise UsageError("element counts must be >= 1")
    config = SolveConfig(method=args.solver, tol=args.tol, maxit=args.maxit)
    rows = pb.convergence_study(args.k, degrees, n_list, geom, config, naive=args.naive)

    lines = [CSV_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    str(row["level"]), str(row["k"]), str(row["p"]), str(row["N"]),
                    _fmt(row["h"]), str(row["dofs"]),
                    _fmt(row["err_sigma_graph"]), _fmt(row["err_u_graph"]),
                    _fmt(row["err_u_l2"]),
                    "nan" if np.isnan(row["slope"]) else f"{row['slope']:.6f}",
                    row["solver"], _fmt(row["residual"]), str(row["iters"]),
                    f"{row['seconds']:.3f}",
                ]
            )
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(f"{'p':>3} {'N':>3} {'h':>10} {'dofs':>8} {'err_u_graph':>13} {'slope':>8} {'residual':>10}")
    for row in rows:
        slope = "-" if np.isnan(row["slope"]) else f"{row['slope']:.3f}"
        print(
            f"{row['p']:>3} {row['N']:>3} {row['h']:>10.4e} {row['dofs']:>8} "
            f"{row['err_u_graph']:>13.6e} {slope:>8} {row['residual']:>10.2e}"
        )
    bad = [r for r in rows if r["residual"] > args.tol * 100 and r["solver"] == "minres"]
    if bad:
        print(f"note: {len(bad)} run(s) did not reach the solver tolerance")
    return EXIT_OK


def cmd_leb(args) -> int:
    from . import problems as pb
    from .complexes import build_complex

    geom = parse_geometry(args.geometry)
    try:
        cs = build_complex(args.p, args.p - 1, args.N)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dt = args.dt if args.dt is not None else cs.h / 4.0
    if dt <= 0 or args.T <= 0:
        raise UsageError("time step and final time must be positive")
    rng = np.random.default_rng(args.seed)
    s0 = rng.standard_normal(cs.dim(1))
    e0 = rng.standard_normal(cs.dim(2))
    b0 = rng.standard_normal(cs.dim(3))
    traj = pb.leb_evolve(s0, e0, b0, dt, args.T, cs, geom, keep_states=False)
    lines = ["t,energy,norm_sigma,norm_e,norm_b"]
    for t, en, nv in zip(traj.times, traj.energies, traj.norms):
        lines.append(f"{_fmt(t)},{_fmt(en)},{_fmt(nv[0])},{_fmt(nv[1])},{_fmt(nv[2])}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(
        f"steps={len(traj.times) - 1} dt={dt:.6g} energy0={traj.energies[0]:.9e} "
        f"relative_drift={traj.energy_drift:.3e}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.command is None:
        ap.print_help()
        return EXIT_USAGE
    try:
        if args.config:
            _apply_config(args, load_config(args.config))
        handler = {"verify": cmd_verify, "hodge": cmd_hodge, "leb": cmd_leb}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # solver breakdowns and the like
        from .solve import SingularSystemError

        if isinstance(exc, SingularSystemError):
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER_FAILURE
        raise


if __name__ == "__main__":
    sys.exit(main())
