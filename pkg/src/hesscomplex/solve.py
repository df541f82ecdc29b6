"""Symmetric linear solves for the mixed systems.

Small systems go to a sparse direct factorization; large ones to MINRES with
absolute-value-diagonal scaling, mirroring how the convergence studies are
meant to run at desk scale.  Non-convergence is reported, not raised: the
caller logs the achieved residual next to the errors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["SolveConfig", "SolveReport", "SingularSystemError", "solve_symmetric"]


class SingularSystemError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    method: str = "auto"  # auto | direct | minres
    tol: float = 1e-10
    maxit: int = 40000
    direct_threshold: int = 20000

    def __post_init__(self):
        if self.method not in ("auto", "direct", "minres"):
            raise ValueError(f"unknown solve method {self.method!r}")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.maxit < 1:
            raise ValueError("need at least one iteration")


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float  # recomputed from the original system
    seconds: float
    converged: bool


def _as_matrix(system):
    matrix = getattr(system, "matrix", system)
    rhs = getattr(system, "rhs", None)
    return matrix, rhs


def solve_symmetric(system, rhs=None, config: SolveConfig | None = None):
    """Solve a symmetric (possibly indefinite) sparse system.

    ``system`` is a sparse matrix or an object with ``.matrix`` (and
    optionally ``.rhs``).  Returns (solution, report); the report's residual
    is always recomputed as ||Ax - b|| / ||b|| from the inputs.
    """
    config = config or SolveConfig()
    matrix, sys_rhs = _as_matrix(system)
    b = np.asarray(rhs if rhs is not None else sys_rhs, dtype=float)
    if b is None:
        raise ValueError("no right-hand side given")
    n = matrix.shape[0]
    if matrix.shape[0] != matrix.shape[1] or b.shape != (n,):
        raise ValueError(
            f"dimension mismatch: matrix {matrix.shape}, rhs {b.shape}"
        )
    method = config.method
    if method == "auto":
        method = "direct" if n <= config.direct_threshold else "minres"

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(method, 0, 0.0, 0.0, True)

    t0 = time.perf_counter()
    if method == "direct":
        try:
            lu = spla.splu(sp.csc_matrix(matrix))
            x = lu.solve(b)
        except RuntimeError as exc:
            raise SingularSystemError(str(exc)) from exc
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("direct factorization produced non-finite values")
        iterations = 1
    else:
        # symmetric absolute-diagonal scaling keeps the matrix symmetric and
        # makes the iteration's stopping test refer to the scaled residual
        diag = np.abs(matrix.diagonal())
        diag[diag < 1e-30] = 1.0
        scale = 1.0 / np.sqrt(diag)
        scaled = (sp.diags(scale) @ matrix @ sp.diags(scale)).tocsr()
        count = {"it": 0}

        def cb(_):
            count["it"] += 1

        y, info = spla.minres(
            scaled,
            scale * b,
            rtol=max(config.tol * 1e-4, 1e-15),
            maxiter=config.maxit,
            callback=cb,
        )
        if info < 0:
            raise SingularSystemError(f"minres breakdown (info={info})")
        x = scale * y
        iterations = count["it"]
    seconds = time.perf_counter() - t0
    residual = float(np.linalg.norm(matrix @ x - b) / bnorm)
    return x, SolveReport(
        method=method,
        iterations=iterations,
        residual=residual,
        seconds=seconds,
        converged=residual <= config.tol,
    )
