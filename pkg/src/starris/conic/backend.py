"""Solving a :class:`ConicProgram`.

The backend is chosen by ``settings.backend``, then the ``STARRIS_SOLVER``
environment variable, then the direct CVXOPT route.  Any other name is passed
to cvxpy as a solver name (``CLARABEL``, ``SCS``, ...), which is mostly useful
as an independent cross-check.
"""
from __future__ import annotations

import logging
import os
import warnings
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .cvxopt_backend import solve_cvxopt
from .program import ConicProgram, ConicSolution

log = logging.getLogger(__name__)

DEFAULT_BACKEND = "CVXOPT"
FALLBACK_BACKEND = "CLARABEL"   # retried through cvxpy when the default fails
ENV_VAR = "STARRIS_SOLVER"


@dataclass(frozen=True)
class SolveSettings:
    tol: float = 1e-6          # accepted primal residual
    max_iter: int = 500
    solver_eps: float = 1e-8   # interior-point stopping tolerance
    backend: str | None = None


def _backend_name(settings: SolveSettings) -> str:
    return (settings.backend or os.environ.get(ENV_VAR) or DEFAULT_BACKEND).upper()


def _solver_kwargs(name: str, settings: SolveSettings) -> dict:
    eps = settings.solver_eps
    if name == "CLARABEL":
        return {"tol_gap_abs": eps, "tol_gap_rel": eps, "tol_feas": eps,
                "max_iter": settings.max_iter}
    if name == "SCS":
        return {"eps_abs": eps, "eps_rel": eps, "max_iters": 50 * settings.max_iter}
    return {}


def _trace_term(C: np.ndarray, X):
    nz = np.argwhere(np.abs(C) > 0)
    if len(nz) <= C.shape[0]:
        # sparse selector, e.g. a single diagonal entry
        return cp.real(sum(C[i, j] * X[j, i] for i, j in nz)) if len(nz) else 0
    return cp.real(cp.trace(C @ X))


def _expr(e, mvars, svars):
    out = e.constant
    for name, C in e.matrix_terms.items():
        out = out + _trace_term(C, mvars[name])
    for name, c in e.scalar_terms.items():
        out = out + c * svars[name]
    return out


def _project_psd(X: np.ndarray) -> np.ndarray:
    X = (X + X.conj().T) / 2
    lam, U = np.linalg.eigh(X)
    if lam[0] >= 0:
        return X
    return (U * np.maximum(lam, 0.0)) @ U.conj().T


def _finalize(program: ConicProgram, sol: ConicSolution, settings: SolveSettings) -> ConicSolution:
    """Residual check on the returned point; PSD variables are projected first."""
    if sol.status == "infeasible" or not sol.values:
        return sol
    values = {k: (_project_psd(v) if k in program.matrix_vars else v)
              for k, v in sol.values.items()}
    residual = max(program.residuals(values).values())
    accepted = sol.raw_status in ("optimal", cp.OPTIMAL, cp.OPTIMAL_INACCURATE, "unknown")
    status = "optimal" if accepted and residual <= settings.tol else "numerical-failure"
    if status != "optimal":
        log.info("%s returned %s with residual %.3g (tol %.3g)", sol.solver, sol.raw_status,
                 residual, settings.tol)
    return ConicSolution(status, float(program.objective.value(values)), values, residual,
                         sol.gap, sol.solver, sol.raw_status)


def solve(program: ConicProgram, settings: SolveSettings | None = None) -> ConicSolution:
    settings = settings or SolveSettings()
    program.validate()
    name = _backend_name(settings)
    if name == "CVXOPT":
        return _finalize(program, solve_cvxopt(program, settings), settings)
    return _finalize(program, _solve_cvxpy(program, settings, name), settings)


def _solve_cvxpy(program: ConicProgram, settings: SolveSettings, name: str) -> ConicSolution:
    mvars = {k: cp.Variable((n, n), hermitian=True, name=k) for k, n in program.matrix_vars.items()}
    svars = {k: cp.Variable(name=k) for k in program.scalar_vars}
    cons = [X >> 0 for X in mvars.values()]
    for k, lo in program.scalar_vars.items():
        if lo is not None:
            cons.append(svars[k] >= lo)
    for c in program.constraints:
        if c.kind == "fix":
            cons.append(mvars[c.var][c.index] == c.value)
            continue
        e = _expr(c.expr, mvars, svars)
        if c.kind == "le":
            cons.append(e <= 0)
        elif c.kind == "eq":
            cons.append(e == 0)
        else:
            s = svars[c.scalar]
            cons.append(s >= 0)
            cons.append(cp.SOC(e + 1, cp.hstack([2 * s, e - 1])))
    objective = _expr(program.objective, mvars, svars)
    if not isinstance(objective, cp.Expression):
        objective = cp.Constant(objective)
    prob = cp.Problem(cp.Maximize(objective), cons)
    try:
        with warnings.catch_warnings():
            # raised inside cvxpy's complex-to-real reduction, not by our inputs
            warnings.filterwarnings("ignore", message="Initializing a Constant with a nested list")
            prob.solve(solver=name, **_solver_kwargs(name, settings))
    except cp.error.SolverError as exc:
        log.warning("solver %s failed: %s", name, exc)
        return ConicSolution("numerical-failure", solver=name, raw_status="solver_error")

    raw = prob.status
    if raw in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return ConicSolution("infeasible", solver=name, raw_status=raw)
    if raw not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return ConicSolution("numerical-failure", solver=name, raw_status=raw)
    values = {k: X.value for k, X in mvars.items()}
    values.update({k: float(s.value) for k, s in svars.items()})
    gap = np.nan
    stats = prob.solver_stats
    if stats is not None and isinstance(stats.extra_stats, dict):
        gap = float(stats.extra_stats.get("gap", np.nan))
    return ConicSolution(raw, values=values, gap=gap, solver=name, raw_status=raw)
