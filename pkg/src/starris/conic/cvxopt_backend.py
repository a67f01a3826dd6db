"""Direct CVXOPT ``conelp`` translation.

The program is handed to CVXOPT as its *dual* problem

    maximize  -h'z - b'y   s.t.  G'z + A'y + c = 0,  z in K

so each of our constraints becomes one component of CVXOPT's primal variable
``x``.  The interior-point KKT systems are then of the size of the constraint
count rather than the (much larger) number of PSD matrix entries.

A complex Hermitian ``X = A + jB`` is carried as the real PSD block
``Z = [[A, -B], [B, A]]``; ``Re Tr(C X) = <C_e, Z>/2`` with ``C_e`` the same
embedding of ``C``.  Any real PSD ``Z`` maps back to a PSD ``X``.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from .program import ConicProgram, ConicSolution, LinearExpr

log = logging.getLogger(__name__)


def embed(C: np.ndarray) -> np.ndarray:
    C = np.asarray(C, dtype=complex)
    return np.block([[C.real, -C.imag], [C.imag, C.real]])


def unembed(Z: np.ndarray) -> np.ndarray:
    n = Z.shape[0] // 2
    return 0.5 * (Z[:n, :n] + Z[n:, n:]) + 0.5j * (Z[n:, :n] - Z[:n, n:])


class _Layout:
    """Index bookkeeping for the cone vector z = [l | q blocks | s blocks]."""

    def __init__(self, program: ConicProgram):
        self.program = program
        self.bounded = [k for k, lo in program.scalar_vars.items() if lo is not None]
        self.free = [k for k, lo in program.scalar_vars.items() if lo is None]
        self.le_rows = [i for i, c in enumerate(program.constraints) if c.kind == "le"]
        self.rsoc_rows = [i for i, c in enumerate(program.constraints) if c.kind == "rsoc"]
        self.l_index = {k: i for i, k in enumerate(self.bounded)}
        n_l = len(self.bounded)
        self.slack_index = {row: n_l + j for j, row in enumerate(self.le_rows)}
        n_l += len(self.le_rows)
        self.n_l = n_l
        self.q_offset = {row: n_l + 3 * j for j, row in enumerate(self.rsoc_rows)}
        offset = n_l + 3 * len(self.rsoc_rows)
        self.s_offset = {}
        self.s_dims = []
        for name, n in program.matrix_vars.items():
            self.s_offset[name] = offset
            self.s_dims.append(2 * n)
            offset += (2 * n) ** 2
        self.size = offset
        self.y_index = {k: i for i, k in enumerate(self.free)}

    def expr(self, e: LinearExpr):
        """Sparse z-coefficients, y-coefficients and constant of a linear expression."""
        zi, zv, yv = [], [], {}
        const = float(e.constant)
        for name, C in e.matrix_terms.items():
            n = C.shape[0]
            r, c = np.nonzero(C)
            v = 0.5 * C[r, c]
            # entries of 0.5 * embed(C) in column-major order of the 2n x 2n block
            rr = np.concatenate([r, r + n, r, r + n])
            cc = np.concatenate([c, c + n, c + n, c])
            vv = np.concatenate([v.real, v.real, -v.imag, v.imag])
            keep = vv != 0
            zi.append(self.s_offset[name] + rr[keep] + 2 * n * cc[keep])
            zv.append(vv[keep])
        sc_i, sc_v = [], []
        for name, c in e.scalar_terms.items():
            lo = self.program.scalar_vars[name]
            if lo is None:
                yv[self.y_index[name]] = yv.get(self.y_index[name], 0.0) + c
            else:
                sc_i.append(self.l_index[name])
                sc_v.append(c)
                const += c * lo
        zi.append(np.asarray(sc_i, dtype=np.int64))
        zv.append(np.asarray(sc_v, dtype=float))
        return np.concatenate(zi), np.concatenate(zv), yv, const


def _fix_expr(c, n: int) -> list:
    """Linear rows (as LinearExpr) that pin ``X[i, j]`` to ``c.value``."""
    i, j = c.index
    if i == j:
        E = np.zeros((n, n), complex)
        E[i, i] = 1.0
        return [LinearExpr({c.var: E}, {}, -float(np.real(c.value)))]
    Re = np.zeros((n, n), complex)
    Re[i, j] = Re[j, i] = 0.5
    Im = np.zeros((n, n), complex)
    Im[i, j], Im[j, i] = 0.5j, -0.5j
    return [LinearExpr({c.var: Re}, {}, -float(np.real(c.value))),
            LinearExpr({c.var: Im}, {}, -float(np.imag(c.value)))]


def solve_cvxopt(program: ConicProgram, settings) -> ConicSolution:
    from cvxopt import matrix, solvers, spmatrix

    lay = _Layout(program)
    rows_i, rows_j, rows_v = [], [], []
    a_i, a_j, a_v = [], [], []
    consts = []

    def add_row(zi, zv, yv, const):
        r = len(consts)
        rows_i.append(np.full(len(zi), r, dtype=np.int64))
        rows_j.append(np.asarray(zi, dtype=np.int64))
        rows_v.append(np.asarray(zv, dtype=float))
        for y, v in yv.items():
            a_i.append(r)
            a_j.append(y)
            a_v.append(v)
        consts.append(const)

    for idx, c in enumerate(program.constraints):
        if c.kind == "fix":
            for e in _fix_expr(c, program.matrix_vars[c.var]):
                add_row(*lay.expr(e))
        elif c.kind == "eq":
            add_row(*lay.expr(c.expr))
        elif c.kind == "le":
            zi, zv, yv, const = lay.expr(c.expr)
            add_row(np.append(zi, lay.slack_index[idx]), np.append(zv, 1.0), yv, const)
        else:
            # (t0, t1, t2) in SOC with t0 = p + 1, t1 = 2 s, t2 = p - 1
            q0 = lay.q_offset[idx]
            zi, zv, yv, const = lay.expr(c.expr)
            neg_y = {k: -v for k, v in yv.items()}
            add_row(np.append(zi, q0), np.append(-zv, 1.0), neg_y, -const - 1.0)
            add_row(np.append(zi, q0 + 2), np.append(-zv, 1.0), neg_y, -const + 1.0)
            s_expr = LinearExpr(scalar_terms={c.scalar: -2.0})
            si, sv, sy, sc = lay.expr(s_expr)
            add_row(np.append(si, q0 + 1), np.append(sv, 1.0), sy, sc)

    m = len(consts)
    G = sp.coo_matrix((np.concatenate(rows_v), (np.concatenate(rows_j), np.concatenate(rows_i))),
                      shape=(lay.size, m)).tocsc().tocoo()      # sums duplicates
    zi, zv, yv, obj_const = lay.expr(program.objective)
    h = np.zeros(lay.size)
    np.add.at(h, zi, -zv)
    b = np.zeros(len(lay.free))
    for y, v in yv.items():
        b[y] = -v
    A = sp.coo_matrix((a_v, (a_j, a_i)), shape=(len(lay.free), m))
    # the argmax is unchanged by a positive objective scale; unit scale keeps
    # the interior-point stopping tests meaningful when coefficients are large
    obj_scale = max(float(np.max(np.abs(h), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), 1.0)
    h /= obj_scale
    b /= obj_scale

    dims = {"l": lay.n_l, "q": [3] * len(lay.rsoc_rows), "s": lay.s_dims}
    # cvxopt builds an spmatrix fastest when columns are short, so assemble G'
    # (few entries per column) and transpose
    Gc = spmatrix(matrix(G.data), matrix(G.col.astype(int)), matrix(G.row.astype(int)),
                  (m, lay.size)).T
    Ac = spmatrix(A.data.tolist(), A.row.tolist(), A.col.tolist(), (len(lay.free), m))
    eps = settings.solver_eps
    options = {"show_progress": False, "abstol": eps, "reltol": eps, "feastol": eps,
               "maxiters": settings.max_iter}
    try:
        sol = solvers.conelp(matrix(np.asarray(consts, dtype=float)), Gc, matrix(h), dims,
                             Ac, matrix(b), options=options)
    except (ValueError, ArithmeticError) as exc:
        log.info("cvxopt failed: %s", exc)   # callers retry, then fall back
        return ConicSolution("numerical-failure", solver="CVXOPT", raw_status=str(exc))

    raw = sol["status"]
    if raw == "dual infeasible":
        return ConicSolution("infeasible", solver="CVXOPT", raw_status=raw)
    if sol["z"] is None:
        return ConicSolution("numerical-failure", solver="CVXOPT", raw_status=raw)

    z = np.array(sol["z"]).ravel()
    y = np.array(sol["y"]).ravel() if len(lay.free) else np.zeros(0)
    values = {}
    for name, n in program.matrix_vars.items():
        off = lay.s_offset[name]
        Z = z[off:off + (2 * n) ** 2].reshape((2 * n, 2 * n), order="F")
        Z = np.tril(Z) + np.tril(Z, -1).T
        values[name] = unembed(Z)
    for name, lo in program.scalar_vars.items():
        values[name] = float(lo + z[lay.l_index[name]]) if lo is not None else float(y[lay.y_index[name]])
    gap = sol.get("relative gap")
    gap = float(gap) if gap is not None else np.nan
    return ConicSolution(raw, values=values, gap=gap, solver="CVXOPT", raw_status=raw)
