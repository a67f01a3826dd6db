"""Backend-neutral description of a mixed semidefinite / second-order-cone program.

Matrix variables are complex Hermitian PSD.  A :class:`LinearExpr` is

    sum_X Re Tr(C_X X) + sum_s c_s s + constant

and constraints are one of

    ``le``    expr <= 0
    ``eq``    expr == 0
    ``rsoc``  s**2 <= expr, s >= 0        (rotated cone with unit second leg)
    ``fix``   X[i, j] == value
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CONSTRAINT_KINDS = ("le", "eq", "rsoc", "fix")


@dataclass
class LinearExpr:
    matrix_terms: dict = field(default_factory=dict)
    scalar_terms: dict = field(default_factory=dict)
    constant: float = 0.0

    def add_matrix(self, name: str, coeff) -> "LinearExpr":
        coeff = np.asarray(coeff, dtype=complex)
        if name in self.matrix_terms:
            self.matrix_terms[name] = self.matrix_terms[name] + coeff
        else:
            self.matrix_terms[name] = coeff
        return self

    def add_scalar(self, name: str, coeff: float) -> "LinearExpr":
        self.scalar_terms[name] = self.scalar_terms.get(name, 0.0) + float(coeff)
        return self

    def scaled(self, c: float) -> "LinearExpr":
        return LinearExpr({k: c * v for k, v in self.matrix_terms.items()},
                          {k: c * v for k, v in self.scalar_terms.items()},
                          c * self.constant)

    def value(self, values: dict) -> float:
        total = self.constant
        for name, C in self.matrix_terms.items():
            total += float(np.real(np.trace(C @ values[name])))
        for name, c in self.scalar_terms.items():
            total += c * float(values[name])
        return float(total)


@dataclass
class Constraint:
    kind: str
    expr: LinearExpr | None = None
    scalar: str | None = None
    var: str | None = None
    index: tuple | None = None
    value: complex = 0.0
    label: str = ""


@dataclass
class ConicProgram:
    """Maximise ``objective`` subject to ``constraints`` and PSD-ness of every matrix variable."""

    matrix_vars: dict = field(default_factory=dict)   # name -> dimension
    scalar_vars: dict = field(default_factory=dict)   # name -> lower bound (None = free)
    objective: LinearExpr = field(default_factory=LinearExpr)
    constraints: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add_matrix_var(self, name: str, dim: int) -> str:
        if name in self.matrix_vars or name in self.scalar_vars:
            raise ValueError(f"duplicate variable {name!r}")
        self.matrix_vars[name] = int(dim)
        return name

    def add_scalar_var(self, name: str, lower: float | None = None) -> str:
        if name in self.matrix_vars or name in self.scalar_vars:
            raise ValueError(f"duplicate variable {name!r}")
        self.scalar_vars[name] = lower
        return name

    def add(self, constraint: Constraint) -> Constraint:
        self.constraints.append(constraint)
        return constraint

    def count(self, kind: str) -> int:
        return sum(c.kind == kind for c in self.constraints)

    def validate(self) -> "ConicProgram":
        def check_expr(expr, where):
            for name, C in expr.matrix_terms.items():
                if name not in self.matrix_vars:
                    raise ValueError(f"{where}: unknown matrix variable {name!r}")
                n = self.matrix_vars[name]
                if C.shape != (n, n):
                    raise ValueError(f"{where}: coefficient for {name!r} has shape {C.shape}, "
                                     f"expected {(n, n)}")
            for name in expr.scalar_terms:
                if name not in self.scalar_vars:
                    raise ValueError(f"{where}: unknown scalar variable {name!r}")

        check_expr(self.objective, "objective")
        for i, c in enumerate(self.constraints):
            where = f"constraint {i} ({c.label or c.kind})"
            if c.kind not in CONSTRAINT_KINDS:
                raise ValueError(f"{where}: unknown kind {c.kind!r}")
            if c.kind == "fix":
                if c.var not in self.matrix_vars:
                    raise ValueError(f"{where}: unknown matrix variable {c.var!r}")
                n = self.matrix_vars[c.var]
                if not all(0 <= ix < n for ix in c.index):
                    raise ValueError(f"{where}: index {c.index} out of range for size {n}")
                continue
            check_expr(c.expr, where)
            if c.kind == "rsoc" and c.scalar not in self.scalar_vars:
                raise ValueError(f"{where}: unknown scalar variable {c.scalar!r}")
        return self

    def residuals(self, values: dict) -> dict:
        """Largest relative violation of each constraint family (and of PSD-ness).

        Violations are divided by ``1 + scale`` where the scale is the size of
        the quantities being compared, so large but accurate epigraph values do
        not read as failures.
        """
        res = {"le": 0.0, "eq": 0.0, "rsoc": 0.0, "fix": 0.0, "psd": 0.0}
        for c in self.constraints:
            if c.kind == "fix":
                v = abs(values[c.var][c.index] - c.value) / (1.0 + abs(c.value))
            else:
                e = c.expr.value(values)
                if c.kind == "le":
                    v = max(e, 0.0) / (1.0 + abs(c.expr.constant))
                elif c.kind == "eq":
                    v = abs(e) / (1.0 + abs(c.expr.constant))
                else:
                    s = float(values[c.scalar])
                    v = max(s * s - e, -s, 0.0) / (1.0 + s * s + abs(e))
            res[c.kind] = max(res[c.kind], float(v))
        for name in self.matrix_vars:
            X = values[name]
            lam = np.linalg.eigvalsh((X + X.conj().T) / 2)
            res["psd"] = max(res["psd"], float(max(-lam[0], 0.0)) / (1.0 + abs(lam[-1])))
        return res

    def to_json(self) -> dict:
        """Self-describing dump: variables, cones and coefficient triplets ``[i, j, re, im]``."""
        def triplets(C):
            rows, cols = np.nonzero(np.abs(C) > 0)
            return [[int(i), int(j), float(C[i, j].real), float(C[i, j].imag)]
                    for i, j in zip(rows, cols)]

        def expr_json(e):
            return {"matrix_terms": {k: triplets(v) for k, v in e.matrix_terms.items()},
                    "scalar_terms": dict(e.scalar_terms), "constant": float(e.constant)}

        cons = []
        for c in self.constraints:
            item = {"kind": c.kind, "label": c.label}
            if c.kind == "fix":
                item.update(var=c.var, index=list(c.index),
                            value=[float(np.real(c.value)), float(np.imag(c.value))])
            else:
                item["expr"] = expr_json(c.expr)
                if c.kind == "rsoc":
                    item["scalar"] = c.scalar
            cons.append(item)
        return {
            "sense": "maximize",
            "matrix_vars": [{"name": k, "cone": "hermitian_psd", "dim": n}
                            for k, n in self.matrix_vars.items()],
            "scalar_vars": [{"name": k, "lower": lo} for k, lo in self.scalar_vars.items()],
            "objective": expr_json(self.objective),
            "constraints": cons,
        }


@dataclass
class ConicSolution:
    status: str                 # optimal | infeasible | numerical-failure
    objective: float = float("nan")
    values: dict = field(default_factory=dict)
    residual: float = float("nan")
    gap: float = float("nan")
    solver: str = ""
    raw_status: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"
