"""Semidefinite relaxations of the beamforming and surface-configuration blocks.

Both blocks share one shape: per user a signal power ``P_u`` and total power
``Q_u`` that are trace-linear in the lifted variables.  All constants are
rescaled so that the noise power is one (beams are measured relative to the
budget for the BS block, in units of the noise amplitude for the surface
block); ``eta`` is rescaled to match, which leaves objective values unchanged.

The concave ``2 eta sqrt((1+alpha) P)`` term is lifted with ``s_u`` and the
rotated cone ``s_u**2 <= eta**2 (1+alpha) P_u``, so the objective becomes
``2 s_u - eta**2 Q_u``.  At the point where ``alpha, eta`` were computed the
optimal ``s_u`` equals ``alpha_u``, so the variable is stored divided by
``kappa_u = max(1, alpha_u)`` to keep the cone entries of order one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..fractional import LN2
from .program import Constraint, ConicProgram, LinearExpr


@dataclass
class BsSubproblemData:
    """Scaled constants of the transmit-beamforming block.

    ``G[u]`` is ``(P_T/noise) g_u g_u^H``; the variables ``W_i`` are normalised
    by the budget so the power constraint reads ``sum Tr W_i <= 1``.
    """

    G: list
    desired: list
    stream_count: int
    alpha: np.ndarray
    eta: np.ndarray            # already multiplied by the noise amplitude
    r_min: np.ndarray
    power_budget: float = 1.0

    def __post_init__(self):
        if not self.G:
            raise ValueError("no users")
        n = self.G[0].shape[0]
        for Gu in self.G:
            if Gu.shape != (n, n):
                raise ValueError("inconsistent G dimensions")
        if not (len(self.G) == len(self.desired) == len(self.alpha) == len(self.eta)
                == len(self.r_min)):
            raise ValueError("per-user arrays must have equal length")
        if any(not 0 <= d < self.stream_count for d in self.desired):
            raise ValueError("desired stream index out of range")

    @property
    def antenna_count(self) -> int:
        return self.G[0].shape[0]


@dataclass
class RisSubproblemData:
    """Scaled constants of the surface block.

    For user ``u``: ``var[u]`` is ``"Psi{k}"`` or ``"Phi"``, ``xi_desired[u]``
    and ``xi_total[u]`` are the desired-stream and all-stream sums of
    ``H w_i w_i^H H^H / noise``.  ``frozen_beta_t`` (one array per surface)
    pins the amplitudes for the fixed-split baselines.
    """

    element_counts: list
    var: list
    xi_desired: list
    xi_total: list
    alpha: np.ndarray
    eta: np.ndarray
    r_min: np.ndarray
    frozen_beta_t: list | None = None
    offsets: np.ndarray = field(init=False)

    def __post_init__(self):
        self.offsets = np.concatenate([[0], np.cumsum(self.element_counts)]).astype(int)
        total = int(self.offsets[-1])
        for v, A in zip(self.var, self.xi_desired):
            n = total + 1 if v == "Phi" else self.element_counts[int(v[3:])]
            if A.shape != (n, n):
                raise ValueError(f"{v}: coefficient shape {A.shape} != {(n, n)}")
        if self.frozen_beta_t is not None:
            for k, b in enumerate(self.frozen_beta_t):
                if len(b) != self.element_counts[k]:
                    raise ValueError(f"frozen amplitudes for surface {k} have wrong length")

    def global_index(self, k: int, n: int) -> int:
        if not 0 <= n < self.element_counts[k]:
            raise IndexError(f"element {n} out of range for surface {k}")
        p = int(self.offsets[k] + n)
        if p >= self.offsets[-1]:
            raise IndexError("global index overflow")
        return p


def _selector(n: int, i: int) -> np.ndarray:
    E = np.zeros((n, n), dtype=complex)
    E[i, i] = 1.0
    return E


def _norm(expr: LinearExpr) -> float:
    return sum(float(np.linalg.norm(C)) for C in expr.matrix_terms.values())


def _fractional_program(prog: ConicProgram, P_exprs, Q_exprs, alpha, eta, r_min,
                        maxmin: bool) -> ConicProgram:
    """Objective and QoS rows shared by both blocks."""
    alpha = np.asarray(alpha, float)
    eta = np.asarray(eta, float)
    if maxmin:
        prog.add_scalar_var("margin")
        prog.objective = LinearExpr(scalar_terms={"margin": 1.0})
    else:
        obj = LinearExpr(constant=float(np.sum(np.log1p(alpha) - alpha)) / LN2)
        for u, (P, Q) in enumerate(zip(P_exprs, Q_exprs)):
            if not np.isfinite(alpha[u]) or not np.isfinite(eta[u]):
                raise ValueError("auxiliary variables must be finite")
            if eta[u] > 0:
                kappa = max(1.0, float(alpha[u]))
                s = prog.add_scalar_var(f"s{u}", lower=0.0)
                obj.add_scalar(s, 2.0 * kappa / LN2)
                prog.add(Constraint("rsoc", P.scaled(eta[u] ** 2 * (1 + alpha[u]) / kappa**2),
                                    scalar=s, label=f"epigraph[{u}]"))
            obj = _add(obj, Q.scaled(-eta[u] ** 2 / LN2))
        prog.objective = obj
    for u, (P, Q) in enumerate(zip(P_exprs, Q_exprs)):
        if r_min[u] <= 0:
            continue
        c = 2.0 ** r_min[u]
        # (2^R - 1) Q - 2^R P <= 0, normalised for conditioning
        row = _add(Q.scaled(c - 1.0), P.scaled(-c))
        row = row.scaled(1.0 / (c * (1.0 + _norm(Q))))
        if maxmin:
            row.add_scalar("margin", 1.0)
        prog.add(Constraint("le", row, label=f"qos[{u}]"))
    return prog


def _add(a: LinearExpr, b: LinearExpr) -> LinearExpr:
    out = LinearExpr(dict(a.matrix_terms), dict(a.scalar_terms), a.constant)
    for k, C in b.matrix_terms.items():
        out.add_matrix(k, C)
    for k, c in b.scalar_terms.items():
        out.add_scalar(k, c)
    out.constant += b.constant
    return out


def build_bs_subproblem(data: BsSubproblemData, maxmin: bool = False) -> ConicProgram:
    """Relaxed transmit-beamforming block over ``W_0..W_{S-1}``.

    With ``maxmin`` the objective is replaced by the largest common
    (normalised) QoS slack; used to find a feasible starting point.
    """
    n = data.antenna_count
    prog = ConicProgram(meta={"block": "bs", "maxmin": maxmin})
    names = [prog.add_matrix_var(f"W{i}", n) for i in range(data.stream_count)]
    P_exprs, Q_exprs = [], []
    for Gu, d in zip(data.G, data.desired):
        P_exprs.append(LinearExpr().add_matrix(names[d], Gu))
        Q = LinearExpr(constant=1.0)
        for name in names:
            Q.add_matrix(name, Gu)
        Q_exprs.append(Q)
    _fractional_program(prog, P_exprs, Q_exprs, data.alpha, data.eta, data.r_min, maxmin)
    power = LinearExpr(constant=-data.power_budget)
    eye = np.eye(n, dtype=complex)
    for name in names:
        power.add_matrix(name, eye)
    prog.add(Constraint("le", power, label="power"))
    return prog.validate()


def build_ris_subproblem(data: RisSubproblemData, maxmin: bool = False) -> ConicProgram:
    """Relaxed surface block over ``Psi_0..Psi_{K-1}`` and the homogenised ``Phi``."""
    total = int(data.offsets[-1])
    prog = ConicProgram(meta={"block": "ris", "maxmin": maxmin})
    for k, nk in enumerate(data.element_counts):
        prog.add_matrix_var(f"Psi{k}", nk)
    prog.add_matrix_var("Phi", total + 1)
    P_exprs = [LinearExpr().add_matrix(v, A) for v, A in zip(data.var, data.xi_desired)]
    Q_exprs = [LinearExpr(constant=1.0).add_matrix(v, B) for v, B in zip(data.var, data.xi_total)]
    _fractional_program(prog, P_exprs, Q_exprs, data.alpha, data.eta, data.r_min, maxmin)
    for k, nk in enumerate(data.element_counts):
        for n in range(nk):
            p = data.global_index(k, n)
            if data.frozen_beta_t is None:
                row = LinearExpr(constant=-1.0)
                row.add_matrix(f"Psi{k}", _selector(nk, n))
                row.add_matrix("Phi", _selector(total + 1, p))
                prog.add(Constraint("eq", row, label=f"coupling[{k},{n}]"))
            else:
                bt = float(data.frozen_beta_t[k][n])
                prog.add(Constraint("fix", var=f"Psi{k}", index=(n, n), value=bt,
                                    label=f"beta_t[{k},{n}]"))
                prog.add(Constraint("fix", var="Phi", index=(p, p), value=1.0 - bt,
                                    label=f"beta_r[{k},{n}]"))
    prog.add(Constraint("fix", var="Phi", index=(total, total), value=1.0, label="homogenisation"))
    return prog.validate()


def bs_subproblem_data(network, profiles, aux, maxmin: bool = False) -> BsSubproblemData:
    scale = network.p_t / network.noise
    g_list = network.effective_channels(profiles)
    G = [scale * np.outer(g, g.conj()) for g in g_list]
    sigma = np.sqrt(network.noise)
    return BsSubproblemData(G, [u.stream for u in network.users], network.stream_count,
                            np.asarray(aux.alpha) if aux is not None else np.zeros(len(G)),
                            np.asarray(aux.eta) * sigma if aux is not None else np.zeros(len(G)),
                            network.r_min)


def ris_subproblem_data(network, beams, aux, frozen_beta_t=None) -> RisSubproblemData:
    w = beams / np.sqrt(network.noise)
    var, xd, xt = [], [], []
    for u, C in zip(network.users, network.cascades):
        Cw = C @ w.T                                  # (n, S), column i = H w_i
        var.append(f"Psi{u.ris}" if u.ris is not None else "Phi")
        xd.append(np.outer(Cw[:, u.stream], Cw[:, u.stream].conj()))
        xt.append(Cw @ Cw.conj().T)
    n_users = len(network.users)
    sigma = np.sqrt(network.noise)
    return RisSubproblemData(list(network.element_counts), var, xd, xt,
                             np.asarray(aux.alpha) if aux is not None else np.zeros(n_users),
                             np.asarray(aux.eta) * sigma if aux is not None else np.zeros(n_users),
                             network.r_min, frozen_beta_t)
