"""Lagrangian-dual and quadratic transforms of the sum-rate objective.

The surrogate is evaluated in nats and reported in bits, i.e.

    f = (1/ln 2) * sum_u [ ln(1+a_u) - a_u + 2 e_u sqrt((1+a_u) P_u) - e_u^2 Q_u ]

With the natural log the closed-form ``a_u = P_u/(Q_u-P_u)`` is the exact
maximiser over ``a_u``, so the surrogate never exceeds the true sum rate and
equals it after the closed-form updates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN2 = np.log(2.0)


@dataclass
class AuxiliaryState:
    alpha: np.ndarray
    eta: np.ndarray

    def to_dict(self) -> dict:
        return {"alpha": [float(a) for a in self.alpha], "eta": [float(e) for e in self.eta]}


def power_pair(g, beams, desired_stream: int, noise_power: float):
    """Desired-signal power ``P`` and total received power ``Q`` of one user."""
    if not noise_power > 0:
        raise ValueError(f"noise power must be positive, got {noise_power}")
    gains = np.abs(np.atleast_2d(beams) @ np.conj(g)) ** 2
    return float(gains[desired_stream]), float(gains.sum() + noise_power)


def update_alpha(P: float, Q: float) -> float:
    if not (P >= 0 and Q > P):
        raise ValueError(f"need Q > P >= 0, got P={P}, Q={Q}")
    return P / (Q - P)


def update_eta(P: float, Q: float, alpha: float) -> float:
    if not Q > 0:
        raise ValueError(f"need Q > 0, got {Q}")
    if P < 0 or alpha < 0:
        raise ValueError(f"need P >= 0 and alpha >= 0, got P={P}, alpha={alpha}")
    return np.sqrt((1.0 + alpha) * P) / Q


def update_auxiliary(P, Q) -> AuxiliaryState:
    alpha = np.array([update_alpha(p, q) for p, q in zip(P, Q)])
    eta = np.array([update_eta(p, q, a) for p, q, a in zip(P, Q, alpha)])
    return AuxiliaryState(alpha, eta)


def surrogate_terms(P, Q, alpha, eta) -> np.ndarray:
    """Per-user surrogate values in bits."""
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    alpha, eta = np.asarray(alpha, float), np.asarray(eta, float)
    if not (P.shape == Q.shape == alpha.shape == eta.shape):
        raise ValueError("P, Q, alpha, eta must have equal lengths")
    if np.any(P < 0):
        raise ValueError("negative signal power")
    if np.any(Q <= 0):
        raise ValueError("total received power must be positive")
    # -alpha + 2 eta sqrt((1+alpha) P) - eta^2 Q, completed to a square so that
    # the large terms cancel exactly at the closed-form point (SINR up to ~1e9)
    root = np.sqrt((1.0 + alpha) * P)
    nats = np.log1p(alpha) + (P - alpha * (Q - P)) / Q - Q * (eta - root / Q) ** 2
    return nats / LN2


def surrogate_objective(P, Q, alpha, eta) -> float:
    return float(np.sum(surrogate_terms(P, Q, alpha, eta)))
