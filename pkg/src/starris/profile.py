"""Energy-splitting STAR-RIS coefficient state and the fixed baseline configurations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

TWO_PI = 2 * np.pi

BASELINE_KINDS = ("fixed_55", "fixed_37", "refl_trans_only")


class ConstraintError(ValueError):
    """Raised when coefficients break the energy-splitting coupling."""


class ElementCoefficients(NamedTuple):
    beta_r: float
    beta_t: float
    theta_r: float
    theta_t: float


@dataclass(frozen=True)
class StarRisProfile:
    """Coefficients of one surface.  ``v_t``/``v_r`` are derived from the splits and phases."""

    beta_r: np.ndarray
    beta_t: np.ndarray
    theta_r: np.ndarray
    theta_t: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float).ravel() for a in
                  (self.beta_r, self.beta_t, self.theta_r, self.theta_t)]
        n = {a.size for a in arrays}
        if len(n) != 1:
            raise ValueError("beta/theta arrays must share one length")
        for name, a in zip(("beta_r", "beta_t", "theta_r", "theta_t"), arrays):
            object.__setattr__(self, name, a)

    @property
    def element_count(self) -> int:
        return self.beta_r.size

    @property
    def v_t(self) -> np.ndarray:
        return np.sqrt(np.clip(self.beta_t, 0.0, None)) * np.exp(1j * self.theta_t)

    @property
    def v_r(self) -> np.ndarray:
        return np.sqrt(np.clip(self.beta_r, 0.0, None)) * np.exp(1j * self.theta_r)

    def element(self, n: int) -> ElementCoefficients:
        return ElementCoefficients(float(self.beta_r[n]), float(self.beta_t[n]),
                                   float(self.theta_r[n]), float(self.theta_t[n]))

    def to_records(self) -> list[list[float]]:
        return [list(self.element(n)) for n in range(self.element_count)]

    @classmethod
    def from_records(cls, records) -> "StarRisProfile":
        arr = np.asarray(records, dtype=float).reshape(-1, 4)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_es(profiles, tol: float = 1e-9) -> ValidationReport:
    """Check amplitude bounds, unit-sum coupling and phase range of every element.

    ``profiles`` is one StarRisProfile or a sequence of them; violations are
    reported as ``(surface, element, kind, value)``.
    """
    if isinstance(profiles, StarRisProfile):
        profiles = [profiles]
    report = ValidationReport()
    for k, prof in enumerate(profiles):
        for n in range(prof.element_count):
            br, bt, tr, tt = prof.element(n)
            for kind, b in (("beta_r", br), ("beta_t", bt)):
                if not (-tol <= b <= 1 + tol):
                    report.violations.append((k, n, f"{kind} outside [0,1]", b))
            if abs(br + bt - 1.0) > tol:
                report.violations.append((k, n, "beta_r + beta_t != 1", br + bt))
            for kind, th in (("theta_r", tr), ("theta_t", tt)):
                if not (0.0 <= th < TWO_PI):
                    report.violations.append((k, n, f"{kind} outside [0, 2pi)", th))
    return report


def wrap_phase(theta) -> np.ndarray:
    out = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # mod can return exactly 2pi for tiny negative inputs
    out[out >= TWO_PI] = 0.0
    return out


def profile_from_vectors(v_t, v_r, tol: float = 1e-9) -> StarRisProfile:
    """Recover splits and phases from complex coefficient vectors."""
    v_t = np.atleast_1d(np.asarray(v_t, dtype=complex))
    v_r = np.atleast_1d(np.asarray(v_r, dtype=complex))
    if v_t.shape != v_r.shape:
        raise ValueError(f"v_t and v_r lengths differ: {v_t.shape} vs {v_r.shape}")
    beta_t = np.abs(v_t) ** 2
    beta_r = np.abs(v_r) ** 2
    err = np.abs(beta_t + beta_r - 1.0)
    if err.size and err.max() > tol:
        n = int(np.argmax(err))
        raise ConstraintError(
            f"energy coupling violated at element {n}: beta_t + beta_r = {beta_t[n] + beta_r[n]:.6g}")
    return StarRisProfile(beta_r, beta_t, wrap_phase(np.angle(v_r)), wrap_phase(np.angle(v_t)))


def baseline_profile(kind: str, element_count: int, theta_t=None, theta_r=None) -> StarRisProfile:
    """Fixed-amplitude baseline surface; phases default to zero.

    refl_trans_only uses 1-based element numbering: odd elements reflect,
    even elements transmit.
    """
    n = int(element_count)
    if kind == "fixed_55":
        beta_t = np.full(n, 0.5)
    elif kind == "fixed_37":
        beta_t = np.full(n, 0.3)
    elif kind == "refl_trans_only":
        one_based = np.arange(1, n + 1)
        beta_t = (one_based % 2 == 0).astype(float)
    else:
        raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
    theta_t = np.zeros(n) if theta_t is None else wrap_phase(theta_t)
    theta_r = np.zeros(n) if theta_r is None else wrap_phase(theta_r)
    return StarRisProfile(1.0 - beta_t, beta_t, theta_r, theta_t)
