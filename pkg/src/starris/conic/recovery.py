"""Rank-one recovery from relaxed PSD solutions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


def extract_rank_one(M, tol_ratio: float = 1e-4, herm_tol: float = 1e-8):
    """Principal component ``sqrt(l1) u1`` of a Hermitian PSD matrix.

    Returns ``(vector, defect_ratio)`` with ``defect_ratio = l2/l1`` (0 for a
    1x1 or zero matrix).  ``tol_ratio`` is the caller's acceptance threshold;
    it is not applied here.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.conj().T)) > herm_tol * scale:
        raise ValueError("matrix is not Hermitian")
    lam, U = np.linalg.eigh((M + M.conj().T) / 2)
    l1 = max(lam[-1], 0.0)
    if l1 <= 0.0:
        return np.zeros(M.shape[0], dtype=complex), 0.0
    l2 = max(lam[-2], 0.0) if lam.size > 1 else 0.0
    return np.sqrt(l1) * U[:, -1], float(l2 / l1)


def complex_gaussian_sample(M, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` draws from CN(0, M), returned as rows."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    lam, U = np.linalg.eigh((M + M.conj().T) / 2)
    root = U * np.sqrt(np.clip(lam, 0.0, None))
    n = M.shape[0]
    z = (rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))) / np.sqrt(2)
    return z @ root.T


@dataclass
class RandomizationResult:
    candidate: object
    score: float
    index: int          # 0 = principal-eigenvector candidate
    feasible_count: int


def gaussian_randomization(matrices: Sequence[np.ndarray],
                           project: Callable[[list], object],
                           score: Callable[[object], float | None],
                           samples: int = 100,
                           seed: int = 0) -> RandomizationResult | None:
    """Best feasible projected candidate among the principal point and ``samples`` draws.

    ``project`` maps one vector per matrix to a feasible candidate; ``score``
    returns its objective, or None when the candidate fails the problem's
    checks.  Returns None if no candidate passes.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    draws = [complex_gaussian_sample(M, rng, samples) for M in matrices]
    best = None
    feasible = 0
    for idx in range(samples + 1):
        if idx == 0:
            vecs = [extract_rank_one(M)[0] for M in matrices]
        else:
            vecs = [d[idx - 1] for d in draws]
        cand = project(vecs)
        val = score(cand)
        if val is None or not np.isfinite(val):
            continue
        feasible += 1
        if best is None or val > best.score:
            best = RandomizationResult(cand, float(val), idx, 0)
    if best is not None:
        best.feasible_count = feasible
    return best
