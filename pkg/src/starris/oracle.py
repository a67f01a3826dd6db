"""Independent references for tiny instances.

``brute_force_optimize`` enumerates a grid over surface splits/phases and
beam parameters and keeps the best QoS-feasible sum rate.  Two exact
reductions keep the grid small without approximating anything:

* Scaling every beam by ``c > 1`` raises every SINR, so the optimum spends
  the whole budget; beam powers are enumerated on the simplex ``sum p = P_T``.
* A common phase on all transmission coefficients of a surface only rotates
  the effective channels of its transmission users, so element 0 keeps
  ``theta_t = 0``.  A per-stream global phase is irrelevant for the same reason.

``received_signal_rate_check`` recomputes rates from the raw signal model
with explicit diagonal coefficient matrices, sharing no code with
:mod:`starris.rates`.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import build_channel_set
from .profile import StarRisProfile
from .rates import REFLECTION, users_of
from .scenario import scenario_from_dict

GRID_GUARD = 100_000_000


class GridTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    phase_levels: int = 16      # phases 2*pi*l/L, l = 0..L-1
    split_levels: int = 16      # beta_t on linspace(0, 1, L)
    power_levels: int = 16      # power fractions on the simplex with step 1/(L-1)

    def __post_init__(self):
        for name in ("phase_levels", "split_levels", "power_levels"):
            if int(getattr(self, name)) < 2:
                raise ValueError(f"{name} must be >= 2")

    def refined(self) -> "GridSpec":
        """A grid containing this one: phases doubled, linear axes 2L-1."""
        return GridSpec(2 * self.phase_levels, 2 * self.split_levels - 1,
                        2 * self.power_levels - 1)

    def phases(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.phase_levels) / self.phase_levels

    def splits(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.split_levels)


def _simplex(levels: int, parts: int) -> np.ndarray:
    """All ``parts``-tuples of multiples of 1/(levels-1) summing to one."""
    n = levels - 1
    rows = [c for c in itertools.product(range(n + 1), repeat=parts - 1) if sum(c) <= n]
    return np.array([list(c) + [n - sum(c)] for c in rows], dtype=float) / n


def _check_tiny(scenario) -> None:
    users = users_of(scenario)
    problems = []
    if scenario.bs.antenna_count > 2:
        problems.append("at most 2 BS antennas")
    if len(scenario.star_ris) > 1:
        problems.append("at most 1 surface")
    if any(r.element_count > 2 for r in scenario.star_ris):
        problems.append("at most 2 elements")
    if len(users) > 2:
        problems.append("at most 2 users")
    if problems:
        raise ValueError("scenario too large for the oracle: " + ", ".join(problems))


@dataclass
class GridResult:
    objective: float                 # best feasible sum rate (nan if none)
    beams: np.ndarray | None
    profiles: list | None
    evaluated: int
    feasible: int
    grid: GridSpec = field(default_factory=GridSpec)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective if math.isfinite(self.objective) else None,
            "evaluated": self.evaluated,
            "feasible": self.feasible,
            "grid": self.grid.__dict__,
            "beams": None if self.beams is None else
            [[[float(z.real), float(z.imag)] for z in w] for w in self.beams],
            "profiles": None if self.profiles is None else [p.to_records() for p in self.profiles],
        }


def _surface_configs(scenario, grid: GridSpec):
    """Yield profile lists covering the split/phase grid."""
    if not scenario.star_ris:
        yield []
        return
    n = scenario.star_ris[0].element_count
    has_t = bool(scenario.transmission_groups)
    has_r = bool(scenario.reflection_users)
    ph, sp = grid.phases(), grid.splits()
    zero = np.zeros(1)
    per_element = []
    for e in range(n):
        theta_t = ph if has_t and e > 0 else zero
        theta_r = ph if has_r else zero
        per_element.append(list(itertools.product(sp, theta_t, theta_r)))
    for combo in itertools.product(*per_element):
        bt = np.array([c[0] for c in combo])
        yield [StarRisProfile(1.0 - bt, bt, np.array([c[2] for c in combo]),
                              np.array([c[1] for c in combo]))]


def _beam_grid(n_antennas: int, streams: int, p_t: float, grid: GridSpec) -> np.ndarray:
    """All candidate beam sets, shape (M, S, N_0)."""
    fractions = _simplex(grid.power_levels, streams)                     # (F, S)
    if n_antennas == 1:
        return np.sqrt(p_t * fractions)[:, :, None].astype(complex)
    a = np.pi / 2 * grid.splits()                                       # power split angle
    dirs = np.array([[np.cos(x), np.sin(x) * np.exp(1j * p)]
                     for x in a for p in grid.phases()])                # (D, 2)
    idx = itertools.product(range(len(dirs)), repeat=streams)
    D = np.array([[dirs[i] for i in combo] for combo in idx])            # (D^S, S, 2)
    out = np.sqrt(p_t * fractions)[:, None, :, None] * D[None, :, :, :]
    return out.reshape(-1, streams, n_antennas)


def grid_size(scenario, grid: GridSpec) -> int:
    n_surf = 1
    if scenario.star_ris:
        n = scenario.star_ris[0].element_count
        has_t, has_r = bool(scenario.transmission_groups), bool(scenario.reflection_users)
        for e in range(n):
            n_surf *= grid.split_levels
            n_surf *= grid.phase_levels if has_t and e > 0 else 1
            n_surf *= grid.phase_levels if has_r else 1
    S = scenario.stream_count
    n_frac = math.comb(grid.power_levels - 2 + S, S - 1)
    n_dir = 1 if scenario.bs.antenna_count == 1 else (grid.split_levels * grid.phase_levels) ** S
    return n_surf * n_frac * n_dir


def brute_force_optimize(scenario, grid: GridSpec | None = None, channels=None) -> GridResult:
    """Exhaustive QoS-constrained sum-rate search on a tiny scenario."""
    grid = grid or GridSpec()
    _check_tiny(scenario)
    size = grid_size(scenario, grid)
    if size > GRID_GUARD:
        raise GridTooLarge(f"grid has {size} points (guard {GRID_GUARD})")
    channels = channels if channels is not None else build_channel_set(scenario, scenario.seed)
    users = users_of(scenario)
    streams = np.array([u.stream for u in users])
    r_min = np.array([u.r_min for u in users])
    noise = scenario.noise_power
    B = _beam_grid(scenario.bs.antenna_count, scenario.stream_count, scenario.p_t_watts, grid)

    best = (-np.inf, None, None)
    evaluated = feasible = 0
    for profiles in _surface_configs(scenario, grid):
        g = np.stack(_channels(scenario, channels, profiles))            # (U, N_0)
        gains = np.abs(np.einsum("msn,un->mus", B, g.conj())) ** 2       # (M, U, S)
        P = gains[:, np.arange(len(users)), streams]
        Q = gains.sum(axis=2) + noise
        rate = np.log2(Q / (Q - P))
        ok = np.all(rate >= r_min - 1e-12, axis=1)
        evaluated += len(B)
        feasible += int(ok.sum())
        if not ok.any():
            continue
        total = np.where(ok, rate.sum(axis=1), -np.inf)
        m = int(np.argmax(total))
        if total[m] > best[0]:
            best = (float(total[m]), B[m].copy(), profiles)
    obj, beams, profiles = best
    return GridResult(obj if np.isfinite(obj) else float("nan"), beams, profiles, evaluated,
                      feasible, grid)


def grid_slack(scenario, grid: GridSpec, channels=None) -> tuple:
    """(coarse result, refined result, measured slack) for one refinement step."""
    coarse = brute_force_optimize(scenario, grid, channels)
    fine = brute_force_optimize(scenario, grid.refined(), channels)
    return coarse, fine, max(fine.objective - coarse.objective, 0.0)


def _channels(scenario, channels, profiles) -> list:
    # effective channels via explicit diagonal matrices
    out = []
    for g, grp in enumerate(scenario.transmission_groups):
        k = grp.ris_index
        Theta = np.diag(profiles[k].v_t)
        for h in channels.ris_to_trans_user[g]:
            out.append((h.conj() @ Theta @ channels.bs_to_ris[k]).conj())
    for j in range(len(scenario.reflection_users)):
        row = channels.bs_to_refl_user[j].conj().astype(complex)
        for k, p in enumerate(profiles):
            row = row + channels.ris_to_refl_user[k][j].conj() @ np.diag(p.v_r) @ channels.bs_to_ris[k]
        out.append(row.conj())
    return out


def received_signal_rate_check(scenario, channels, profiles, beams) -> np.ndarray:
    """Per-user rates from the received-signal model, one explicit sum per stream."""
    users = users_of(scenario)
    beams = np.asarray(beams, dtype=complex)
    noise = scenario.noise_power
    rates = []
    for u in users:
        gains = []
        for w in beams:
            if u.side == REFLECTION:
                y = channels.bs_to_refl_user[u.group].conj() @ w
                for k, p in enumerate(profiles):
                    Theta_r = np.diag(p.v_r)
                    y = y + channels.ris_to_refl_user[k][u.group].conj() @ Theta_r @ channels.bs_to_ris[k] @ w
            else:
                Theta_t = np.diag(profiles[u.ris].v_t)
                h = channels.ris_to_trans_user[u.group][u.member]
                y = h.conj() @ Theta_t @ channels.bs_to_ris[u.ris] @ w
            gains.append(abs(y) ** 2)
        signal = gains[u.stream]
        interference = sum(gains) - signal
        rates.append(math.log2(1.0 + signal / (interference + noise)))
    return np.array(rates)


def single_user_capacity(scenario, channels=None) -> float:
    """``log2(1 + P_T max|g|^2 / noise)`` for a one-user scenario.

    Every path is co-phased at full amplitude and the beam is matched to the
    result.  Under line-of-sight the cascade rows are collinear, so the gain is
    the squared sum of path norms; with one antenna this holds for any mix of
    direct and surface paths.
    """
    users = users_of(scenario)
    if len(users) != 1:
        raise ValueError("closed form needs exactly one user")
    channels = channels if channels is not None else build_channel_set(scenario, scenario.seed)
    u = users[0]
    if u.side == REFLECTION:
        rows = [channels.bs_to_refl_user[0].conj()[None, :]]
        rows += [channels.ris_to_refl_user[k][0].conj()[:, None] * channels.bs_to_ris[k]
                 for k in range(len(scenario.star_ris))]
    else:
        rows = [channels.ris_to_trans_user[u.group][u.member].conj()[:, None]
                * channels.bs_to_ris[u.ris]]
    C = np.vstack(rows)
    s = np.linalg.svd(C, compute_uv=False)
    if len(s) > 1 and s[1] > 1e-9 * s[0]:
        raise ValueError("closed form needs collinear paths (one antenna or pure line of sight)")
    gain = float(np.sum(np.linalg.norm(C, axis=1))) ** 2
    return float(np.log2(1.0 + scenario.p_t_watts * gain / scenario.noise_power))


# --------------------------------------------------------------------------- fixtures

def load_fixture(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    doc["scenario_spec"] = scenario_from_dict(doc["scenario"])
    doc["grid_spec"] = GridSpec(**doc["grid"])
    return doc


def make_fixture(name: str, scenario, grid: GridSpec, note: str = "") -> dict:
    coarse, fine, slack = grid_slack(scenario, grid)
    return {
        "name": name,
        "note": note,
        "scenario": scenario.to_dict(),
        "grid": grid.__dict__,
        "grid_optimum": coarse.objective,
        "refined_optimum": fine.objective,
        "grid_slack": slack,
        "grid_point": coarse.to_dict(),
    }


def check_against_bcd(fixture: dict, config=None) -> dict:
    """Run the optimiser on a fixture and compare with the frozen grid optimum."""
    from .bcd import BcdConfig, bcd_optimize

    sc = fixture["scenario_spec"]
    cfg = config or BcdConfig.from_scenario(sc)
    res = bcd_optimize(sc, cfg)
    report = res.report
    ok_feasible = res.termination != "infeasible" and report.min_margin >= -1e-6
    bound = fixture["grid_optimum"] - fixture["grid_slack"]
    return {
        "name": fixture["name"],
        "bcd_sum_rate": res.sum_rate,
        "grid_optimum": fixture["grid_optimum"],
        "grid_slack": fixture["grid_slack"],
        "feasible": bool(ok_feasible),
        "passed": bool(ok_feasible and res.sum_rate >= bound - 1e-9),
        "termination": res.termination,
        "rates_direct": received_signal_rate_check(
            sc, build_channel_set(sc, sc.seed), res.profiles, res.beams).tolist(),
        "rates": report.rate.tolist(),
    }


__all__ = ["GRID_GUARD", "GridResult", "GridSpec", "GridTooLarge", "brute_force_optimize",
           "check_against_bcd", "grid_size", "grid_slack", "load_fixture",
           "make_fixture", "received_signal_rate_check", "single_user_capacity"]
