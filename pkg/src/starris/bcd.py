"""Block coordinate ascent over beams, surface coefficients and auxiliary variables."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .conic import (SolveSettings, bs_subproblem_data, build_bs_subproblem, build_ris_subproblem,
                    extract_rank_one, gaussian_randomization, ris_subproblem_data, solve)
from .conic.backend import FALLBACK_BACKEND, _backend_name
from .fractional import surrogate_objective
from .network import Network
from .profile import BASELINE_KINDS, StarRisProfile, baseline_profile, wrap_phase
from .rates import total_power

log = logging.getLogger(__name__)

SCHEMES = ("proposed",) + BASELINE_KINDS

_BLOCK_IDS = {"bs": 1, "ris": 2, "init-bs": 3, "init-ris": 4, "escape": 5}
ESCAPE_RESTARTS = 2


@dataclass(frozen=True)
class BcdConfig:
    epsilon: float = 1e-3
    max_outer_iterations: int = 50
    randomization_samples: int = 100
    defect_tol: float = 1e-4
    qos_tol: float = 1e-7
    feasibility_rounds: int = 6
    solver: SolveSettings = field(default_factory=SolveSettings)
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")

    @classmethod
    def from_scenario(cls, scenario, **overrides) -> "BcdConfig":
        b, s = scenario.bcd, scenario.solver
        kw = dict(epsilon=b.epsilon, max_outer_iterations=b.max_outer_iterations,
                  randomization_samples=b.randomization_samples, defect_tol=b.defect_tol,
                  qos_tol=b.qos_tol, feasibility_rounds=b.feasibility_rounds,
                  solver=SolveSettings(tol=s.tol, max_iter=s.max_iter, backend=s.backend),
                  seed=scenario.seed)
        kw.update(overrides)
        return cls(**kw)


@dataclass
class BlockRecord:
    block: str
    status: str
    accepted: bool
    previous_objective: float
    sdp_objective: float = float("nan")
    rank_one_objective: float = float("nan")
    defects: list = field(default_factory=list)
    candidate_index: int = -1
    feasible_candidates: int = 0
    retried: bool = False

    @property
    def recovery_ratio(self) -> float:
        if not np.isfinite(self.sdp_objective) or self.sdp_objective == 0:
            return float("nan")
        return self.rank_one_objective / self.sdp_objective

    def to_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in self.__dict__.items()}


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    sum_rate: float
    rel_change: float
    margins: list
    blocks: list
    aux: dict
    wall_time: float

    def to_dict(self) -> dict:
        d = {k: _jsonable(v) for k, v in self.__dict__.items() if k != "blocks"}
        d["blocks"] = [b.to_dict() for b in self.blocks]
        return d


@dataclass
class InitResult:
    beams: np.ndarray
    profiles: list
    feasible: bool
    min_margin: float
    binding_users: list = field(default_factory=list)
    rounds: int = 0
    blocks: list = field(default_factory=list)


@dataclass
class OptimizationResult:
    scheme: str
    beams: np.ndarray
    profiles: list
    report: object
    trace: list
    termination: str            # converged | max_iters | infeasible
    initial_sum_rate: float = float("nan")
    binding_users: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    start: str = "heuristic"
    alternatives: dict = field(default_factory=dict)
    numerical_failure: bool = False     # every subproblem solve failed numerically

    @property
    def sum_rate(self) -> float:
        return float(self.report.sum_rate)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def objective_history(self) -> list:
        return [self.initial_sum_rate] + [r.objective for r in self.trace]

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "scheme": self.scheme,
            "termination": self.termination,
            "sum_rate": self.sum_rate,
            "initial_sum_rate": _jsonable(self.initial_sum_rate),
            "iterations": self.iterations,
            "start": self.start,
            "alternatives": _jsonable(self.alternatives),
            "numerical_failure": self.numerical_failure,
            "rates": self.report.to_dict()["users"],
            "binding_users": list(self.binding_users),
            "total_power": total_power(self.beams),
            "beams": [[[float(z.real), float(z.imag)] for z in w] for w in self.beams],
            "profiles": [p.to_records() for p in self.profiles],
            "trace": [r.to_dict() for r in self.trace],
        }
        if include_timing:
            d["timings"] = dict(self.timings)
        else:
            for rec in d["trace"]:
                rec.pop("wall_time", None)
        return d


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


# --------------------------------------------------------------------------- helpers

def _rates(P, Q):
    return np.log2(Q / (Q - P))


def _qos_ok(net: Network, P, Q, tol: float) -> bool:
    return bool(np.all(_rates(P, Q) >= net.r_min - tol))


def _min_margin(net: Network, P, Q) -> float:
    m = _rates(P, Q) - net.r_min
    return float(m.min()) if m.size else 0.0


def _solve_with_retry(prog, settings: SolveSettings):
    sol = solve(prog, settings)
    if sol.ok:
        return sol, False
    tighter = SolveSettings(tol=settings.tol, max_iter=2 * settings.max_iter,
                            solver_eps=settings.solver_eps * 1e-2, backend=settings.backend)
    sol = solve(prog, tighter)
    if sol.ok or _backend_name(settings) == FALLBACK_BACKEND:
        return sol, True
    # second opinion from a different interior-point code
    other = SolveSettings(tol=settings.tol, max_iter=2 * settings.max_iter,
                          solver_eps=settings.solver_eps, backend=FALLBACK_BACKEND)
    return solve(prog, other), True


def _project_beams(p_t: float):
    def project(vecs):
        B = np.stack([np.asarray(v, dtype=complex) for v in vecs])
        p = total_power(B)
        if p > p_t:
            B = B * np.sqrt(p_t / p)
        return B
    return project


def _project_profiles(net: Network, frozen_beta_t=None):
    """Map (theta_0..theta_{K-1}, phi) to surface profiles satisfying the coupling."""
    K = net.surface_count

    def project(vecs):
        phi = np.asarray(vecs[K], dtype=complex)
        last = phi[-1]
        phi = phi / last if abs(last) > 1e-300 else phi
        profiles = []
        for k in range(K):
            v_t = np.conj(np.asarray(vecs[k], dtype=complex))
            v_r = np.conj(phi[net.offsets[k]:net.offsets[k + 1]])
            if frozen_beta_t is None:
                norm = np.sqrt(np.abs(v_t) ** 2 + np.abs(v_r) ** 2)
                dead = norm == 0
                norm[dead] = 1.0
                a_t, a_r = np.abs(v_t) / norm, np.abs(v_r) / norm
                a_t[dead] = a_r[dead] = np.sqrt(0.5)
                beta_t = a_t**2
            else:
                beta_t = np.asarray(frozen_beta_t[k], float)
            profiles.append(StarRisProfile(1.0 - beta_t, beta_t,
                                           wrap_phase(np.angle(v_r)), wrap_phase(np.angle(v_t))))
        return profiles
    return project


def _rng_seed(cfg: BcdConfig, iteration: int, block: str):
    return [int(cfg.seed), int(iteration), _BLOCK_IDS[block]]


# --------------------------------------------------------------------------- blocks

def _bs_block(net, profiles, beams, aux, cfg, iteration, maxmin=False):
    """Returns (new beams or None, BlockRecord)."""
    name = "init-bs" if maxmin else "bs"
    if maxmin:
        P0, Q0 = net.power_pairs(profiles, beams)
        current = _min_margin(net, P0, Q0)
    else:
        current = net.surrogate(profiles, beams, aux)
    prog = build_bs_subproblem(bs_subproblem_data(net, profiles, aux), maxmin=maxmin)
    sol, retried = _solve_with_retry(prog, cfg.solver)
    rec = BlockRecord(name, sol.status, False, current, sol.objective, retried=retried)
    if not sol.ok:
        return None, rec
    Ws = [sol.values[f"W{i}"] * net.p_t for i in range(net.stream_count)]
    rec.defects = [extract_rank_one(W)[1] for W in Ws]
    g_list = net.effective_channels(profiles)

    def score(B):
        P, Q = net.power_pairs(profiles, B, g_list)
        if maxmin:
            return _min_margin(net, P, Q)
        if not _qos_ok(net, P, Q, cfg.qos_tol):
            return None
        return surrogate_objective(P, Q, aux.alpha, aux.eta)

    samples = cfg.randomization_samples
    if max(rec.defects, default=0.0) <= cfg.defect_tol:
        best = gaussian_randomization(Ws, _project_beams(net.p_t), score, samples=1,
                                      seed=_rng_seed(cfg, iteration, name))
        if best is not None and best.index != 0:
            best = None
        if best is None:
            best = gaussian_randomization(Ws, _project_beams(net.p_t), score, samples=samples,
                                          seed=_rng_seed(cfg, iteration, name))
    else:
        best = gaussian_randomization(Ws, _project_beams(net.p_t), score, samples=samples,
                                      seed=_rng_seed(cfg, iteration, name))
    if best is None:
        rec.status = "no-feasible-candidate"
        return None, rec
    rec.rank_one_objective = best.score
    rec.candidate_index = best.index
    rec.feasible_candidates = best.feasible_count
    if best.score >= current:
        rec.accepted = True
        return best.candidate, rec
    return None, rec


def _ris_block(net, profiles, beams, aux, cfg, iteration, frozen_beta_t=None, maxmin=False):
    name = "init-ris" if maxmin else "ris"
    if maxmin:
        P0, Q0 = net.power_pairs(profiles, beams)
        current = _min_margin(net, P0, Q0)
    else:
        current = net.surrogate(profiles, beams, aux)
    data = ris_subproblem_data(net, beams, aux, frozen_beta_t)
    prog = build_ris_subproblem(data, maxmin=maxmin)
    sol, retried = _solve_with_retry(prog, cfg.solver)
    rec = BlockRecord(name, sol.status, False, current, sol.objective, retried=retried)
    if not sol.ok:
        return None, rec
    mats = [sol.values[f"Psi{k}"] for k in range(net.surface_count)] + [sol.values["Phi"]]
    rec.defects = [extract_rank_one(M)[1] for M in mats]

    def score(profs):
        P, Q = net.power_pairs(profs, beams)
        if maxmin:
            return _min_margin(net, P, Q)
        if not _qos_ok(net, P, Q, cfg.qos_tol):
            return None
        return surrogate_objective(P, Q, aux.alpha, aux.eta)

    project = _project_profiles(net, frozen_beta_t)
    seed = _rng_seed(cfg, iteration, name)
    best = None
    if max(rec.defects, default=0.0) <= cfg.defect_tol:
        best = gaussian_randomization(mats, project, score, samples=1, seed=seed)
        if best is not None and best.index != 0:
            best = None
    if best is None:
        best = gaussian_randomization(mats, project, score, samples=cfg.randomization_samples,
                                      seed=seed)
    if best is None:
        rec.status = "no-feasible-candidate"
        return None, rec
    rec.rank_one_objective = best.score
    rec.candidate_index = best.index
    rec.feasible_candidates = best.feasible_count
    if best.score >= current:
        rec.accepted = True
        return best.candidate, rec
    return None, rec


# --------------------------------------------------------------------------- initialisation

def _dominant_direction(H: np.ndarray) -> np.ndarray:
    _, _, vh = np.linalg.svd(H)
    return vh[0].conj()


def initial_profiles(net: Network, kind: str = "proposed") -> list:
    """Equal split (or the baseline amplitudes) with co-phased elements.

    Transmission phases co-phase each surface's cascade towards the first
    member of its group; reflection phases co-phase towards the first
    reflection user and align with that user's direct path.
    """
    sc = net.scenario
    ch = net.channels
    group_of = {grp.ris_index: g for g, grp in enumerate(sc.transmission_groups)}
    profiles = []
    for k, nk in enumerate(net.element_counts):
        H = ch.bs_to_ris[k]
        u_k = _dominant_direction(H)
        theta_t = np.zeros(nk)
        if k in group_of:
            h = ch.ris_to_trans_user[group_of[k]][0]
            c = h.conj() * (H @ u_k)
            theta_t = -np.angle(c)
        theta_r = np.zeros(nk)
        if sc.reflection_users:
            h0 = ch.bs_to_refl_user[0]
            direct_dir = h0 / np.linalg.norm(h0)
            direct = h0.conj() @ direct_dir
            c = ch.ris_to_refl_user[k][0].conj() * (H @ direct_dir)
            theta_r = np.angle(direct) - np.angle(c)
        if kind == "proposed":
            base = baseline_profile("fixed_55", nk, theta_t, theta_r)
        else:
            base = baseline_profile(kind, nk, theta_t, theta_r)
        profiles.append(base)
    return profiles


def initial_beams(net: Network, profiles) -> np.ndarray:
    """Matched filter to each stream's first user, equal power split."""
    g_list = net.effective_channels(profiles)
    first = {}
    for u, g in zip(net.users, g_list):
        first.setdefault(u.stream, g)
    S = net.stream_count
    B = np.zeros((S, net.n_antennas), dtype=complex)
    for i in range(S):
        g = first.get(i)
        if g is None or np.linalg.norm(g) == 0:
            B[i, 0] = 1.0
        else:
            B[i] = g / np.linalg.norm(g)
    return B * np.sqrt(net.p_t / S)


def initialize_feasible(net: Network, cfg: BcdConfig, kind: str = "proposed",
                        start=None) -> InitResult:
    """Heuristic start (or ``start``), repaired by alternating max-min QoS-slack
    relaxations when it violates a threshold."""
    if start is None:
        profiles = initial_profiles(net, kind)
        beams = initial_beams(net, profiles)
    else:
        beams, profiles = start
        beams = _project_beams(net.p_t)(list(beams))
    frozen = None if kind == "proposed" else [p.beta_t for p in profiles]
    P, Q = net.power_pairs(profiles, beams)
    margin = _min_margin(net, P, Q)
    blocks = []
    rounds = 0
    while margin < 0 and rounds < cfg.feasibility_rounds:
        rounds += 1
        new, rec = _bs_block(net, profiles, beams, None, cfg, 10_000 + rounds, maxmin=True)
        blocks.append(rec)
        if new is not None:
            beams = new
        P, Q = net.power_pairs(profiles, beams)
        margin = _min_margin(net, P, Q)
        if margin >= 0 or net.surface_count == 0:
            if net.surface_count == 0 and margin < 0 and rec.sdp_objective < 0:
                break
            continue
        new, rec = _ris_block(net, profiles, beams, None, cfg, 10_000 + rounds, frozen, maxmin=True)
        blocks.append(rec)
        if new is not None:
            profiles = new
        P, Q = net.power_pairs(profiles, beams)
        margin = _min_margin(net, P, Q)
    rates_ = _rates(P, Q)
    binding = [u.label for u, r in zip(net.users, rates_) if r < u.r_min]
    return InitResult(beams, profiles, margin >= 0, margin, binding, rounds, blocks)


# --------------------------------------------------------------------------- main loop

def _stalled_at_start(res: OptimizationResult) -> bool:
    """First iteration accepted nothing: the start is a fixed point of the block updates."""
    return (res.termination == "converged" and len(res.trace) == 1
            and not any(b.accepted for b in res.trace[0].blocks))


def _perturbed_power(net: Network, beams: np.ndarray, cfg: BcdConfig, attempt: int):
    """Same beam directions, power redistributed over streams by a seeded Dirichlet draw."""
    rng = np.random.default_rng([int(cfg.seed), attempt, _BLOCK_IDS["escape"]])
    w = rng.dirichlet(np.ones(len(beams)))
    norms = np.linalg.norm(beams, axis=1, keepdims=True)
    dirs = np.divide(beams, norms, out=np.zeros_like(beams), where=norms > 0)
    return dirs * np.sqrt(w * total_power(beams))[:, None]


def _run(net: Network, cfg: BcdConfig, kind: str, start=None, escape: bool = True
         ) -> OptimizationResult:
    """One BCD run.  If the start turns out to be stationary (e.g. the symmetric
    equal-power point, a saddle of the sum rate), it is retried from seeded
    power redistributions and the best end point is kept."""
    res = _run_once(net, cfg, kind, start)
    if not (escape and _stalled_at_start(res) and net.stream_count > 1):
        return res
    results = [res]
    for attempt in range(1, ESCAPE_RESTARTS + 1):
        beams = _perturbed_power(net, res.beams, cfg, attempt)
        r = _run_once(net, cfg, kind, (beams, res.profiles))
        log.info("stationary start, restart %d: %.6f -> %.6f", attempt, res.sum_rate, r.sum_rate)
        results.append(r)
    best = _best(results)
    best.timings["total"] = sum(r.timings.get("total", 0.0) for r in results)
    return best


def _run_once(net: Network, cfg: BcdConfig, kind: str, start=None) -> OptimizationResult:
    t0 = time.perf_counter()
    frozen = None
    init = initialize_feasible(net, cfg, kind, start)
    if not init.feasible:
        report = net.evaluate(init.profiles, init.beams)
        failed = bool(init.blocks) and all(b.status == "numerical-failure" for b in init.blocks)
        return OptimizationResult(kind, init.beams, init.profiles, report, [], "infeasible",
                                  report.sum_rate, init.binding_users,
                                  {"total": time.perf_counter() - t0}, numerical_failure=failed)
    beams, profiles = init.beams, init.profiles
    if kind != "proposed":
        frozen = [p.beta_t for p in profiles]
    t_init = time.perf_counter() - t0

    aux = net.auxiliary(profiles, beams)
    f_prev = net.surrogate(profiles, beams, aux)
    initial = f_prev
    bound = net.rate_upper_bound()
    trace = []
    termination = "max_iters"
    for n in range(1, cfg.max_outer_iterations + 1):
        t_it = time.perf_counter()
        new_beams, rec_bs = _bs_block(net, profiles, beams, aux, cfg, n)
        if new_beams is not None:
            beams = new_beams
        new_profiles, rec_ris = _ris_block(net, profiles, beams, aux, cfg, n, frozen)
        if new_profiles is not None:
            profiles = new_profiles
        aux = net.auxiliary(profiles, beams)
        f = net.surrogate(profiles, beams, aux)
        if f > bound * (1 + 1e-9):
            raise RuntimeError(f"objective {f} exceeds the capacity bound {bound}")
        rel = abs(f - f_prev) / abs(f_prev) if f_prev != 0 else abs(f - f_prev)
        report = net.evaluate(profiles, beams)
        trace.append(IterationRecord(n, f, report.sum_rate, rel, report.margin.tolist(),
                                     [rec_bs, rec_ris], aux.to_dict(),
                                     time.perf_counter() - t_it))
        log.debug("iteration %d: f=%.6f rel=%.3g", n, f, rel)
        f_prev = f
        # a block that failed to solve has not shown that no ascent is left
        block_failed = any(b.status == "numerical-failure" for b in (rec_bs, rec_ris))
        if rel <= cfg.epsilon and (not block_failed or rel == 0.0):
            termination = "converged"
            break
    report = net.evaluate(profiles, beams)
    blocks = [b for it in trace for b in it.blocks]
    failed = bool(blocks) and all(b.status == "numerical-failure" for b in blocks)
    return OptimizationResult(kind, beams, profiles, report, trace, termination, initial, [],
                              {"init": t_init, "total": time.perf_counter() - t0},
                              numerical_failure=failed)


def _best(results: list) -> OptimizationResult:
    feasible = [r for r in results if r.termination != "infeasible"]
    if not feasible:
        return results[0]
    return max(feasible, key=lambda r: r.sum_rate)   # first wins ties


def _multi_start(net, cfg, kind, starts) -> OptimizationResult:
    """Built-in start plus every ``(label, beams, profiles)`` in ``starts``; best end point wins."""
    results = [_run(net, cfg, kind, None)]
    results[0].start = "heuristic"
    for label, beams, profiles in starts or ():
        r = _run(net, cfg, kind, (beams, profiles))
        r.start = label
        results.append(r)
    best = _best(results)
    best.timings["total"] = sum(r.timings.get("total", 0.0) for r in results)
    best.alternatives = {r.start: (r.sum_rate if r.termination != "infeasible" else None)
                         for r in results}
    return best


def bcd_optimize(scenario, config: BcdConfig | None = None, network: Network | None = None,
                 start=None, starts=None) -> OptimizationResult:
    """Jointly optimise beams and surface coefficients (splits and phases).

    ``start`` supplies a ``(beams, profiles)`` pair to begin from instead of
    the built-in initialiser (repaired first if it violates a threshold).
    ``starts`` adds labelled extra starting points; the run from each is
    carried to convergence and the best end point is returned.
    """
    config = config or BcdConfig.from_scenario(scenario)
    net = network or Network(scenario, seed=config.seed)
    if starts:
        return _multi_start(net, config, "proposed", starts)
    return _run(net, config, "proposed", start)


def _check_baseline_start(kind, profiles):
    for p in profiles:
        if not np.allclose(p.beta_t, baseline_profile(kind, p.element_count).beta_t):
            raise ValueError("warm start amplitudes do not match the baseline")


def run_baseline(scenario, config: BcdConfig | None = None, kind: str = "fixed_55",
                 network: Network | None = None, start=None, starts=None) -> OptimizationResult:
    """Same loop with the surface amplitudes frozen to a baseline split; phases stay free."""
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline {kind!r}")
    config = config or BcdConfig.from_scenario(scenario)
    net = network or Network(scenario, seed=config.seed)
    if start is not None:
        _check_baseline_start(kind, start[1])
    for _, _, profiles in starts or ():
        _check_baseline_start(kind, profiles)
    if starts:
        return _multi_start(net, config, kind, starts)
    return _run(net, config, kind, start)


def run_scheme(scenario, scheme: str, config: BcdConfig | None = None,
               network: Network | None = None, start=None, starts=None) -> OptimizationResult:
    if scheme == "proposed":
        return bcd_optimize(scenario, config, network, start, starts)
    return run_baseline(scenario, config, scheme, network, start, starts)


def compare_schemes(scenario, config: BcdConfig | None = None, schemes=SCHEMES,
                    network: Network | None = None, starts: dict | None = None) -> dict:
    """Run several schemes on one scenario.

    Baselines run first.  The proposed scheme's feasible set contains every
    baseline's, so their end points are added to its starting points.
    ``starts`` maps a scheme to extra labelled starts (e.g. the neighbouring
    sweep point).
    """
    unknown = [s for s in schemes if s not in SCHEMES]
    if unknown:
        raise ValueError(f"unknown schemes {unknown}")
    config = config or BcdConfig.from_scenario(scenario)
    net = network or Network(scenario, seed=config.seed)
    starts = starts or {}
    out = {}
    for scheme in [s for s in schemes if s != "proposed"]:
        out[scheme] = run_scheme(scenario, scheme, config, net, starts=starts.get(scheme) or [])
    if "proposed" in schemes:
        extra = list(starts.get("proposed") or [])
        extra += [(s, r.beams, r.profiles) for s, r in out.items() if r.termination != "infeasible"]
        out["proposed"] = bcd_optimize(scenario, config, net, starts=extra)
    return {s: out[s] for s in schemes}
