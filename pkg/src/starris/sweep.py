"""Parameter sweeps over the reference scenario, written as CSV and SVG.

Along an axis the points are visited in the direction in which the feasible
set grows (power up, thresholds down) and, with ``continuation`` on, every
scheme also starts from its own solution at the previous point.  That point is
feasible at the next one, so the sweep cannot lose ground to a worse local
optimum.  The element axis has no such nesting; there the previous solution is
extended to the new elements (see ``_extend``), repaired if it violates a
threshold, and offered as one more start.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .bcd import SCHEMES, BcdConfig, compare_schemes, initial_profiles
from .network import Network
from .profile import StarRisProfile
from .scenario import ScenarioError, dbm_to_watts

log = logging.getLogger(__name__)

AXES = ("elements_per_ris", "transmit_power_dbm", "r2_threshold")
SEED_POLICIES = ("common", "independent")
CSV_COLUMNS = ("axis_value", "scheme", "trial", "seed", "sum_rate", "min_margin", "converged",
               "iterations", "status", "start")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    schemes: tuple = SCHEMES
    trials: int = 1
    seed_policy: str = "common"     # common: trial t uses seed+t at every point
    continuation: bool = True
    workers: int = 1

    def __post_init__(self):
        problems = []
        if self.axis not in AXES:
            problems.append(f"axis must be one of {AXES}, got {self.axis!r}")
        vals = [float(v) for v in self.values]
        if not vals:
            problems.append("values must not be empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            problems.append("values must be strictly increasing")
        if self.axis == "elements_per_ris" and any(v != int(v) or v < 1 for v in vals):
            problems.append("element counts must be positive integers")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            problems.append(f"schemes must be a non-empty subset of {SCHEMES}")
        if self.trials < 1:
            problems.append("trials must be >= 1")
        if self.seed_policy not in SEED_POLICIES:
            problems.append(f"seed_policy must be one of {SEED_POLICIES}")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if problems:
            raise ScenarioError(problems)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        version = d.pop("format_version", 1)
        if version != 1:
            raise ScenarioError(f"unsupported format_version {version}")
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ScenarioError(f"unknown sweep fields {sorted(unknown)}")
        if "axis" not in d or "values" not in d:
            raise ScenarioError("sweep needs 'axis' and 'values'")
        d["values"] = tuple(d["values"])
        if "schemes" in d:
            d["schemes"] = tuple(d["schemes"])
        return cls(**d)

    def order(self) -> list:
        """Visiting order: towards larger feasible sets."""
        idx = list(range(len(self.values)))
        return idx[::-1] if self.axis == "r2_threshold" else idx


def load_sweep(path) -> SweepSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: parse error: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: sweep document must be a mapping")
    return SweepSpec.from_dict(doc)


def scenario_at(scenario, axis: str, value: float):
    if axis == "elements_per_ris":
        return scenario.with_elements(int(value))
    if axis == "transmit_power_dbm":
        return scenario.replace(p_t_watts=dbm_to_watts(value))
    if axis == "r2_threshold":
        return scenario.with_thresholds(r_refl=2.0 * value, r_trans=value)   # 2:1 ratio
    raise ValueError(f"unknown axis {axis!r}")


@dataclass
class SweepRow:
    axis_value: float
    scheme: str
    trial: int
    seed: int
    sum_rate: float
    min_margin: float
    converged: bool
    iterations: int
    status: str
    start: str

    def csv_fields(self) -> list:
        return [_fmt(self.axis_value), self.scheme, str(self.trial), str(self.seed),
                _fmt(self.sum_rate), _fmt(self.min_margin), str(self.converged).lower(),
                str(self.iterations), self.status, self.start]


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    return f"{x:.12g}"


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")           # RFC 4180
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def series(self, scheme: str) -> tuple:
        """(axis values, mean sum rate over trials) for one scheme; failed points are nan."""
        xs = [float(v) for v in self.spec.values]
        ys = []
        for x in xs:
            vals = [r.sum_rate for r in self.rows if r.scheme == scheme and r.axis_value == x
                    and r.status in ("converged", "max_iters")]
            ys.append(float(np.mean(vals)) if vals else float("nan"))
        return xs, ys

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "sweep.csv"
        csv_path.write_bytes(self.to_csv().encode("utf-8"))
        svg_path = out / f"sweep_{self.spec.axis}.svg"
        plot_sweep(self, svg_path)
        return {"csv": csv_path, "svg": svg_path}


AXIS_LABELS = {
    "elements_per_ris": "Elements per STAR-RIS",
    "transmit_power_dbm": "Maximum transmit power (dBm)",
    "r2_threshold": "Transmission-side rate threshold R2 (bits/s/Hz)",
}


def plot_sweep(result: SweepResult, path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "starris", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        for scheme, marker in zip(result.spec.schemes, "osd^v"):
            xs, ys = result.series(scheme)
            ax.plot(xs, ys, marker=marker, label=scheme)
        ax.set_xlabel(AXIS_LABELS[result.spec.axis])
        ax.set_ylabel("Sum rate (bits/s/Hz)")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


EXTEND_PHASE_LEVELS = 16
EXTEND_PASSES = 2


def _extend(net: Network, kind: str, result) -> tuple | None:
    """Carry a solution to a surface with more elements.

    The old elements keep their coefficients (element channels are nested in
    the element count).  The new elements keep the heuristic split, and their
    phases are picked by coordinate search on the true sum rate with the beams
    held fixed.  Heuristic phases alone add interference at users whose
    interference was nulled, which costs tens of bits/s/Hz at high SINR.
    """
    if result is None or result.termination == "infeasible":
        return None
    fresh = initial_profiles(net, kind)
    profiles, new_elements = [], []
    for k, (old, new) in enumerate(zip(result.profiles, fresh)):
        n = old.element_count
        if n > new.element_count:
            return None
        profiles.append(StarRisProfile(
            np.concatenate([old.beta_r, new.beta_r[n:]]),
            np.concatenate([old.beta_t, new.beta_t[n:]]),
            np.concatenate([old.theta_r, new.theta_r[n:]]),
            np.concatenate([old.theta_t, new.theta_t[n:]])))
        new_elements += [(k, i) for i in range(n, new.element_count)]
    beams = result.beams

    def key():
        rep = net.evaluate(profiles, beams)
        return (min(rep.min_margin, 0.0), rep.sum_rate)     # feasibility first

    grid = 2 * np.pi * np.arange(EXTEND_PHASE_LEVELS) / EXTEND_PHASE_LEVELS
    for _ in range(EXTEND_PASSES):
        for k, i in new_elements:
            p = profiles[k]
            best = (key(), p.theta_r[i], p.theta_t[i])
            for tr in grid:
                for tt in grid:
                    p.theta_r[i], p.theta_t[i] = tr, tt
                    cand = key()
                    if cand > best[0]:
                        best = (cand, tr, tt)
            p.theta_r[i], p.theta_t[i] = best[1], best[2]
    return beams, profiles


def _run_chain(scenario, spec: SweepSpec, trial: int, indices: list) -> list:
    """One trial along the given point indices; returns (index, scheme, row) tuples."""
    seed = int(scenario.seed) + trial
    out = []
    previous = {}
    for i in indices:
        value = float(spec.values[i])
        if spec.seed_policy == "independent":
            seed = int(scenario.seed) + trial + 1000 * i
        sc = scenario_at(scenario, spec.axis, value).replace(seed=seed)
        try:
            net = Network(sc, seed=seed)
            cfg = BcdConfig.from_scenario(sc)
            starts = {}
            if spec.continuation:
                for scheme, res in previous.items():
                    start = (_extend(net, scheme, res) if spec.axis == "elements_per_ris"
                             else (None if res.termination == "infeasible"
                                   else (res.beams, res.profiles)))
                    if start is not None:
                        starts[scheme] = [("previous-point", *start)]
            results = compare_schemes(sc, cfg, spec.schemes, net, starts)
        except Exception as exc:                        # recorded, sweep continues
            log.warning("sweep point %s=%s trial %d failed: %s", spec.axis, value, trial, exc)
            for scheme in spec.schemes:
                out.append((i, scheme, SweepRow(value, scheme, trial, seed, float("nan"),
                                                float("nan"), False, 0,
                                                f"error: {type(exc).__name__}", "")))
            continue
        for scheme, res in results.items():
            previous[scheme] = res
            out.append((i, scheme, SweepRow(value, scheme, trial, seed, res.sum_rate,
                                            res.report.min_margin,
                                            res.termination == "converged", res.iterations,
                                            res.termination, res.start)))
    return out


def run_sweep(scenario, spec: SweepSpec, out_dir=None) -> SweepResult:
    """Evaluate every (point, scheme, trial); rows are ordered by point, scheme, trial."""
    order = spec.order()
    if spec.continuation:
        jobs = [(t, order) for t in range(spec.trials)]          # one chain per trial
    else:
        jobs = [(t, [i]) for t in range(spec.trials) for i in order]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            parts = list(pool.map(_run_chain, [scenario] * len(jobs), [spec] * len(jobs),
                                  [t for t, _ in jobs], [ix for _, ix in jobs]))
    else:
        parts = [_run_chain(scenario, spec, t, ix) for t, ix in jobs]
    scheme_pos = {s: k for k, s in enumerate(spec.schemes)}
    flat = [item for part in parts for item in part]
    flat.sort(key=lambda x: (x[0], scheme_pos[x[1]], x[2].trial))
    result = SweepResult(spec, [row for _, _, row in flat])
    if out_dir is not None:
        result.write(out_dir)
    return result


def spec_to_dict(spec: SweepSpec) -> dict:
    d = asdict(spec)
    d["values"] = list(d["values"])
    d["schemes"] = list(d["schemes"])
    return {"format_version": 1, **d}
