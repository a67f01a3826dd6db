"""Scenario description, YAML loading and validation."""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

FORMAT_VERSION = 1

DEFAULT_SCENARIO = Path(__file__).with_name("data") / "reference.scenario"


class ScenarioError(ValueError):
    """Validation failure; ``problems`` lists every offending field."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def dbw_to_watts(dbw: float) -> float:
    return 10.0 ** (dbw / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * np.log10(watts) + 30.0


_POWER_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(w|mw|dbm|dbw)\s*$", re.IGNORECASE)


def parse_power(value) -> float:
    """Parse ``"0.1 W"``, ``"20 dBm"``, ``"-10 dBW"`` or ``"100 mW"`` to watts."""
    if isinstance(value, (int, float)):
        return float(value)
    m = _POWER_RE.match(str(value))
    if not m:
        raise ScenarioError(f"cannot parse power {value!r}; use a unit suffix W, mW, dBm or dBW")
    x, unit = float(m.group(1)), m.group(2).lower()
    return {"w": x, "mw": x * 1e-3, "dbm": dbm_to_watts(x), "dbw": dbw_to_watts(x)}[unit]


@dataclass(frozen=True)
class BaseStation:
    position: tuple
    antenna_count: int
    spacing: float = 0.5


@dataclass(frozen=True)
class StarRis:
    position: tuple
    element_count: int
    spacing: float = 0.5


@dataclass(frozen=True)
class ReflectionUser:
    position: tuple
    r_min: float


@dataclass(frozen=True)
class TransmissionGroup:
    ris_index: int
    r_min: float
    positions: tuple


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-6
    max_iter: int = 500
    backend: str | None = None


@dataclass(frozen=True)
class BcdSettings:
    epsilon: float = 1e-3
    max_outer_iterations: int = 50
    randomization_samples: int = 100
    defect_tol: float = 1e-4
    qos_tol: float = 1e-7
    feasibility_rounds: int = 6


@dataclass(frozen=True)
class ScenarioSpec:
    bs: BaseStation
    star_ris: tuple
    reflection_users: tuple
    transmission_groups: tuple
    p_t_watts: float
    noise_dbw: float = -140.0
    pathloss_ref_db: float = -20.0
    seed: int = 0
    random_link_phase: bool = False
    solver: SolverSettings = field(default_factory=SolverSettings)
    bcd: BcdSettings = field(default_factory=BcdSettings)

    @property
    def noise_power(self) -> float:
        return dbw_to_watts(self.noise_dbw)

    @property
    def stream_count(self) -> int:
        return len(self.transmission_groups) + len(self.reflection_users)

    def replace(self, **changes) -> "ScenarioSpec":
        return dataclasses.replace(self, **changes)

    def with_elements(self, n: int) -> "ScenarioSpec":
        return self.replace(star_ris=tuple(dataclasses.replace(r, element_count=int(n))
                                           for r in self.star_ris))

    def with_thresholds(self, r_refl: float | None = None, r_trans: float | None = None):
        users, groups = self.reflection_users, self.transmission_groups
        if r_refl is not None:
            users = tuple(dataclasses.replace(u, r_min=float(r_refl)) for u in users)
        if r_trans is not None:
            groups = tuple(dataclasses.replace(g, r_min=float(r_trans)) for g in groups)
        return self.replace(reflection_users=users, transmission_groups=groups)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["format_version"] = FORMAT_VERSION
        return _plain(d)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def validate_scenario(s: ScenarioSpec) -> ScenarioSpec:
    problems = []

    def check_pos(p, where):
        a = np.asarray(p, dtype=float)
        if a.shape != (3,) or not np.all(np.isfinite(a)):
            problems.append(f"{where}: position must be 3 finite numbers")

    check_pos(s.bs.position, "bs")
    if int(s.bs.antenna_count) != s.bs.antenna_count or s.bs.antenna_count < 1:
        problems.append("bs.antenna_count must be a positive integer")
    if not s.bs.spacing > 0:
        problems.append("bs.spacing must be positive")
    for k, r in enumerate(s.star_ris):
        check_pos(r.position, f"star_ris[{k}]")
        if int(r.element_count) != r.element_count or r.element_count < 1:
            problems.append(f"star_ris[{k}].element_count must be a positive integer")
        if not r.spacing > 0:
            problems.append(f"star_ris[{k}].spacing must be positive")
    for j, u in enumerate(s.reflection_users):
        check_pos(u.position, f"reflection_users[{j}]")
        if not u.r_min >= 0:
            problems.append(f"reflection_users[{j}].r_min must be >= 0")
    seen = set()
    for g, grp in enumerate(s.transmission_groups):
        if not 0 <= grp.ris_index < len(s.star_ris):
            problems.append(f"transmission_groups[{g}].ris_index {grp.ris_index} does not "
                            f"reference an existing STAR-RIS (K={len(s.star_ris)})")
        elif grp.ris_index in seen:
            problems.append(f"transmission_groups[{g}]: STAR-RIS {grp.ris_index} already serves a group")
        seen.add(grp.ris_index)
        if not grp.r_min >= 0:
            problems.append(f"transmission_groups[{g}].r_min must be >= 0")
        if len(grp.positions) == 0:
            problems.append(f"transmission_groups[{g}] has no users")
        for m, p in enumerate(grp.positions):
            check_pos(p, f"transmission_groups[{g}].positions[{m}]")
    if not s.reflection_users and not s.transmission_groups:
        problems.append("scenario has no users")
    if not (np.isfinite(s.p_t_watts) and s.p_t_watts > 0):
        problems.append("p_t_watts must be positive")
    if not np.isfinite(s.noise_dbw):
        problems.append("noise_dbw must be finite")
    b = s.bcd
    if not b.epsilon > 0:
        problems.append("bcd.epsilon must be positive")
    if b.max_outer_iterations < 1:
        problems.append("bcd.max_outer_iterations must be >= 1")
    if b.randomization_samples < 1:
        problems.append("bcd.randomization_samples must be >= 1")
    if problems:
        raise ScenarioError(problems)
    return s


def _tuple3(p):
    return tuple(float(x) for x in p)


def scenario_from_dict(d: dict) -> ScenarioSpec:
    if not isinstance(d, dict):
        raise ScenarioError("scenario document must be a mapping")
    problems = []
    version = d.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        problems.append(f"unsupported format_version {version}")
    for key in ("bs", "star_ris", "reflection_users", "transmission_groups"):
        if key not in d:
            problems.append(f"missing field {key!r}")
    if "p_t_watts" not in d and "p_t" not in d:
        problems.append("missing field 'p_t_watts'")
    if problems:
        raise ScenarioError(problems)
    try:
        bs = d["bs"]
        spec = ScenarioSpec(
            bs=BaseStation(_tuple3(bs["position"]), int(bs["antenna_count"]),
                           float(bs.get("spacing", 0.5))),
            star_ris=tuple(StarRis(_tuple3(r["position"]), int(r["element_count"]),
                                   float(r.get("spacing", 0.5)))
                           for r in d["star_ris"] or ()),
            reflection_users=tuple(ReflectionUser(_tuple3(u["position"]), float(u["r_min"]))
                                   for u in d["reflection_users"] or ()),
            transmission_groups=tuple(
                TransmissionGroup(int(g["ris_index"]), float(g["r_min"]),
                                  tuple(_tuple3(p) for p in g["positions"]))
                for g in d["transmission_groups"] or ()),
            p_t_watts=parse_power(d["p_t_watts"] if "p_t_watts" in d else d["p_t"]),
            noise_dbw=float(d.get("noise_dbw", -140.0)),
            pathloss_ref_db=float(d.get("pathloss_ref_db", -20.0)),
            seed=int(d.get("seed", 0)),
            random_link_phase=bool(d.get("random_link_phase", False)),
            solver=SolverSettings(**(d.get("solver") or {})),
            bcd=BcdSettings(**(d.get("bcd") or {})),
        )
    except KeyError as exc:
        raise ScenarioError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad field value: {exc}") from None
    return validate_scenario(spec)


def load_scenario(path) -> ScenarioSpec:
    """Parse and validate a scenario file; parse errors carry the line number."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}: parse error{where}: {getattr(exc, 'problem', exc)}") from None
    return scenario_from_dict(doc)


def dump_scenario(spec: ScenarioSpec, path) -> None:
    Path(path).write_text(yaml.safe_dump(spec.to_dict(), sort_keys=False), encoding="utf-8")


def default_scenario() -> ScenarioSpec:
    return load_scenario(DEFAULT_SCENARIO)
