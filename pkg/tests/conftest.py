import numpy as np
import pytest

from starris.scenario import scenario_from_dict

DATA = __import__("pathlib").Path(__file__).parent / "data"


def tiny_scenario(bs_antennas=1, ris=(), refl=(), groups=(), **kw):
    """Small scenario around a base station at (0, 0, 10)."""
    d = {"format_version": 1, "p_t_watts": 0.1, "noise_dbw": -100.0, "seed": 7,
         "bs": {"position": [0.0, 0.0, 10.0], "antenna_count": bs_antennas},
         "star_ris": [{"position": list(p), "element_count": n} for p, n in ris],
         "reflection_users": [{"position": list(p), "r_min": r} for p, r in refl],
         "transmission_groups": [{"ris_index": k, "r_min": r, "positions": [list(p) for p in ps]}
                                 for k, r, ps in groups]}
    d.update(kw)
    return scenario_from_dict(d)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# acceptance criteria report one line each; printed after the test summary
ACCEPTANCE = []


def record(criterion, passed: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE.append((criterion, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE, key=lambda c: str(c[0])):
            terminalreporter.write_line(line)
