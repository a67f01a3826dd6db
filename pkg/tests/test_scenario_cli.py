import csv
import io
import json

import numpy as np
import pytest
import yaml

from starris import cli
from starris.conic.program import ConicSolution
from starris.scenario import (DEFAULT_SCENARIO, ScenarioError, dbm_to_watts, default_scenario,
                              dump_scenario, load_scenario, parse_power)


def _write(tmp_path, doc, name="s.scenario"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return p


def _small(tmp_path, n=2, **changes):
    sc = default_scenario().with_elements(n)
    if changes:
        sc = sc.replace(**changes)
    p = tmp_path / "small.scenario"
    dump_scenario(sc, p)
    return p


def test_reference_scenario():
    sc = load_scenario(DEFAULT_SCENARIO)
    assert sc.bs.antenna_count == 5
    assert [r.element_count for r in sc.star_ris] == [16, 16]
    assert len(sc.reflection_users) == 5
    assert sum(len(g.positions) for g in sc.transmission_groups) == 4
    assert sc.p_t_watts == 0.1 and sc.noise_dbw == -140.0
    assert sc.noise_power == pytest.approx(1e-14)
    assert {u.r_min for u in sc.reflection_users} == {1.4}
    assert {g.r_min for g in sc.transmission_groups} == {0.7}
    assert sc.bcd.epsilon == 1e-3 and sc.bcd.randomization_samples == 100
    assert sc.star_ris[0].spacing == 0.5


def test_missing_power_named(tmp_path):
    doc = default_scenario().to_dict()
    del doc["p_t_watts"]
    with pytest.raises(ScenarioError, match="p_t_watts"):
        load_scenario(_write(tmp_path, doc))


def test_bad_ris_reference(tmp_path):
    doc = default_scenario().to_dict()
    doc["transmission_groups"][0]["ris_index"] = 3
    with pytest.raises(ScenarioError, match="ris_index 3"):
        load_scenario(_write(tmp_path, doc))


def test_all_violations_listed(tmp_path):
    doc = default_scenario().to_dict()
    doc["p_t_watts"] = -1
    doc["reflection_users"][0]["r_min"] = -0.5
    with pytest.raises(ScenarioError) as err:
        load_scenario(_write(tmp_path, doc))
    assert "p_t_watts" in str(err.value) and "r_min" in str(err.value)


def test_parse_error_line(tmp_path):
    p = tmp_path / "bad.scenario"
    p.write_text("bs:\n  position: [0, 0\nstar_ris: []\n", encoding="utf-8")
    with pytest.raises(ScenarioError, match="line"):
        load_scenario(p)


def test_round_trip(tmp_path):
    sc = default_scenario()
    p = tmp_path / "rt.scenario"
    dump_scenario(sc, p)
    assert load_scenario(p) == sc


@pytest.mark.parametrize("text, watts", [("0.1W", 0.1), ("100 mW", 0.1), ("20dBm", 0.1),
                                         ("-10dBW", 0.1), (0.25, 0.25)])
def test_power_units(text, watts):
    assert parse_power(text) == pytest.approx(watts)


def test_dbm_conversion():
    assert dbm_to_watts(30) == pytest.approx(1.0)


def test_threshold_ratio_helper():
    sc = default_scenario().with_thresholds(r_refl=2 * 0.9, r_trans=0.9)
    assert {u.r_min for u in sc.reflection_users} == {1.8}


# ---------------------------------------------------------------- CLI

def test_cli_validate(capsys):
    assert cli.main(["validate", "--scenario", str(DEFAULT_SCENARIO)]) == 0
    assert "5 antennas" in capsys.readouterr().out


def test_cli_validation_exit_code(tmp_path):
    assert cli.main(["run", "--scenario", str(_small(tmp_path)), "--p-t", "0W",
                     "--out", str(tmp_path / "o")]) == cli.EXIT_VALIDATION
    assert cli.main(["validate", "--scenario", str(tmp_path / "missing")]) == cli.EXIT_VALIDATION


def test_cli_run_outputs(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["run", "--scenario", str(_small(tmp_path)), "--scheme", "proposed",
                     "--out", str(out), "--seed", "3"]) == 0
    doc = json.loads((out / "result.json").read_text())
    assert doc["scheme"] == "proposed" and doc["termination"] == "converged"
    assert {"sum_rate", "rates", "profiles", "beams", "trace", "timings"} <= set(doc)
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert len(lines) == doc["iterations"]
    assert json.loads(lines[0])["iteration"] == 1


def test_cli_run_all_schemes(tmp_path):
    out = tmp_path / "all"
    assert cli.main(["run", "--scenario", str(_small(tmp_path)), "--scheme", "all",
                     "--out", str(out)]) == 0
    doc = json.loads((out / "result.json").read_text())["schemes"]
    rates = {k: v["sum_rate"] for k, v in doc.items()}
    assert rates["proposed"] >= max(rates.values()) - 1e-4


def test_cli_infeasible_exit(tmp_path):
    sc = default_scenario().with_elements(2).with_thresholds(r_refl=60.0)
    p = tmp_path / "hard.scenario"
    dump_scenario(sc, p)
    assert cli.main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_INFEASIBLE


def test_cli_numerical_failure_exit(tmp_path, monkeypatch):
    import starris.bcd as bcd
    monkeypatch.setattr(bcd, "solve", lambda prog, settings=None: ConicSolution("numerical-failure"))
    assert cli.main(["run", "--scenario", str(_small(tmp_path)), "--out",
                     str(tmp_path / "o")]) == cli.EXIT_NUMERICAL


def test_cli_oracle(capsys):
    from conftest import DATA
    assert cli.main(["oracle", "--fixture", str(DATA / "oracle_direct_single_user.json")]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_cli_sweep(tmp_path):
    sweep = tmp_path / "power.sweep"
    sweep.write_text("format_version: 1\naxis: transmit_power_dbm\nvalues: [18, 20]\n"
                     "schemes: [proposed, fixed_55]\n", encoding="utf-8")
    out = tmp_path / "sw"
    assert cli.main(["sweep", "--scenario", str(_small(tmp_path)), "--sweep", str(sweep),
                     "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO((out / "sweep.csv").read_text())))
    assert len(rows) == 4
    assert (out / "sweep_transmit_power_dbm.svg").exists()
