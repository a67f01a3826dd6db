import csv
import io

import numpy as np
import pytest

from starris.scenario import ScenarioError, default_scenario
from starris.sweep import (CSV_COLUMNS, SweepSpec, load_sweep, run_sweep, scenario_at,
                           spec_to_dict)


@pytest.fixture(scope="module")
def small():
    return default_scenario().with_elements(2)


def test_spec_validation():
    with pytest.raises(ScenarioError, match="increasing"):
        SweepSpec("transmit_power_dbm", (20, 10))
    with pytest.raises(ScenarioError, match="axis"):
        SweepSpec("bandwidth", (1, 2))
    with pytest.raises(ScenarioError, match="trials"):
        SweepSpec("r2_threshold", (0.5, 1.0), trials=0)
    with pytest.raises(ScenarioError, match="schemes"):
        SweepSpec("r2_threshold", (0.5, 1.0), schemes=("best",))


def test_load_sweep(tmp_path):
    p = tmp_path / "s.sweep"
    p.write_text("format_version: 1\naxis: elements_per_ris\nvalues: [8, 16]\ntrials: 2\n")
    spec = load_sweep(p)
    assert spec.values == (8, 16) and spec.trials == 2
    assert SweepSpec.from_dict(spec_to_dict(spec)) == spec


def test_scenario_at(small):
    assert scenario_at(small, "elements_per_ris", 8).star_ris[1].element_count == 8
    assert scenario_at(small, "transmit_power_dbm", 30).p_t_watts == pytest.approx(1.0)
    sc = scenario_at(small, "r2_threshold", 0.9)
    assert {g.r_min for g in sc.transmission_groups} == {0.9}
    assert {u.r_min for u in sc.reflection_users} == {1.8}


def test_visit_order():
    assert SweepSpec("r2_threshold", (0.5, 0.7, 0.9)).order() == [2, 1, 0]
    assert SweepSpec("transmit_power_dbm", (10, 20)).order() == [0, 1]


@pytest.fixture(scope="module")
def r2_sweep(small, tmp_path_factory):
    spec = SweepSpec("r2_threshold", (0.5, 0.7), schemes=("proposed", "fixed_37"), trials=2)
    out = tmp_path_factory.mktemp("sweep")
    return spec, out, run_sweep(small, spec, out)


def test_row_count_and_columns(r2_sweep):
    spec, out, res = r2_sweep
    text = (out / "sweep.csv").read_bytes().decode("utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) - 1 == len(spec.values) * len(spec.schemes) * spec.trials
    assert "\r\n" in text
    assert [r[1] for r in rows[1:3]] == ["proposed", "proposed"]


def test_trials_use_distinct_seeds(r2_sweep):
    _, _, res = r2_sweep
    assert {r.seed for r in res.rows} == {0, 1}


def test_svg_written(r2_sweep):
    _, out, _ = r2_sweep
    svg = (out / "sweep_r2_threshold.svg").read_text()
    assert svg.startswith("<?xml") and "Sum rate" in svg


def test_sweep_reproducible(r2_sweep, small, tmp_path):
    spec, out, _ = r2_sweep
    run_sweep(small, spec, tmp_path)
    assert (tmp_path / "sweep.csv").read_bytes() == (out / "sweep.csv").read_bytes()
    assert (tmp_path / "sweep_r2_threshold.svg").read_bytes() == \
        (out / "sweep_r2_threshold.svg").read_bytes()


def test_failed_point_recorded(small, monkeypatch):
    import starris.sweep as sw

    real = sw.compare_schemes

    def flaky(sc, *a, **k):
        if sc.p_t_watts > 0.5:
            raise RuntimeError("boom")
        return real(sc, *a, **k)

    monkeypatch.setattr(sw, "compare_schemes", flaky)
    res = run_sweep(small, SweepSpec("transmit_power_dbm", (20, 30), schemes=("fixed_55",)))
    assert [r.status for r in res.rows] == ["converged", "error: RuntimeError"]
    assert np.isnan(res.series("fixed_55")[1][1])


def test_independent_seed_policy_without_continuation(small):
    spec = SweepSpec("transmit_power_dbm", (19, 20), schemes=("fixed_55",),
                     seed_policy="independent", continuation=False)
    res = run_sweep(small, spec)
    assert [r.seed for r in res.rows] == [0, 1000]
    assert all(r.start == "heuristic" for r in res.rows)


def test_element_extension_keeps_old_coefficients(small):
    from starris.bcd import initial_profiles, run_scheme
    from starris.network import Network
    from starris.sweep import _extend

    res = run_scheme(small, "fixed_55")
    big = small.with_elements(4)
    net = Network(big, seed=big.seed)
    beams, profiles = _extend(net, "fixed_55", res)
    for old, new in zip(res.profiles, profiles):
        assert new.element_count == 4
        np.testing.assert_array_equal(new.theta_r[:2], old.theta_r)
        np.testing.assert_array_equal(new.theta_t[:2], old.theta_t)
        np.testing.assert_allclose(new.beta_t, 0.5)
    # the phase search can only improve on the heuristic phases for the new elements
    heuristic = [type(p)(p.beta_r, p.beta_t, np.r_[o.theta_r, h.theta_r[2:]],
                         np.r_[o.theta_t, h.theta_t[2:]])
                 for p, o, h in zip(profiles, res.profiles, initial_profiles(net, "fixed_55"))]
    def key(ps):
        rep = net.evaluate(ps, beams)
        return (min(rep.min_margin, 0.0), rep.sum_rate)
    assert key(profiles) >= key(heuristic)
