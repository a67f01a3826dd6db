"""Regenerate the frozen oracle fixtures in this directory.

    python tests/data/build_fixtures.py

Each fixture stores the tiny scenario, the grid, the grid optimum, the optimum
after one refinement and their difference (the measured grid slack).
"""
import json
from pathlib import Path

from starris.oracle import GridSpec, make_fixture, single_user_capacity
from starris.scenario import scenario_from_dict

HERE = Path(__file__).parent

BASE = {
    "format_version": 1,
    "p_t_watts": 0.1,
    "noise_dbw": -100.0,
    "pathloss_ref_db": -20.0,
    "seed": 7,
}


def scenario(bs_antennas, ris, refl, groups, **kw):
    d = dict(BASE)
    d.update(bs={"position": [0.0, 0.0, 10.0], "antenna_count": bs_antennas},
             star_ris=ris, reflection_users=refl, transmission_groups=groups)
    d.update(kw)
    return scenario_from_dict(d)


RIS1 = [{"position": [0.0, 20.0, 5.0], "element_count": 1}]
RIS2 = [{"position": [0.0, 20.0, 5.0], "element_count": 2}]

FIXTURES = {
    # closed forms
    "direct_single_user": (
        scenario(1, [], [{"position": [10.0, 30.0, 0.0], "r_min": 0.5}], []),
        GridSpec(4, 4, 8), "one antenna, one reflection user, no surface"),
    "transmission_single_user": (
        scenario(1, RIS1, [], [{"ris_index": 0, "r_min": 0.5, "positions": [[3.0, 30.0, 0.0]]}]),
        GridSpec(8, 8, 8), "one antenna, one element, one transmission user"),
    # grid oracles
    "one_element_both_sides": (
        scenario(1, RIS1, [{"position": [3.0, 10.0, 0.0], "r_min": 0.5}],
                 [{"ris_index": 0, "r_min": 0.5, "positions": [[3.0, 30.0, 0.0]]}]),
        GridSpec(64, 64, 64), "one antenna, one element, one user per side, mirrored about the "
                              "surface so both cascades have equal gain, equal thresholds"),
    "two_antennas_two_elements_transmission": (
        scenario(2, RIS2, [], [{"ris_index": 0, "r_min": 0.5, "positions": [[4.0, 28.0, 0.0]]}]),
        GridSpec(16, 16, 16), "two antennas, two elements, one transmission user"),
    "two_antennas_both_sides": (
        scenario(2, RIS1, [{"position": [-6.0, 14.0, 0.0], "r_min": 1.0}],
                 [{"ris_index": 0, "r_min": 0.5, "positions": [[2.0, 26.0, 0.0]]}],
                 noise_dbw=-96.0),
        GridSpec(7, 7, 7), "two antennas, one element, one user per side, moderate SNR"),
    "one_antenna_two_reflection_users": (
        scenario(1, RIS2, [{"position": [-5.0, 12.0, 0.0], "r_min": 0.3},
                           {"position": [6.0, 15.0, 0.0], "r_min": 0.3}], []),
        GridSpec(16, 16, 16), "one antenna, two elements, two reflection users sharing it"),
}


def main(names=None):
    for name, (sc, grid, note) in FIXTURES.items():
        if names and name not in names:
            continue
        fx = make_fixture(name, sc, grid, note)
        if len(sc.reflection_users) + sum(len(g.positions) for g in sc.transmission_groups) == 1:
            fx["closed_form"] = single_user_capacity(sc)
        (HERE / f"oracle_{name}.json").write_text(json.dumps(fx, indent=1) + "\n", encoding="utf-8")
        print(f"{name}: grid {fx['grid_optimum']:.6f} refined {fx['refined_optimum']:.6f} "
              f"slack {fx['grid_slack']:.2e} closed {fx.get('closed_form')}")


if __name__ == "__main__":
    import sys
    main(sys.argv[1:])
