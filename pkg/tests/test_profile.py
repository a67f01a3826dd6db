import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from starris.profile import (BASELINE_KINDS, ConstraintError, StarRisProfile, baseline_profile,
                             profile_from_vectors, validate_es)


def _profile(beta_r, beta_t, theta_r=None, theta_t=None):
    n = len(beta_r)
    return StarRisProfile(beta_r, beta_t, np.zeros(n) if theta_r is None else theta_r,
                          np.zeros(n) if theta_t is None else theta_t)


def test_validate_equal_split_ok():
    assert validate_es(_profile([0.5] * 3, [0.5] * 3, [0.1, 2.0, 6.0], [3.0, 0.0, 1.0])).ok


def test_validate_reports_coupling_violation_with_index():
    rep = validate_es(_profile([0.5, 0.7], [0.5, 0.4]))
    assert not rep.ok
    assert [(k, n) for k, n, kind, _ in rep.violations] == [(0, 1)]
    assert rep.violations[0][3] == pytest.approx(1.1)


def test_validate_boundary_allowed():
    assert validate_es(_profile([1.0], [0.0])).ok


def test_validate_phase_range():
    rep = validate_es(_profile([0.5], [0.5], [2 * np.pi], [0.0]))
    assert any("theta_r" in kind for _, _, kind, _ in rep.violations)


def test_validate_surface_index_in_report():
    rep = validate_es([_profile([0.5], [0.5]), _profile([0.2], [0.2])])
    assert {k for k, *_ in rep.violations} == {1}


def test_fixed_55():
    p = baseline_profile("fixed_55", 16)
    np.testing.assert_allclose(np.abs(p.v_t) ** 2, 0.5)


def test_fixed_37():
    p = baseline_profile("fixed_37", 2)
    np.testing.assert_allclose(np.abs(p.v_t) ** 2, [0.3, 0.3])
    np.testing.assert_allclose(np.abs(p.v_r) ** 2, [0.7, 0.7])


def test_refl_trans_only_one_based():
    np.testing.assert_array_equal(baseline_profile("refl_trans_only", 4).beta_r, [1, 0, 1, 0])


def test_unknown_baseline():
    with pytest.raises(ValueError):
        baseline_profile("fixed_91", 4)


@pytest.mark.parametrize("kind", BASELINE_KINDS)
@pytest.mark.parametrize("n", [1, 2, 7, 16])
def test_baselines_pass_validation(kind, n):
    assert validate_es(baseline_profile(kind, n), tol=1e-12).ok


def test_from_vectors_pure_modes():
    p = profile_from_vectors([1, 0], [0, 1])
    np.testing.assert_allclose(p.beta_t, [1, 0])
    np.testing.assert_allclose(p.beta_r, [0, 1])


def test_from_vectors_symmetric_split():
    v = np.exp(1j * np.pi / 4) / np.sqrt(2)
    p = profile_from_vectors([v], [v])
    np.testing.assert_allclose([p.beta_t[0], p.beta_r[0]], [0.5, 0.5])
    np.testing.assert_allclose([p.theta_t[0], p.theta_r[0]], [np.pi / 4] * 2)


def test_from_vectors_violation():
    with pytest.raises(ConstraintError, match="element 0"):
        profile_from_vectors([0.9], [0.6])


def test_from_vectors_length_mismatch():
    with pytest.raises(ValueError):
        profile_from_vectors([1, 0], [1])


unit = st.floats(0.0, 1.0)
phase = st.floats(0.0, 2 * np.pi, exclude_max=True)


@given(arrays(float, 5, elements=unit), arrays(float, 5, elements=phase),
       arrays(float, 5, elements=phase))
def test_round_trip(beta_t, theta_r, theta_t):
    p = StarRisProfile(1.0 - beta_t, beta_t, theta_r, theta_t)
    q = profile_from_vectors(p.v_t, p.v_r)
    np.testing.assert_allclose(q.beta_t, p.beta_t, atol=1e-12)
    np.testing.assert_allclose(q.beta_r, p.beta_r, atol=1e-12)
    for a, b, beta in ((q.theta_t, p.theta_t, p.beta_t), (q.theta_r, p.theta_r, p.beta_r)):
        d = np.angle(np.exp(1j * (a - b)))
        # the phase of a zero-amplitude coefficient is undefined
        assert np.all((np.abs(d) <= 1e-9) | (beta < 1e-20))


def test_diag_equals_elementwise(rng):
    v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    np.testing.assert_allclose(np.diag(v) @ x, v * x, atol=1e-14)


def test_records_round_trip():
    p = baseline_profile("fixed_37", 3, theta_t=[0.1, 0.2, 0.3])
    q = StarRisProfile.from_records(p.to_records())
    for a, b in zip((p.beta_r, p.beta_t, p.theta_r, p.theta_t), (q.beta_r, q.beta_t, q.theta_r, q.theta_t)):
        np.testing.assert_array_equal(a, b)
