import math

import numpy as np
import pytest

from shock_stability.errors import NotADiscontinuity, RangeError
from shock_stability.hugoniot import (
    Classification,
    Family,
    build_curve,
    check_hypotheses,
    classify_discontinuity,
    entropy_loss_formula_residual,
    entropy_production,
    full_euler_pressure_ratio,
    strengthening_closed_form_derivative,
    lemma_suite,
    literal_display_residual,
    origin_slope_relation,
    pressure_convexity_profile,
    rh_residual,
    shock_curve_continuation,
    shock_curve_full_euler,
    shock_curve_isentropic,
    strengthening_rate,
    terminal_parameter,
    verify_cornerstone,
    verify_lemma_decreasing,
)
from shock_stability.systems import PowerLaw, euler_from_primitive, euler_primitive

from conftest import SQRT6, U_LEFT_G2, U_RIGHT_G2


@pytest.fixture(scope="module")
def g2_curve(isentropic_g2):
    return build_curve(isentropic_g2, U_LEFT_G2, Family.ONE, np.linspace(0.0, 1.0, 5))


def test_isentropic_curve_known_values(isentropic_g2):
    curve = shock_curve_isentropic(isentropic_g2, U_LEFT_G2, Family.ONE, [0.0, 1.0])
    np.testing.assert_allclose(curve.states[-1], U_RIGHT_G2, rtol=1e-14)
    assert curve.speeds[-1] == pytest.approx(-SQRT6, rel=1e-14)
    assert curve.speeds[0] == pytest.approx(-math.sqrt(2.0), rel=1e-14)
    np.testing.assert_array_equal(curve.states[0], U_LEFT_G2)
    assert rh_residual(isentropic_g2, U_LEFT_G2, curve.states[-1], curve.speeds[-1]) <= 1e-12


def test_isentropic_curve_rejects_negative_parameter(isentropic_g2):
    with pytest.raises(RangeError):
        shock_curve_isentropic(isentropic_g2, U_LEFT_G2, Family.ONE, [0.0, -0.1])


def test_isentropic_curve_entropy_production(isentropic_g2):
    production = entropy_production(isentropic_g2, U_LEFT_G2, U_RIGHT_G2, -SQRT6)
    assert production == pytest.approx(-SQRT6 / 4.0, rel=1e-12)


def test_n_family_curve_satisfies_rankine_hugoniot(isentropic_g2):
    curve = shock_curve_isentropic(isentropic_g2, [1.0, 0.5], Family.N, np.linspace(0.0, 1.5, 7))
    for state, speed in zip(curve.states, curve.speeds):
        assert rh_residual(isentropic_g2, state, curve.base, speed) <= 1e-12
    assert np.all(np.diff(curve.speeds) > 0.0)


def test_full_euler_pressure_ratio():
    assert full_euler_pressure_ratio(1.4, 2.0) == pytest.approx(2.75)


def test_full_euler_curve_compresses(full_euler):
    base = euler_from_primitive(1.0, 0.0, 2.5)
    curve = shock_curve_full_euler(full_euler, base, Family.N, np.linspace(0.0, 2.0, 9))
    rho, _, e, p = euler_primitive(curve.states, 1.4)
    assert np.all(np.diff(rho) > 0.0)
    assert np.all(np.diff(p) > 0.0)
    assert np.all(np.diff(e) > 0.0)
    ratio = p[4] / p[0]
    assert ratio == pytest.approx(full_euler_pressure_ratio(1.4, rho[4] / rho[0]), rel=1e-12)
    for state, speed in zip(curve.states, curve.speeds):
        assert rh_residual(full_euler, state, base, speed) <= 1e-12 * (1.0 + np.max(np.abs(full_euler.flux(state))))


def test_full_euler_curve_has_density_ratio_limit(full_euler):
    base = euler_from_primitive(1.0, 0.0, 2.5)
    with pytest.raises(RangeError):
        shock_curve_full_euler(full_euler, base, Family.ONE, [0.0, 5.0])


EULER_BASE = euler_from_primitive(1.0, 0.0, 2.5)


@pytest.fixture(scope="module", params=[Family.ONE, Family.N], ids=["one", "n"])
def euler_curve(request, full_euler):
    return build_curve(full_euler, EULER_BASE, request.param, np.linspace(0.0, 1.0, 6))


class TestFullEulerCurves:
    def test_cornerstone_identity_and_sign(self, full_euler, euler_curve):
        for s, s0 in [(0.4, 0.0), (1.0, 0.2), (0.6, 0.6), (0.2, 1.0)]:
            check = verify_cornerstone(full_euler, euler_curve, s, s0)
            assert check.residual <= 1e-6
            assert check.sign_ok

    def test_origin_slope_is_half_characteristic_slope(self, full_euler, euler_curve):
        sigma_prime, half_lambda_prime = origin_slope_relation(full_euler, euler_curve)
        assert sigma_prime == pytest.approx(half_lambda_prime, rel=1e-3)

    def test_hypotheses_hold(self, full_euler, euler_curve):
        report = check_hypotheses(full_euler, euler_curve)
        assert report.passed, report.failures
        assert report.slow_downstream_ok
        assert report.fast_jump_ok

    def test_continuation_matches_explicit_curve(self, full_euler, euler_curve):
        continued = shock_curve_continuation(full_euler, EULER_BASE, euler_curve.family, step=0.1, n_steps=8)
        for state, speed in zip(continued.states[1:], continued.speeds[1:]):
            jump = state[0] - EULER_BASE[0]
            assert jump > 0.0
            np.testing.assert_allclose(euler_curve.state_at(jump), state, atol=1e-6)
            assert euler_curve.speed_at(jump) == pytest.approx(speed, abs=1e-6)

    def test_kinetic_identity(self, euler_curve):
        for state in euler_curve.states[1:]:
            u_minus, u_plus = euler_curve.pair(state)
            rho_l, vel_l, _, p_l = euler_primitive(u_minus, 1.4)
            rho_r, vel_r, _, p_r = euler_primitive(u_plus, 1.4)
            expected = (p_r / rho_r) * (1.0 - p_l / p_r) * (rho_r / rho_l - 1.0)
            assert (vel_l - vel_r) ** 2 == pytest.approx(expected, rel=1e-10)


def test_continuation_matches_explicit_curve(isentropic_g2):
    continued = shock_curve_continuation(isentropic_g2, U_LEFT_G2, Family.ONE, step=0.1, n_steps=8)
    explicit = build_curve(isentropic_g2, U_LEFT_G2, Family.ONE, [0.0])
    for state, speed in zip(continued.states[1:], continued.speeds[1:]):
        jump = state[0] - U_LEFT_G2[0]
        assert jump > 0.0
        np.testing.assert_allclose(explicit.state_at(jump), state, atol=1e-6)
        assert explicit.speed_at(jump) == pytest.approx(speed, abs=1e-6)


def test_burgers_continuation(burgers):
    curve = build_curve(burgers, [1.0], Family.ONE, np.linspace(0.0, 1.0, 11))
    assert curve.method == "continuation"
    assert curve.states[-1][0] == pytest.approx(0.0, abs=1e-9)
    assert curve.speeds[-1] == pytest.approx(0.5, abs=1e-9)


def test_origin_slope_is_half_characteristic_slope(isentropic_g2, g2_curve):
    sigma_prime, half_lambda_prime = origin_slope_relation(isentropic_g2, g2_curve)
    assert sigma_prime == pytest.approx(half_lambda_prime, rel=1e-3)


def test_mirrored_curve_swaps_family(isentropic_g2):
    grid = np.linspace(0.0, 1.0, 5)
    direct = build_curve(isentropic_g2, U_LEFT_G2, Family.ONE, grid)
    mirrored = build_curve(isentropic_g2.mirrored(), U_LEFT_G2, Family.N, grid)
    assert mirrored.family is Family.N
    np.testing.assert_array_equal(mirrored.states, direct.states)
    np.testing.assert_array_equal(mirrored.speeds, -direct.speeds)


def test_terminal_parameter_is_domain_exit(isentropic_g2):
    s_end = terminal_parameter(isentropic_g2, U_LEFT_G2, Family.ONE)
    curve = build_curve(isentropic_g2, U_LEFT_G2, Family.ONE, [0.0])
    assert 0.0 < s_end < 10.0
    assert isentropic_g2.domain_interior(curve.state_at(0.999 * s_end))
    assert not isentropic_g2.domain_interior(curve.state_at(1.001 * s_end))


class TestClassification:
    def test_lax_one_shock(self, isentropic_g2):
        report = classify_discontinuity(isentropic_g2, U_LEFT_G2, U_RIGHT_G2)
        assert report.classification is Classification.ONE_SHOCK
        assert report.family is Family.ONE
        assert report.lax_one
        assert not report.lax_n
        assert report.sigma == pytest.approx(-SQRT6)
        assert report.liu_monotone
        assert report.strengthening

    def test_reversed_shock_is_inadmissible(self, isentropic_g2):
        report = classify_discontinuity(isentropic_g2, U_RIGHT_G2, U_LEFT_G2)
        assert report.classification is Classification.INADMISSIBLE
        assert report.entropy_production > 0.0

    def test_n_shock(self, isentropic_g2):
        curve = build_curve(isentropic_g2, U_LEFT_G2, Family.N, [0.0, 0.8])
        report = classify_discontinuity(isentropic_g2, curve.states[-1], U_LEFT_G2)
        assert report.classification is Classification.N_SHOCK
        assert report.lax_n
        assert not report.lax_one

    def test_off_locus_pair_is_rejected(self, isentropic_g2):
        with pytest.raises(NotADiscontinuity):
            classify_discontinuity(isentropic_g2, U_LEFT_G2, [1.5, 0.3])

    def test_degenerate_jump_is_rejected(self, isentropic_g2):
        with pytest.raises(NotADiscontinuity):
            classify_discontinuity(isentropic_g2, U_LEFT_G2, U_LEFT_G2)

    def test_full_euler_contact(self, full_euler):
        left = euler_from_primitive(1.0, 0.3, 2.0)
        right = euler_from_primitive(2.0, 0.3, 1.0)
        report = classify_discontinuity(full_euler, left, right)
        assert report.classification is Classification.CONTACT
        assert report.sigma == pytest.approx(0.3)


def test_hypotheses_hold_for_power_law(isentropic_g2):
    curve = build_curve(isentropic_g2, U_LEFT_G2, Family.ONE, np.linspace(0.0, 1.0, 11))
    report = check_hypotheses(isentropic_g2, curve)
    assert report.passed, report.failures
    assert report.speed_monotone
    assert report.min_strengthening_rate >= -1e-7


def test_liu_failure_for_nonconvex_pressure(nonconvex):
    curve = build_curve(nonconvex, [0.3, 0.0], Family.ONE, np.linspace(0.0, 0.5, 51))
    report = check_hypotheses(nonconvex, curve, cross_family=False)
    assert not report.speed_monotone
    assert report.liu_failure_intervals
    assert any(a < 0.243 and b > 0.007 for a, b in report.liu_failure_intervals)
    assert not report.passed


def test_convexity_profile_power_law():
    profile = pressure_convexity_profile(PowerLaw(2.0), 1.0, [0.0, 0.25, 0.5, 1.0])
    assert profile.phi[0] == pytest.approx(2.0)
    assert profile.dphi_integral[0] == pytest.approx(3.0)
    assert profile.max_discrepancy <= 1e-6
    assert np.all(profile.dphi_integral > 0.0)


def test_convexity_profile_detects_nonconvex_dip(nonconvex):
    profile = pressure_convexity_profile(nonconvex.law, 0.3, [0.1, 0.2])
    assert np.all(profile.dphi_integral < 0.0)
    assert profile.max_discrepancy <= 1e-6


def test_strengthening_closed_form(isentropic_g2, g2_curve):
    for s in g2_curve.s_grid:
        closed = strengthening_closed_form_derivative(isentropic_g2.law, 1.0, float(s))
        assert strengthening_rate(isentropic_g2, g2_curve, float(s)) == pytest.approx(closed, abs=1e-6)


def test_literal_momentum_reading_breaks_mass_balance(isentropic_g2):
    assert literal_display_residual(isentropic_g2, U_LEFT_G2, 1.0) > 1e-3


def test_cornerstone_identity_and_sign(isentropic_g2, g2_curve):
    for s in g2_curve.s_grid:
        for s0 in g2_curve.s_grid:
            check = verify_cornerstone(isentropic_g2, g2_curve, float(s), float(s0))
            assert check.residual <= 1e-7
            assert check.sign_ok


def test_relative_entropy_loss_along_curve(isentropic_g2, g2_curve):
    for v in ([1.5, 0.3], [0.7, -0.4], [2.5, 1.0]):
        check = verify_lemma_decreasing(isentropic_g2, g2_curve, v, 0.8)
        assert check.residual <= 1e-7
        assert check.sign_ok


def test_entropy_loss_formula(isentropic_g2, g2_curve):
    check = entropy_loss_formula_residual(isentropic_g2, g2_curve, 1.0)
    assert check.residual <= 1e-7
    assert check.lhs - (-SQRT6) * 4.5 == pytest.approx(-SQRT6 / 4.0, rel=1e-9)


def test_n_family_identities_use_mirror(isentropic_g2):
    curve = build_curve(isentropic_g2, U_LEFT_G2, Family.N, np.linspace(0.0, 0.8, 5))
    check = verify_cornerstone(isentropic_g2, curve, 0.8, 0.2)
    assert check.residual <= 1e-7
    assert check.sign_ok


def test_lemma_suite_passes_for_power_law(isentropic_g2):
    report = lemma_suite(isentropic_g2, U_LEFT_G2, Family.ONE, 1.0, n_grid=5, n_random=4)
    assert report.passed, report.failures
    assert report.literal_display_residual > 1e-3
    assert report.strengthening_closed_form_error <= 1e-6
