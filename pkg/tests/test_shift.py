from dataclasses import replace

import numpy as np
import pytest

from shock_stability.errors import ConfigError, OutOfDomain
from shock_stability.shift import (
    VelocityParams,
    advance_shift,
    dafermos_check,
    default_window,
    estimate_lemma_constant,
    extract_traces,
    filippov_check,
    interval_average,
    new_path,
    trace_variation,
    track_shift,
    velocity_V,
    velocity_field,
    windowed_velocity,
)
from shock_stability.solver import Field, InitSpec, SimConfig

from conftest import SQRT6, U_LEFT_G2, U_RIGHT_G2

EPS = 0.05


@pytest.fixture
def params():
    return VelocityParams(EPS, U_LEFT_G2)


def piecewise_field(left, right, n=200, lo=-1.0, hi=1.0):
    left, right = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
    cells = np.empty((n, left.size))
    centers = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    cells[centers < 0.0] = left
    cells[centers >= 0.0] = right
    return Field(lo, hi, cells, 0.0, left.copy(), right.copy())


def test_params_validation():
    with pytest.raises(ConfigError):
        VelocityParams(0.0, U_LEFT_G2)
    with pytest.raises(ConfigError):
        VelocityParams(0.1, U_LEFT_G2, eta_floor=0.0)


def test_velocity_at_reference_state(isentropic_g2, params):
    expected = float(isentropic_g2.lambda_minus(U_LEFT_G2)) - EPS
    assert velocity_V(isentropic_g2, U_LEFT_G2, params) == expected


def test_velocity_is_continuous_at_reference(isentropic_g2, params):
    limit = velocity_V(isentropic_g2, U_LEFT_G2, params)
    for direction in ([1.0, 0.0], [0.0, 1.0], [-0.6, 0.8]):
        direction = np.asarray(direction)
        errors = [abs(velocity_V(isentropic_g2, U_LEFT_G2 + 2.0**-k * direction, params) - limit) for k in (6, 10, 14)]
        assert errors[-1] < 1e-3
        assert errors[-1] < errors[0]


def test_velocity_never_exceeds_characteristic_bound(isentropic_g2, params, rng):
    states = np.column_stack([rng.uniform(0.3, 3.0, 50), rng.uniform(-2.0, 2.0, 50)])
    v = velocity_field(isentropic_g2, states, params)
    assert np.all(v <= isentropic_g2.lambda_minus(states) - EPS + 1e-14)


def test_velocity_at_vacuum_uses_ratio(isentropic_g2, params):
    value = velocity_V(isentropic_g2, [0.0, 0.0], params)
    assert np.isfinite(value)


def test_default_window():
    fld = piecewise_field(U_LEFT_G2, U_LEFT_G2, n=100, lo=-2.0, hi=1.5)
    assert default_window(fld, 0.05) == pytest.approx(4.0 * fld.dx)
    assert default_window(fld, 1.0) == pytest.approx(0.035)


def test_window_of_one_cell_reads_that_cell(isentropic_g2, params):
    fld = piecewise_field(U_LEFT_G2, U_RIGHT_G2, n=20)
    x = fld.x_lo + 3 * fld.dx
    assert windowed_velocity(isentropic_g2, fld, x, params, window=fld.dx) == pytest.approx(
        velocity_V(isentropic_g2, fld.cells[3], params)
    )


def test_window_across_jump_mixes_sides(isentropic_g2, params):
    fld = piecewise_field(U_LEFT_G2, U_RIGHT_G2, n=20)
    v_left = velocity_V(isentropic_g2, U_LEFT_G2, params)
    v_right = velocity_V(isentropic_g2, U_RIGHT_G2, params)
    v = windowed_velocity(isentropic_g2, fld, -fld.dx, params, window=2.0 * fld.dx)
    assert v == pytest.approx(0.5 * (v_left + v_right))


def test_window_outside_grid(isentropic_g2, params):
    fld = piecewise_field(U_LEFT_G2, U_RIGHT_G2, n=20)
    with pytest.raises(OutOfDomain):
        windowed_velocity(isentropic_g2, fld, 0.95, params, window=0.2)


def test_interval_average_of_partial_cells():
    fld = piecewise_field([0.0], [1.0], n=4, lo=-1.0, hi=1.0)
    assert float(interval_average(fld, -0.25, 0.75)[0]) == pytest.approx(0.75)


def test_traces_of_piecewise_constant_field():
    fld = piecewise_field(U_LEFT_G2, U_RIGHT_G2)
    u_minus, u_plus = extract_traces(fld, 0.0)
    np.testing.assert_allclose(u_minus, U_LEFT_G2, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(u_plus, U_RIGHT_G2, rtol=1e-12, atol=1e-14)


def test_traces_need_room():
    fld = piecewise_field(U_LEFT_G2, U_RIGHT_G2, n=20)
    with pytest.raises(OutOfDomain):
        extract_traces(fld, fld.x_lo + fld.dx)


def test_zero_step_leaves_path_unchanged(isentropic_g2, params):
    fld = piecewise_field(U_LEFT_G2, U_LEFT_G2)
    path = new_path(fld, params)
    advance_shift(path, isentropic_g2, fld, 0.0, params)
    assert len(path) == 0
    assert path.x == 0.0


def test_path_on_constant_state_moves_at_constant_speed(isentropic_g2, params):
    fld = piecewise_field(U_LEFT_G2, U_LEFT_G2)
    path = new_path(fld, params)
    for k in range(10):
        fld.time = 0.01 * k
        advance_shift(path, isentropic_g2, fld, 0.01, params)
    speed = velocity_V(isentropic_g2, U_LEFT_G2, params)
    assert path.x == pytest.approx(0.1 * speed, rel=1e-12)
    assert path.max_lipschitz_ratio() == pytest.approx(abs(speed), rel=1e-9)
    report = filippov_check(path, isentropic_g2, params)
    assert report.violation_fraction == 0.0


def test_filippov_vacuum_trace_has_no_lower_bound(isentropic_g2, params):
    fld = piecewise_field([0.0, 0.0], U_LEFT_G2)
    path = new_path(fld, params, x0=-0.1)
    advance_shift(path, isentropic_g2, fld, 0.01, params)
    report = filippov_check(path, isentropic_g2, params)
    assert report.vacuum_samples == 1
    assert report.v_min[0] == -np.inf


@pytest.fixture(scope="module")
def tracked_shock(isentropic_g2):
    config = SimConfig(
        sys=isentropic_g2,
        init=InitSpec("riemann", U_LEFT_G2, U_RIGHT_G2),
        N=700,
        domain=(-2.0, 1.5),
        t_end=0.1,
    )
    params = VelocityParams(EPS, U_LEFT_G2)
    trajectory, path = track_shift(config, params)
    return config, params, trajectory, path


def test_tracked_path_follows_exact_shock(tracked_shock):
    config, _, trajectory, path = tracked_shock
    dx = trajectory.final.dx
    assert len(path) == trajectory.n_steps + 1
    assert path.times[-1] == pytest.approx(config.t_end)
    assert path.positions[0] == 0.0
    assert abs(path.positions[-1] + SQRT6 * config.t_end) <= path.window + 10.0 * dx


def test_tracked_path_is_lipschitz(tracked_shock, isentropic_g2):
    _, _, _, path = tracked_shock
    bound = float(np.max(np.abs(path.vs)))
    assert path.max_lipschitz_ratio() <= bound + 1e-9


def test_jump_relations_on_tracked_shock(tracked_shock, isentropic_g2):
    _, _, _, path = tracked_shock
    report = dafermos_check(path, isentropic_g2)
    assert report.n_jumps > 0
    fitted = report.rh_fitted[np.isfinite(report.rh_fitted)]
    assert np.median(fitted) < 0.1
    speeds = report.fitted_speed[np.isfinite(report.fitted_speed)]
    assert np.median(speeds) == pytest.approx(-SQRT6, rel=0.2)


def test_tracked_path_stays_in_the_filippov_sandwich(tracked_shock, isentropic_g2):
    _, params, _, path = tracked_shock
    report = filippov_check(path, isentropic_g2, params)
    assert report.n_samples == len(path)
    assert report.violation_fraction <= 0.01
    width = report.v_max - report.v_min
    assert np.all(report.slack <= 0.5 * width + 1e-9)


def test_filippov_flags_a_wrong_shift_speed(tracked_shock, isentropic_g2):
    _, params, _, path = tracked_shock
    wrong = replace(path, velocities=[5.0] * len(path))
    report = filippov_check(wrong, isentropic_g2, params)
    assert report.violation_fraction == 1.0

    slow = replace(path, velocities=[v - 10.0 for v in path.velocities])
    assert filippov_check(slow, isentropic_g2, params).violation_fraction >= 0.99


def test_trace_variation_vanishes_away_from_the_jump(isentropic_g2, params):
    fld = piecewise_field(U_LEFT_G2, U_RIGHT_G2)
    assert trace_variation(isentropic_g2, fld, -0.5, params) == 0.0
    assert trace_variation(isentropic_g2, fld, 0.0, params) == 0.0
    straddling = trace_variation(isentropic_g2, fld, -0.05, params)
    jump = velocity_V(isentropic_g2, U_LEFT_G2, params) - velocity_V(isentropic_g2, U_RIGHT_G2, params)
    assert straddling == pytest.approx(abs(jump))


def test_jump_relations_hold_beyond_the_shock_layer(isentropic_g2):
    config = SimConfig(
        sys=isentropic_g2,
        init=InitSpec("riemann", U_LEFT_G2, U_RIGHT_G2),
        N=700,
        domain=(-2.0, 1.5),
        t_end=0.1,
    )
    _, path = track_shift(config, VelocityParams(EPS, U_LEFT_G2), layer_skip=8)
    report = dafermos_check(path, isentropic_g2)
    fitted = report.rh_fitted[np.isfinite(report.rh_fitted)]
    assert fitted.size > 0
    assert np.median(fitted) <= 1e-3
    entropy = report.entropy_fitted[np.isfinite(report.entropy_fitted)]
    assert np.median(entropy) <= 1e-6


def test_lemma_constant_is_finite(isentropic_g2, params):
    estimate = estimate_lemma_constant(isentropic_g2, params, n=50, rng=np.random.default_rng(1))
    assert estimate.n_samples == 50
    assert np.isfinite(estimate.constant)
    assert estimate.constant > 0.0
