import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shock_stability.core import (
    comparability_constants,
    compatibility_residual,
    hessian_eigenvalues,
    rayleigh_quotient_bounds,
    relative_entropy,
    relative_flux,
    symmetrizer_residual,
)
from shock_stability.errors import DegenerateInput, DomainError
from shock_stability.systems import (
    PowerLaw,
    euler_from_primitive,
    isentropic_from_primitive,
    make_full_euler,
    make_isentropic,
    sample_interior,
)

G2 = make_isentropic(PowerLaw(2.0))
EULER = make_full_euler(1.4)

densities = st.floats(min_value=0.2, max_value=3.0)
velocities = st.floats(min_value=-1.0, max_value=1.0)
energies = st.floats(min_value=0.5, max_value=3.0)


def test_relative_entropy_vanishes_on_diagonal(isentropic_g2, full_euler, burgers):
    for system, state in [
        (isentropic_g2, [1.3, 0.4]),
        (full_euler, euler_from_primitive(1.1, -0.2, 1.7)),
        (burgers, [0.7]),
    ]:
        assert relative_entropy(system, state, state) == pytest.approx(0.0, abs=1e-14)
        assert relative_flux(system, state, state) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(densities, velocities, densities, velocities)
def test_isentropic_relative_entropy_nonnegative(rho_u, vel_u, rho_v, vel_v):
    u = isentropic_from_primitive(rho_u, vel_u)
    v = isentropic_from_primitive(rho_v, vel_v)
    assert relative_entropy(G2, u, v) >= -1e-12


@settings(max_examples=60, deadline=None)
@given(densities, velocities, energies, densities, velocities, energies)
def test_full_euler_relative_entropy_nonnegative(rho_u, vel_u, e_u, rho_v, vel_v, e_v):
    u = euler_from_primitive(rho_u, vel_u, e_u)
    v = euler_from_primitive(rho_v, vel_v, e_v)
    assert relative_entropy(EULER, u, v) >= -1e-12


def test_relative_quantities_ignore_affine_entropy_gauge(isentropic_g2, rng):
    a = np.array([0.7, -1.3])
    b = 2.5
    shifted = dataclasses.replace(
        isentropic_g2,
        entropy=lambda u: isentropic_g2.entropy(u) + np.asarray(u) @ a + b,
        entropy_flux=lambda u: isentropic_g2.entropy_flux(u) + isentropic_g2.flux(u) @ a - 4.0,
        grad_eta=lambda u: isentropic_g2.grad_eta(u) + a,
    )
    states = sample_interior(isentropic_g2, 20, rng)
    v = states[0]
    for u in states[1:]:
        assert relative_entropy(shifted, u, v) == pytest.approx(relative_entropy(isentropic_g2, u, v), abs=1e-11)
        assert relative_flux(shifted, u, v) == pytest.approx(relative_flux(isentropic_g2, u, v), abs=1e-11)


def test_relative_entropy_vectorised_matches_pointwise(isentropic_g2, rng):
    states = sample_interior(isentropic_g2, 10, rng)
    v = states[-1]
    batch = relative_entropy(isentropic_g2, states, v)
    single = [relative_entropy(isentropic_g2, u, v) for u in states]
    np.testing.assert_allclose(batch, single, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("gamma", [1.4, 2.0, 3.0])
def test_isentropic_entropy_pair_is_compatible(gamma, rng):
    system = make_isentropic(PowerLaw(gamma))
    for u in sample_interior(system, 10, rng):
        assert compatibility_residual(system, u) <= 1e-6


def test_full_euler_entropy_pair_is_compatible(full_euler, rng):
    for u in sample_interior(full_euler, 10, rng):
        assert compatibility_residual(full_euler, u) <= 1e-6


def test_compatibility_residual_detects_miswired_entropy_flux(isentropic_g2, full_euler, rng):
    for system in (isentropic_g2, full_euler):
        miswired = dataclasses.replace(system, entropy_flux=lambda u, g=system.entropy_flux: g(u) + 0.1 * np.asarray(u)[..., 0])
        for u in sample_interior(system, 5, rng):
            assert compatibility_residual(miswired, u) == pytest.approx(0.1, abs=1e-5)


def test_entropy_symmetrizes_flux_jacobian(isentropic_g2, full_euler, rng):
    for system in (isentropic_g2, full_euler):
        for v in sample_interior(system, 5, rng):
            assert symmetrizer_residual(system, v) <= 1e-8
            assert hessian_eigenvalues(system, v)[0] > 0.0


def test_rayleigh_bounds_are_extreme_speeds(isentropic_g2, full_euler, rng):
    for system in (isentropic_g2, full_euler):
        for v in sample_interior(system, 5, rng):
            low, high = rayleigh_quotient_bounds(system, v)
            assert low == pytest.approx(float(system.lambda_minus(v)), abs=1e-8)
            assert high == pytest.approx(float(system.lambda_plus(v)), abs=1e-8)


def test_relative_flux_ratio_approaches_rayleigh_range(isentropic_g2):
    v = np.array([1.0, 0.2])
    low, high = rayleigh_quotient_bounds(isentropic_g2, v)
    for direction in ([1.0, 0.0], [0.0, 1.0], [0.6, -0.8]):
        u = v + 1e-5 * np.asarray(direction)
        ratio = relative_flux(isentropic_g2, u, v) / relative_entropy(isentropic_g2, u, v)
        assert low - 1e-3 <= ratio <= high + 1e-3


def test_vacuum_reference_is_rejected(isentropic_g2):
    with pytest.raises(DomainError):
        relative_entropy(isentropic_g2, [1.0, 0.0], [0.0, 0.0])


def test_vacuum_argument_is_allowed(isentropic_g2):
    assert relative_entropy(isentropic_g2, [0.0, 0.0], [1.0, 0.0]) > 0.0


def test_state_outside_closure_is_rejected(isentropic_g2):
    with pytest.raises(DomainError):
        relative_entropy(isentropic_g2, [-0.5, 0.0], [1.0, 0.0])


def test_mirroring_is_an_involution(isentropic_g2):
    mirrored = isentropic_g2.mirrored()
    u = np.array([1.2, 0.3])
    assert mirrored.mirrored() is isentropic_g2
    np.testing.assert_array_equal(mirrored.flux(u), -isentropic_g2.flux(u))
    assert mirrored.lambda_minus(u) == -isentropic_g2.lambda_plus(u)
    assert relative_flux(mirrored, u, [1.0, 0.0]) == pytest.approx(-relative_flux(isentropic_g2, u, [1.0, 0.0]))


def test_comparability_constants_bracket_samples(isentropic_g2, rng):
    omega = sample_interior(isentropic_g2, 5, rng, region=((0.8, 1.2), (-0.2, 0.2)))
    ambient = sample_interior(isentropic_g2, 30, rng)
    estimate = comparability_constants(isentropic_g2, omega, ambient)
    assert 0.0 < estimate.c1 <= estimate.c2
    for v in omega:
        for u in ambient:
            dist2 = float(np.sum((u - v) ** 2))
            value = relative_entropy(isentropic_g2, u, v)
            assert estimate.c1 * dist2 <= value + 1e-12
            assert value <= estimate.c2 * dist2 + 1e-12


def test_comparability_needs_states(isentropic_g2):
    with pytest.raises(DegenerateInput):
        comparability_constants(isentropic_g2, np.empty((0, 2)), [[1.0, 0.0]])
