import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conetree import HalfPlaneVector, RadialPotential, fixed_point, phi
from conetree.errors import NoConvergence, NotAFixedPoint, PreconditionError
from conetree.halfplane import gamma, gamma_A
from conetree.recursion import (
    Classification,
    SolverConfig,
    boundary_value,
    contraction_diagnostics,
    fixed_points,
    green_levels,
    green_with_potential,
    polynomial_residual,
    rho,
    sigma,
    tau,
    uniform_bounds,
)

from strategies import upper_points, valid_matrices


def test_phi_examples(binary):
    h = phi(0.0, HalfPlaneVector([1j / math.sqrt(2)]), binary)
    assert h[0] == pytest.approx(1j / math.sqrt(2), abs=1e-15)
    assert phi(1j, HalfPlaneVector([1j]), binary)[0] == pytest.approx(1j / 3)


def test_phi_rejects_lower_shift(binary):
    with pytest.raises(PreconditionError):
        phi(-1j, np.array([1j]), binary)


@given(upper_points(2), upper_points(2))
@settings(max_examples=100)
def test_phi_decomposition(zeta, g):
    M = np.array([[2.0, 1.0], [1.0, 1.0]])
    zeta = zeta.real + 1j * np.abs(zeta.imag)
    assert np.allclose(phi(zeta, g, M), rho(sigma(zeta, tau(g, M))), rtol=1e-14)


@given(valid_matrices(), st.data())
@settings(max_examples=60, deadline=None)
def test_mapping_property(M, data):
    g = data.draw(upper_points(M.size))
    zeta = data.draw(upper_points(M.size))
    zeta = zeta.real + 1j * np.abs(zeta.imag) * data.draw(st.sampled_from([0.0, 1.0]))
    assert np.all(phi(zeta, g, M).imag > 0)


@given(upper_points(2), upper_points(2), upper_points(2))
@settings(max_examples=100)
def test_contraction_ladder(g, h, zeta):
    M = np.array([[2.0, 1.0], [1.0, 1.0]])
    # inversion is an isometry
    assert np.allclose(gamma(rho(g), rho(h)), gamma(g, h), rtol=1e-9, atol=1e-12)
    # a shift with positive imaginary part contracts strictly
    if gamma_A(g, h) > 1e-9:
        assert gamma_A(sigma(zeta, g), sigma(zeta, h)) < gamma_A(g, h)
    # the weighted sum does not expand
    assert gamma_A(tau(g, M), tau(h, M)) <= gamma_A(g, h) * (1 + 1e-12) + 1e-15


def test_fixed_point_binary_closed_form(binary):
    z = 1j
    expected = (-z + np.sqrt(z * z - 8)) / 4
    expected = expected if expected.imag > 0 else (-z - np.sqrt(z * z - 8)) / 4
    assert fixed_point(z, binary)[0] == pytest.approx(expected, abs=1e-14)


def test_fixed_point_outside_band(binary):
    assert fixed_point(3 + 1e-8j, binary)[0] == pytest.approx(-0.5, abs=1e-7)


@pytest.mark.parametrize("z", [1j, 0.3 + 0.05j, -2 + 1e-4j, 3.1 + 1e-6j])
def test_polynomial_residual(golden, z):
    h = fixed_point(z, golden)
    assert np.all(polynomial_residual(z, h, golden) < 1e-10)


@pytest.mark.parametrize("z", [1j, 0.7 + 0.01j, -2.5 + 1e-3j])
def test_seed_independence(golden, z):
    a = fixed_point(z, golden, seed=[1j, 1j])
    b = fixed_point(z, golden)
    assert gamma_A(a, b) <= 10 * SolverConfig().gamma_tol


def test_uniform_bounds_hold(golden):
    rng = np.random.default_rng(0)
    z = rng.uniform(-4, 4, 50) + 1j * rng.uniform(1e-3, 1, 50)
    H = fixed_points(z, golden)
    for zi, h in zip(z, H):
        lo, hi = uniform_bounds(zi, golden)
        assert np.all(np.abs(h) <= hi * (1 + 1e-9))
        assert np.all(np.abs(h) >= lo * (1 - 1e-9))


def test_fixed_point_needs_upper_half_plane(binary):
    with pytest.raises(PreconditionError):
        fixed_point(0.5, binary)


def test_no_convergence_is_reported(binary):
    config = SolverConfig(max_iter=3, picard_budget=3, newton_max_iter=1)
    with pytest.raises(NoConvergence):
        fixed_point(0.5 + 1e-6j, binary, config)


def test_boundary_value_examples(binary):
    bv = boundary_value(0.0, binary)
    assert bv.classification is Classification.INSIDE
    assert bv.limit[0] == pytest.approx(1j / math.sqrt(2), abs=1e-10)
    bv = boundary_value(3.0, binary)
    assert bv.classification is Classification.OUTSIDE
    assert bv.limit[0] == pytest.approx(-0.5, abs=1e-10)
    assert boundary_value(2 * math.sqrt(2), binary).classification is Classification.UNDECIDED


def test_boundary_value_trace_follows_schedule(golden):
    config = SolverConfig(eta_steps=20)
    bv = boundary_value(1.0, golden, config)
    assert bv.trace.shape == (21, 2)
    assert np.allclose(bv.etas, 0.1 * 0.5 ** np.arange(21))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(eta_ratio=1.5)
    with pytest.raises(ValueError):
        SolverConfig(gamma_tol=0.0)


def test_potential_zero_coupling(golden):
    z = 0.4 + 0.01j
    levels = green_levels(z, golden, RadialPotential.random(2, 0.0, 1), 5)[0]
    h = fixed_point(z, golden).values
    assert np.allclose(levels, h[None, :], atol=1e-9)


def test_constant_potential_is_energy_shift(golden):
    z = 0.5 + 0.01j
    g = green_with_potential(z, golden, RadialPotential.constant(2, 0.1), 3, "o")
    assert g == pytest.approx(fixed_point(z - 0.1, golden)["o"], abs=1e-9)


def test_alternating_potential_tail_independent(golden):
    z = 1 + 1e-4j
    pot = RadialPotential.alternating(2, 0.2)
    a = green_levels(z, golden, pot, 2, SolverConfig(tail_depth=1000))[0]
    b = green_levels(z, golden, pot, 2, SolverConfig(tail_depth=2000))[0]
    assert np.all(np.isfinite(a)) and np.all(a.imag > 0)
    assert np.max(np.abs(a - b)) < 1e-8


def test_tail_cap_raises(binary):
    # regular trees do not contract at tiny eta, so the tail never settles
    pot = RadialPotential.alternating(1, 0.1)
    with pytest.raises(NoConvergence):
        green_levels(0.3 + 1e-9j, binary, pot, 0, SolverConfig(max_tail_depth=4000))


def test_contraction_report_invariants(golden):
    bv = boundary_value(1.8, golden)
    rep = contraction_diagnostics(1.8, golden, bv.limit, R=0.1, samples=200, seed=1)
    assert rep.steps == 2
    assert rep.max_ratio < 1.0
    assert rep.max_single_step_ratio <= 1.0 + 1e-12
    assert np.allclose(rep.p_h.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(rep.p_g.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all((rep.P >= 0) & (rep.P <= 1 + 1e-12))
    assert np.all(np.abs(rep.cos_alpha) <= 1 + 1e-12)
    assert rep.tau_identity_residual.max() < 1e-10


def test_contraction_rejects_non_fixed_point(golden):
    with pytest.raises(NotAFixedPoint):
        contraction_diagnostics(1.0, golden, np.array([1j, 1j]))


def test_contraction_is_reproducible(golden):
    h = boundary_value(-1.2, golden).limit
    a = contraction_diagnostics(-1.2, golden, h, samples=50, seed=3)
    b = contraction_diagnostics(-1.2, golden, h, samples=50, seed=3)
    assert np.array_equal(a.ratios, b.ratios)
