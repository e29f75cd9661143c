import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from micromacro.errors import DomainError
from micromacro.riemann import (
    boundary_trace,
    godunov_flux,
    kruzkov_flux,
    sample_fan,
    sample_fan_left,
    solve_riemann,
)
from micromacro.speed_law import SpeedLaw

from conftest import rational_law

densities = st.floats(0, 1, allow_nan=False)
LAWS = [SpeedLaw.greenshields(1.0), rational_law()]


def test_vacuum_to_jam_is_standing_shock(law):
    fan = solve_riemann(law, 0.0, 1.0)
    assert fan.kind == "shock" and fan.speed == 0.0


def test_equal_states_give_constant_fan(law):
    fan = solve_riemann(law, 0.3, 0.3)
    assert fan.kind == "constant"
    assert sample_fan(fan, -3.0) == sample_fan(fan, 3.0) == 0.3


def test_shock_speed_from_rankine_hugoniot(law):
    # (0.2 * 0.8 - 0.8 * 0.2) / (0.2 - 0.8) = 0 = 1 - 0.2 - 0.8.
    fan = solve_riemann(law, 0.2, 0.8)
    assert fan.kind == "shock"
    assert fan.speed == pytest.approx(0.0, abs=1e-15)


def test_rejects_states_outside_unit_interval(law):
    with pytest.raises(DomainError):
        solve_riemann(law, -0.2, 0.5)
    with pytest.raises(DomainError):
        solve_riemann(law, 0.5, 1.5)


def test_sample_fan_examples(law):
    rare = solve_riemann(law, 1.0, 0.0)
    assert sample_fan(rare, 0.0) == 0.5
    assert sample_fan(rare, -2.0) == 1.0
    assert sample_fan(rare, 0.5) == pytest.approx(0.25)
    shock = solve_riemann(law, 0.2, 0.8)
    assert sample_fan(shock, -1.0) == 0.2


def test_sample_fan_right_continuous_at_shock(law):
    shock = solve_riemann(law, 0.2, 0.8)
    assert sample_fan(shock, 0.0) == 0.8
    assert sample_fan_left(shock, 0.0) == 0.2


def test_boundary_trace_examples(law):
    assert boundary_trace(law, 0.0, 0.0, 0.3) == 0.0
    assert boundary_trace(law, 0.2, 0.8, 0.0) == 0.2
    assert boundary_trace(law, 1.0, 0.0, 1.0) == 0.0


def test_godunov_flux_cases(law):
    # Upward jump: min of f over the interval; downward across the sonic point: f(1/2).
    assert godunov_flux(law, 0.2, 0.8) == pytest.approx(0.16)
    assert godunov_flux(law, 1.0, 0.0) == pytest.approx(0.25)
    assert godunov_flux(law, 0.4, 0.1) == pytest.approx(0.24)
    assert godunov_flux(law, 0.9, 0.7) == pytest.approx(0.21)
    np.testing.assert_allclose(godunov_flux(law, np.array([0.0, 0.5]), np.array([1.0, 0.5])), [0.0, 0.25])


@given(densities, densities)
def test_shocks_only_for_upward_jumps(rl, rr):
    for law in LAWS:
        fan = solve_riemann(law, rl, rr)
        assert (fan.kind == "shock") == (rl < rr)
        assert (fan.kind == "rarefaction") == (rl > rr)


@given(densities, densities)
def test_rankine_hugoniot_and_lax(rl, rr):
    for law in LAWS:
        fan = solve_riemann(law, rl, rr)
        if fan.kind != "shock":
            continue
        assert fan.speed * (rr - rl) == pytest.approx(law.flux(rr) - law.flux(rl), abs=1e-12)
        assert law.dflux(rl) > fan.speed - 1e-12 and fan.speed + 1e-12 > law.dflux(rr)


@given(densities, densities, st.floats(-2, 2), st.floats(0.1, 5))
def test_self_similarity(rl, rr, x, t):
    for law in LAWS:
        fan = solve_riemann(law, rl, rr)
        assert sample_fan(fan, x / t) == sample_fan(fan, (2 * x) / (2 * t))


@given(densities, densities)
def test_rarefaction_profile_monotone(rl, rr):
    law = rational_law()
    fan = solve_riemann(law, max(rl, rr), min(rl, rr))
    xi = np.linspace(-1.5, 1.5, 301)
    values = sample_fan(fan, xi)
    assert np.all(np.diff(values) <= 1e-12)


def _entropy_production(law, sampler, k, t0=1.0, x0=0.0, a=0.5, b=0.5, n=801):
    """Quadrature of int |rho - k| phi_t + q(rho, k) phi_x over a bump centred at (t0, x0)."""
    t = t0 + a * (np.arange(n) + 0.5 - n / 2) * 2 / n
    x = x0 + b * (np.arange(n) + 0.5 - n / 2) * 2 / n
    T, X = np.meshgrid(t, x, indexing="ij")
    s = ((T - t0) / a) ** 2 + ((X - x0) / b) ** 2
    inside = s < 1
    phi = np.where(inside, np.exp(-1 / np.where(inside, 1 - s, 1)), 0.0)
    dphi_ds = np.where(inside, -phi / np.where(inside, 1 - s, 1) ** 2, 0.0)
    phi_t = dphi_ds * 2 * (T - t0) / a**2
    phi_x = dphi_ds * 2 * (X - x0) / b**2
    rho = sampler(X / T)
    integrand = np.abs(rho - k) * phi_t + kruzkov_flux(law, rho, k) * phi_x
    return float(integrand.sum() * (2 * a / n) * (2 * b / n))


@given(densities, densities, densities)
def test_kruzkov_entropy_inequality(rl, rr, k):
    law = SpeedLaw.greenshields(1.0)
    fan = solve_riemann(law, rl, rr)
    x0 = fan.speed if fan.kind == "shock" else 0.0
    assert _entropy_production(law, fan.sample, k, x0=x0) >= -1e-4


def test_kruzkov_detects_non_entropic_shock():
    # A downward jump transported as a shock violates the entropy inequality for k between the states.
    law = SpeedLaw.greenshields(1.0)
    rl, rr = 0.8, 0.2
    sigma = 1 - rl - rr

    def bad(xi):
        return np.where(xi < sigma, rl, rr)

    assert _entropy_production(law, bad, 0.5, x0=sigma) < -1e-3


def test_kruzkov_flux_sign_convention(law):
    assert kruzkov_flux(law, 0.2, 0.5) == pytest.approx(-(0.16 - 0.25))
    assert kruzkov_flux(law, 0.5, 0.5) == 0.0
