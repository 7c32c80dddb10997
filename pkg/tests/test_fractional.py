import numpy as np
from pytest import approx, mark, raises

from horotomo.exceptions import ContractViolation, InsufficientSmoothness
from horotomo.fractional import (
    abel_forward_sqrt,
    abel_power_constant,
    derivative,
    frac_derivative_minus,
    fractional_integral,
    integrated_profile,
    rl_integral_minus,
)
from horotomo.profiles import Profile1D, bump_profile, exponential_profile
from horotomo.quadrature import QuadratureSpec


@mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.5])
def test_exponentials_are_fixed_by_the_integral(alpha, quad):
    assert rl_integral_minus(exponential_profile(1.0), 1.3, alpha, quad) == approx(np.exp(-0.3), rel=1e-9)


def test_fractional_integral_needs_a_positive_order(quad):
    with raises(ContractViolation):
        fractional_integral(exponential_profile(1.0), 1.5, 0.0, quad)


def test_fractional_integral_broadcasts(quad):
    values = rl_integral_minus(exponential_profile(2.0), np.array([1.0, 1.5, 2.0]), 0.5, quad)
    assert np.allclose(values, np.exp(-2.0 * np.array([0.0, 0.5, 1.0])) / np.sqrt(2.0), rtol=1e-9)


def test_derivatives_of_analytic_profiles():
    profile = exponential_profile(1.0)
    assert derivative(profile, 2.0, 1) == approx(-np.exp(-1.0), rel=1e-8)
    assert derivative(profile, 2.0, 2) == approx(np.exp(-1.0), rel=1e-6)
    with raises(ContractViolation):
        derivative(profile, 1.0, 1)
    with raises(InsufficientSmoothness):
        derivative(profile, 2.0, 5)


def test_derivatives_of_sampled_profiles():
    profile = Profile1D.sampled(np.exp, 1.0, 3.0, 1e-11)
    assert derivative(profile, 1.5, 1) == approx(np.exp(1.5), rel=1e-6)
    with raises(InsufficientSmoothness):
        derivative(profile, 1.5, 4)


@mark.parametrize("d, tolerance", [(1, 1e-3), (2, 1e-6), (3, 1e-3), (4, 1e-6)])
def test_fractional_derivative_inverts_the_integral(d, tolerance):
    quad = QuadratureSpec()
    f0 = exponential_profile(1.0)
    heights = np.array([1.5, 3.0])
    restored = frac_derivative_minus(integrated_profile(f0, d / 2.0, quad), heights, d, quad)
    assert np.allclose(restored, f0(heights), atol=tolerance)


def test_alternative_form_agrees_with_the_standard_one():
    quad = QuadratureSpec()
    psi = integrated_profile(bump_profile(0.0, 2.0), 1.5, quad)
    standard = frac_derivative_minus(psi, 1.6, 3, quad)
    alternative = frac_derivative_minus(psi, 1.6, 3, quad, form="alternative")
    assert standard == approx(alternative, abs=2e-3)


def test_fractional_derivative_rejects_bad_arguments(quad):
    psi = exponential_profile(1.0)
    with raises(ContractViolation):
        frac_derivative_minus(psi, 1.5, 0, quad)
    with raises(ContractViolation):
        frac_derivative_minus(psi, 1.5, 1, quad, form="symmetric")


@mark.parametrize("d", [1, 2, 3])
def test_abel_image_of_the_model_power(d, quad):
    alpha = 1.0
    profile = Profile1D(function=lambda r: (r - 1.0) ** (alpha / 2.0 - 1.0) * np.sqrt(r**2 - 1.0))
    s = 1.8
    expected = abel_power_constant(d, alpha) * (s - 1.0) ** ((alpha + d) / 2.0 - 1.0)
    assert abel_forward_sqrt(profile, s, d, quad) == approx(expected, rel=1e-6)


def test_abel_integral_needs_s_above_one(quad):
    with raises(ContractViolation):
        abel_forward_sqrt(exponential_profile(1.0), 1.0, 1, quad)
