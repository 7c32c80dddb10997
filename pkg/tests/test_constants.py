from math import gamma, pi, sqrt

from pytest import approx, mark, raises

from horotomo.constants import (
    dual_constant,
    even_inversion_constant,
    fuglede_constant,
    gamma_ratio,
    in_pole_set,
    log_potential_constant,
    potential_constant,
    sphere_area,
    weighted_constant,
    zonal_constant,
)
from horotomo.exceptions import ParameterError


def test_sphere_areas():
    assert sphere_area(0) == approx(2.0)
    assert sphere_area(1) == approx(2.0 * pi)
    assert sphere_area(2) == approx(4.0 * pi)
    assert sphere_area(3) == approx(2.0 * pi**2)


def test_gamma_ratio_keeps_signs():
    assert gamma_ratio([5.0], [3.0]) == approx(12.0)
    assert gamma_ratio([-0.5]) == approx(-2.0 * sqrt(pi))


def test_gamma_ratio_stays_finite_for_large_arguments():
    assert gamma_ratio([200.5], [200.0]) == approx(sqrt(200.0), rel=1e-2)


@mark.parametrize("d", [1, 2, 3, 4])
def test_zonal_constant_is_a_power_of_two_pi(d):
    assert zonal_constant(d) == approx((2.0 * pi) ** (d / 2.0))


def test_potential_constant_of_the_newtonian_kernel():
    assert potential_constant(3, 2.0) == approx(1.0 / (4.0 * pi))


@mark.parametrize("n, alpha", [(3, 3.0), (3, 5.0), (4, 4.0), (2, 2.0)])
def test_potential_constant_excludes_the_pole_set(n, alpha):
    with raises(ParameterError):
        potential_constant(n, alpha)


def test_potential_constant_needs_a_positive_order():
    with raises(ParameterError):
        potential_constant(3, 0.0)


def test_log_potential_constant_on_the_plane():
    assert log_potential_constant(2) == approx(-1.0 / (4.0 * pi))


def test_dual_constant_excludes_the_pole_set():
    with raises(ParameterError):
        dual_constant(4, 2, 2.0)
    assert dual_constant(3, 1, 1.0) == approx(
        gamma(0.5) / (2.0**2.5 * sqrt(pi) * gamma(0.5) * gamma(1.5))
    )


def test_even_inversion_constant_needs_even_d():
    with raises(ParameterError):
        even_inversion_constant(3, 1)
    assert even_inversion_constant(3, 2) * fuglede_constant(3, 2) == approx(-1.0)


def test_weighted_constant_needs_a_positive_order():
    with raises(ParameterError):
        weighted_constant(3, 1, -1.0)


def test_pole_set():
    assert in_pole_set(0.0)
    assert in_pole_set(4.0)
    assert not in_pole_set(3.0)
    assert not in_pole_set(-2.0)
