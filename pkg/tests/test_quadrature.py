import numpy as np
from pydantic import ValidationError
from pytest import approx, mark, raises, warns

from horotomo.exceptions import AccuracyWarning, ContractViolation
from horotomo.quadrature import (
    QuadratureSpec,
    Scheme,
    integrate,
    integrate_sphere,
    log_weighted_integral,
    power_weighted_integral,
    sphere_rule,
)


@mark.parametrize("scheme", list(Scheme))
def test_every_scheme_integrates_a_polynomial(scheme):
    quad = QuadratureSpec(scheme=scheme, rel_tolerance=1e-10)
    result = integrate(lambda x: x**2, 0.0, 1.0, quad)
    assert result.value == approx(1.0 / 3.0, rel=1e-8)
    assert result.evals > 0


def test_integrate_broadcasts_over_limits(quad):
    result = integrate(np.exp, 0.0, np.array([1.0, 2.0]), quad)
    assert np.allclose(result.value, np.exp([1.0, 2.0]) - 1.0, rtol=1e-9)


def test_integrate_warns_when_the_budget_runs_out():
    quad = QuadratureSpec(rel_tolerance=1e-16, abs_tolerance=1e-300, max_evals=100)
    with warns(AccuracyWarning):
        result = integrate(np.sqrt, 0.0, 1.0, quad)
    assert result.value == approx(2.0 / 3.0, rel=1e-3)


def test_power_weighted_integral_handles_the_endpoint_singularity(quad):
    result = power_weighted_integral(np.ones_like, 1.0, 2.0, -0.5, quad)
    assert result.value == approx(2.0, rel=1e-9)


def test_power_weighted_integral_beyond_the_unit_interval(quad):
    result = power_weighted_integral(lambda s: np.exp(-(s - 1.0)), 1.0, 40.0, 0.5, quad)
    assert result.value == approx(np.sqrt(np.pi) / 2.0, rel=1e-8)


def test_log_weighted_integral(quad):
    result = log_weighted_integral(np.ones_like, 0.0, 1.0, 0.0, quad)
    assert result.value == approx(-1.0, rel=1e-8)


def test_power_weighted_integral_rejects_non_integrable_weights(quad):
    with raises(ContractViolation):
        power_weighted_integral(np.ones_like, 0.0, 1.0, -1.0, quad)


@mark.parametrize("dim", [1, 2, 3, 4])
def test_sphere_rule_weights_and_nodes(dim):
    nodes, weights = sphere_rule(dim, 6)
    assert weights.sum() == approx(1.0)
    assert np.allclose(np.linalg.norm(nodes, axis=1), 1.0)


def test_sphere_rule_is_cached():
    assert sphere_rule(3, 5)[0] is sphere_rule(3, 5)[0]


@mark.parametrize("dim", [2, 3, 4])
def test_integrate_sphere_averages_a_quadratic(dim, quad):
    result = integrate_sphere(lambda x: x[..., 0] ** 2, dim, quad)
    assert result.value == approx(1.0 / dim, rel=1e-9)


def test_sphere_rule_needs_a_dimension():
    with raises(ContractViolation):
        sphere_rule(0, 3)


@mark.parametrize(
    "values",
    [{"rel_tolerance": 0.0}, {"abs_tolerance": -1.0}, {"max_evals": 10}, {"sphere_order": 0}],
)
def test_quadrature_spec_validation(values):
    with raises(ValidationError):
        QuadratureSpec(**values)
