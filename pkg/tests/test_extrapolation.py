import numpy as np
from pytest import approx, raises

from horotomo.exceptions import ContractViolation, ReconstructionUnstable
from horotomo.extrapolation import Extrapolation, extrapolate, geometric_nodes


def test_richardson_removes_polynomial_error_terms():
    nodes = geometric_nodes(0.2, 6)
    offsets = nodes - 1.0
    values = 2.0 + 3.0 * offsets - 5.0 * offsets**2 + offsets**3
    result = extrapolate(values)
    assert result.value == approx(2.0, abs=1e-12)
    assert len(result.extrapolants) == 7
    assert result.error < 1e-10


def test_linear_and_plain_rules():
    assert extrapolate([3.0, 2.0, 1.5], Extrapolation.linear).value == approx(1.0)
    assert extrapolate([3.0, 2.0], Extrapolation.none).value == 2.0


def test_diverging_sequences_are_unstable():
    with raises(ReconstructionUnstable) as error:
        extrapolate([1.0, 10.0, -100.0, 1000.0], tolerance=1e-2)
    assert error.value.diagnostics["rule"] == "richardson"
    assert len(error.value.diagnostics["values"]) == 4


def test_non_finite_values_are_unstable():
    with raises(ReconstructionUnstable):
        extrapolate([1.0, np.nan], Extrapolation.none, tolerance=1.0)


def test_at_least_two_values():
    with raises(ContractViolation):
        extrapolate([1.0])
