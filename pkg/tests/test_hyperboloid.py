from math import cosh, pi, sinh

import numpy as np
from pytest import approx, fixture, mark, raises

from horotomo.exceptions import ContractViolation, GeometryError
from horotomo.horosphere import random_rotation
from horotomo.hyperboloid import (
    ConeVector,
    HyperbolicPoint,
    LorentzElement,
    a_matrices,
    distance_to_origin,
    geodesic_distance,
    horospherical_chart,
    horospherical_coords,
    hyperbolic_coords,
    iwasawa_nak,
    make_a,
    make_k,
    make_n,
    minkowski_form,
    minkowski_matrix,
    n_matrices,
    origin,
    point_transport,
    radial_measure_integral,
    radial_point,
)
from horotomo.profiles import exponential_profile


@fixture
def element(rng) -> LorentzElement:
    return make_k(random_rotation(3, rng)) @ make_a(0.7, 3) @ make_n([0.3, -0.2])


def test_origin_and_radial_points():
    assert origin(3).coords.tolist() == [0.0, 0.0, 0.0, 1.0]
    x = radial_point(3, cosh(1.2))
    assert distance_to_origin(x) == approx(1.2)
    assert x.coords[2] == approx(sinh(1.2))
    with raises(ContractViolation):
        radial_point(3, 0.5)


def test_points_must_lie_on_the_upper_sheet():
    with raises(GeometryError):
        HyperbolicPoint(coords=[1.0, 0.0, 0.0])
    with raises(GeometryError):
        HyperbolicPoint(coords=[0.0, 0.0, -1.0])
    with raises(ContractViolation):
        HyperbolicPoint(coords=[0.0, 1.0])


def test_cone_vectors():
    assert ConeVector(coords=[0.0, 1.0, 1.0]).n == 2
    with raises(GeometryError):
        ConeVector(coords=[0.0, 1.0, -1.0])


def test_points_are_immutable():
    x = origin(2)
    with raises(ValueError):
        x.coords[0] = 1.0


def test_geodesic_distance_is_invariant(element):
    x, y = radial_point(3, 1.5), hyperbolic_coords([1.0, 0.0, 0.0], 0.8)
    moved_x, moved_y = element.apply_point(x), element.apply_point(y)
    assert geodesic_distance(moved_x, moved_y) == approx(geodesic_distance(x, y), rel=1e-10)


def test_minkowski_form_broadcasts():
    points = np.stack([origin(2).coords, radial_point(2, 2.0).coords])
    assert np.allclose(minkowski_form(points, points), 1.0)
    with raises(ContractViolation):
        minkowski_form([0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0])


def test_hyperbolic_coords_need_a_unit_direction():
    with raises(ContractViolation):
        hyperbolic_coords([1.0, 1.0], 0.5)


def test_group_elements_preserve_the_form(element):
    form = minkowski_matrix(3)
    assert np.allclose(element.matrix.T @ form @ element.matrix, form, atol=1e-10)
    assert np.allclose((element @ element.inverse()).matrix, np.eye(4), atol=1e-10)


def test_non_lorentz_matrices_are_rejected():
    with raises(ContractViolation):
        LorentzElement(matrix=np.diag([2.0, 1.0, 1.0]))
    with raises(ContractViolation):
        LorentzElement(matrix=np.diag([-1.0, -1.0, 1.0, -1.0]))
    with raises(ContractViolation):
        make_k(np.diag([1.0, -1.0, 1.0]))


def test_one_parameter_subgroups():
    assert np.allclose(a_matrices(0.3, 3) @ a_matrices(0.4, 3), a_matrices(0.7, 3))
    first, second = np.array([0.2, -0.5]), np.array([1.1, 0.4])
    assert np.allclose(n_matrices(first) @ n_matrices(second), n_matrices(first + second), atol=1e-12)


def test_iwasawa_round_trip(element):
    factors = iwasawa_nak(element)
    assert np.allclose(factors.element().matrix, element.matrix, atol=1e-9)


def test_iwasawa_factors_are_unique(rng):
    rotation = random_rotation(4, rng)
    g = make_n([0.5, -1.0, 0.25]) @ make_a(-0.9, 4) @ make_k(rotation)
    factors = iwasawa_nak(g)
    assert factors.t == approx(-0.9)
    assert np.allclose(factors.v, [0.5, -1.0, 0.25])
    assert np.allclose(factors.k, rotation, atol=1e-9)


def test_horospherical_chart_inverts_the_coordinates():
    x = horospherical_coords([0.4, -0.3], 0.6)
    v, t = horospherical_chart(x)
    assert float(t) == approx(0.6)
    assert np.allclose(v, [0.4, -0.3])


def test_point_transport_moves_the_origin():
    x = hyperbolic_coords([0.6, 0.0, 0.8], 1.3)
    assert np.allclose(point_transport(x).apply(origin(3)), x.coords, atol=1e-12)


@mark.parametrize("n, expected", [(2, 2.0 * pi), (4, 8.0 * pi**2)])
def test_radial_measure_integral(n, expected, quad):
    assert radial_measure_integral(exponential_profile(1.0), n, quad) == approx(expected, rel=1e-8)
