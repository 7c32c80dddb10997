from math import cosh

import numpy as np
from pytest import approx, fixture, mark, raises

from horotomo.exceptions import ContractViolation
from horotomo.fields import ScalarField, shifted_bump, zonal_field
from horotomo.horosphere import Horosphere, random_rotation
from horotomo.hyperboloid import HyperbolicPoint, make_a, make_k, make_n, origin, radial_point
from horotomo.profiles import bump_profile, exponential_profile
from horotomo.quadrature import QuadratureSpec
from horotomo.transform import (
    CheckPath,
    HorosphericalImage,
    ImageProvenance,
    SharpnessCriteria,
    check_operator,
    equivariance_residual,
    forward_general,
    forward_zonal,
    fubini_identity_residual,
    horospherical_image,
    mean_value,
    phi_term,
    resolve_path,
    sharpness_probe,
    sharpness_verdict,
    spherical_mean,
    spherical_mean_limit_residual,
    spherical_mean_norm,
    symmetric_check,
    user_image,
    weighted_zonal_identity_residual,
    zonal_mean_values,
)


@fixture
def exp_field():
    return zonal_field(exponential_profile(1.0), 3)


@fixture
def cheap_quad() -> QuadratureSpec:
    return QuadratureSpec(rel_tolerance=1e-6, abs_tolerance=1e-9, sphere_order=6)


@mark.parametrize("n, d", [(2, 1), (3, 1), (3, 2), (4, 2)])
def test_quadrature_matches_the_closed_form(n, d, rng, quad):
    f = zonal_field(exponential_profile(1.5), n)
    u = rng.uniform(-0.5, 0.5, n - 1 - d)
    xi = Horosphere(n=n, d=d, k=random_rotation(n, rng), t=0.3, u=u)
    exact = forward_zonal(f.profile, 0.3, float(np.linalg.norm(u)), d, quad)
    assert forward_general(f, xi, quad) == approx(exact, rel=1e-4)


def test_closed_form_on_the_basic_horosphere(quad):
    # I^{1/2} of e^{-(s-1)} is itself, so the transform at t = 0 is c e^0
    value = forward_zonal(exponential_profile(1.0), 0.0, 0.0, 1, quad)
    assert value == approx(np.sqrt(2.0 * np.pi), rel=1e-9)


def test_shifted_images_match_quadrature(rng, quad):
    f = shifted_bump(3)
    image = horospherical_image(f, 1, quad)
    assert image.provenance == ImageProvenance.exact_zonal
    for t in (-0.4, 0.2, 0.9):
        xi = Horosphere(n=3, d=1, k=random_rotation(3, rng), t=t, u=[0.3])
        assert image.evaluate(xi) == approx(forward_general(f, xi, quad), rel=1e-4, abs=1e-8)


def test_general_fields_are_transformed_by_quadrature(quad):
    f = ScalarField(
        n=3, function=lambda coords: np.exp(-coords[..., -1]) * (1.0 + 0.3 * coords[..., 0]), decay_rate=1.0
    )
    image = horospherical_image(f, 2, quad)
    assert image.provenance == ImageProvenance.quadrature
    xi = Horosphere(n=3, d=2, k=np.eye(3), t=0.1, u=[])
    assert image(xi) == approx(forward_general(f, xi, quad))


def test_images_check_the_horosphere_type(exp_field, quad):
    image = horospherical_image(exp_field, 1, quad)
    with raises(ContractViolation):
        image.evaluate(Horosphere(n=3, d=2, k=np.eye(3), t=0.0, u=[]))
    with raises(ContractViolation):
        forward_general(exp_field, Horosphere(n=4, d=2, k=np.eye(4), t=0.0, u=[0.0]), quad)


def test_transform_commutes_with_the_group(exp_field, quad):
    gamma = make_k(np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])) @ make_a(0.4, 3) @ make_n([0.3, 0.1])
    xi = Horosphere(n=3, d=1, k=np.eye(3), t=-0.2, u=[0.5])
    assert equivariance_residual(exp_field, xi, gamma, quad) < 1e-6


def test_spherical_means_of_zonal_fields(exp_field, quad):
    x = radial_point(3, 1.5)
    rho = np.arccosh(1.5)
    expected = zonal_mean_values(exp_field.profile, rho, np.array([1.7]), 3, quad)[0]
    assert spherical_mean(exp_field, x, 1.7, quad) == approx(expected, rel=1e-8)
    assert spherical_mean(exp_field, x, 1.0, quad) == approx(exp_field.evaluate(x))


def test_spherical_means_need_heights_above_one(exp_field, quad):
    with raises(ContractViolation):
        spherical_mean(exp_field, origin(3), 0.5, quad)


def test_spherical_means_tend_to_the_field(quad):
    f = shifted_bump(3)
    points = [radial_point(3, 1.2), radial_point(3, 1.6)]
    near, far = spherical_mean_limit_residual(f, points, [1.0001, 1.01], quad)
    assert near < 1e-3
    assert near < far


def test_spherical_means_do_not_increase_norms(exp_field, quad):
    mean_norm, field_norm = spherical_mean_norm(exp_field, 1.5, 2.0, quad)
    assert mean_norm <= field_norm * 1.01


PATHS_FIELDS = [zonal_field(exponential_profile(1.0), 3), shifted_bump(3)]


@mark.parametrize("d", [1, 2])
@mark.parametrize("f", PATHS_FIELDS, ids=["zonal", "shifted"])
def test_mean_value_paths_agree(f, d, cheap_quad):
    image = horospherical_image(f, d, cheap_quad)
    x = radial_point(3, 1.3)
    times = np.array([-0.5, 0.0, 0.4, 1.0])
    sphere = mean_value(image, x, times, cheap_quad, CheckPath.sphere)
    k_rule = mean_value(image, x, times, cheap_quad, CheckPath.k_rule)
    assert k_rule == approx(sphere, rel=1e-4, abs=1e-8)
    assert mean_value(image, x, times, cheap_quad) == approx(k_rule)


def test_invariant_images_use_the_reduced_rule(exp_field, cheap_quad):
    image = horospherical_image(exp_field, 1, cheap_quad)
    assert image.k_invariant
    assert not horospherical_image(shifted_bump(3), 1, cheap_quad).k_invariant
    generic = user_image(image.function, 3, 1)
    x = HyperbolicPoint(coords=[0.3, -0.2, 0.5, np.sqrt(1.38)])
    times = np.array([-0.3, 0.6])
    assert mean_value(image, x, times, cheap_quad) == approx(mean_value(generic, x, times, cheap_quad), rel=1e-5)


def test_mean_values_read_the_image_and_not_its_source(exp_field, quad):
    blank = HorosphericalImage(
        n=3,
        d=2,
        function=lambda ks, ts, us: np.zeros(np.shape(ts)),
        provenance=ImageProvenance.user,
        source=exp_field,
    )
    x = radial_point(3, 1.3)
    assert mean_value(blank, x, 0.4, quad) == 0.0
    assert check_operator(blank, x, quad) == 0.0
    assert mean_value(blank, x, 0.4, quad, CheckPath.sphere) > 0.0


def test_check_operator_at_the_centre_is_the_image(exp_field, quad):
    image = horospherical_image(exp_field, 1, quad)
    expected = forward_zonal(exp_field.profile, 0.0, 0.0, 1, quad)
    assert check_operator(image, origin(3), quad) == approx(expected, rel=1e-8)


def test_symmetric_check_is_even_in_t(exp_field, quad):
    image = horospherical_image(exp_field, 1, quad)
    even = symmetric_check(image, origin(3), quad)
    t = 0.5
    expected = np.exp(0.5 * t) * forward_zonal(exp_field.profile, t, 0.0, 1, quad)
    expected += np.exp(-0.5 * t) * forward_zonal(exp_field.profile, -t, 0.0, 1, quad)
    assert float(even(np.array(cosh(t) - 1.0))) == approx(expected, rel=1e-6)
    assert even.tau_max > 30.0


def test_path_resolution(exp_field, quad):
    image = horospherical_image(exp_field, 1, quad)
    assert resolve_path(image, "auto") == CheckPath.k_rule
    assert resolve_path(image, "sphere") == CheckPath.sphere
    measured = user_image(image.function, 3, 1)
    assert resolve_path(measured, "auto") == CheckPath.k_rule
    with raises(ContractViolation):
        resolve_path(measured, CheckPath.sphere)
    with raises(ValueError):
        resolve_path(image, "polar")


def test_correction_term_forms(exp_field, quad):
    image = horospherical_image(exp_field, 1, quad)
    with raises(ContractViolation):
        phi_term(image, origin(3), quad, form="volume")
    with raises(ContractViolation):
        phi_term(user_image(image.function, 3, 1), origin(3), quad)
    assert phi_term(image, origin(3), quad, form="field") == approx(
        phi_term(image, origin(3), quad, form="kernel"), rel=1e-4
    )


def test_fubini_identity(exp_field, rng, quad):
    assert fubini_identity_residual(exp_field, random_rotation(3, rng), 1, quad) < 1e-4


def test_fubini_identity_for_hypersurfaces(quad):
    f = zonal_field(bump_profile(0.0, 2.0), 3)
    assert fubini_identity_residual(f, np.eye(3), 2, quad) < 1e-4


@mark.parametrize("n, d, alpha", [(3, 1, 1.0), (4, 2, 2.5)])
def test_weighted_zonal_identity(n, d, alpha, quad):
    f = zonal_field(exponential_profile(1.0), n)
    assert weighted_zonal_identity_residual(f, alpha, d, quad) < 1e-4


def test_weighted_identity_needs_a_centred_field(quad):
    with raises(ContractViolation):
        weighted_zonal_identity_residual(shifted_bump(3), 1.0, 1, quad)


def test_sharpness_probes_grow_with_the_cutoff(quad):
    low = sharpness_probe(2.0, 3, 1, 1e2, quad)
    high = sharpness_probe(2.0, 3, 1, 1e3, quad)
    assert 0.0 < low[0] < high[0]
    assert 0.0 < low[1] < high[1]
    with raises(ContractViolation):
        sharpness_probe(2.0, 3, 1, 2.0, quad)


def test_sharpness_verdict_past_the_critical_exponent():
    verdict = sharpness_verdict(4.0, 3, 1, [1.0, 1.001, 1.002], [1.0, 1.5, 2.0])
    assert verdict.divergent
    assert verdict.passed
    assert not sharpness_verdict(4.0, 3, 1, [1.0, 1.001, 1.002], [1.0, 1.01, 1.02]).passed


def test_sharpness_verdict_below_the_critical_exponent():
    verdict = sharpness_verdict(2.0, 3, 1, [1.0, 1.01, 1.011], [1.0, 1.1, 1.101])
    assert not verdict.divergent
    assert verdict.passed
    assert verdict.transform_ratio == approx(0.01)
    assert not sharpness_verdict(2.0, 3, 1, [1.0, 1.01, 1.011], [1.0, 2.0, 3.0]).passed


def test_sharpness_verdict_needs_two_probes():
    with raises(ContractViolation):
        sharpness_verdict(2.0, 3, 1, [1.0], [1.0])
    with raises(ContractViolation):
        sharpness_verdict(2.0, 3, 1, [1.0, 2.0], [1.0])


def test_sharpness_verdict_defaults_to_the_strict_thresholds():
    creeping = [1.0, 1.1, 1.115]
    assert not sharpness_verdict(2.0, 3, 1, [1.0, 1.01, 1.011], creeping).passed
    relaxed = sharpness_verdict(2.0, 3, 1, [1.0, 1.01, 1.011], creeping, SharpnessCriteria.logarithmic())
    assert relaxed.passed
    assert relaxed.criteria.transform_change == 0.03
    drifting = [1.0, 1.001, 1.013]
    assert not sharpness_verdict(4.0, 3, 1, drifting, [1.0, 1.5, 2.0]).passed
    assert sharpness_verdict(4.0, 3, 1, drifting, [1.0, 1.5, 2.0], SharpnessCriteria.logarithmic()).passed
