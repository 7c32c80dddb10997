from concurrent.futures import ThreadPoolExecutor
from math import cosh

import numpy as np
from pydantic import ValidationError
from pytest import approx, fixture, mark, raises

from horotomo.exceptions import ContractViolation, InsufficientSmoothness, ParameterError, ReconstructionUnstable
from horotomo.extrapolation import Extrapolation
from horotomo.fields import shifted_bump, zero_mean_field, zonal_field
from horotomo.hyperboloid import radial_point
from horotomo.inversion import (
    ErrorBudget,
    InversionSpec,
    LaplacePolynomial,
    PotentialSpec,
    ReconstructionReport,
    apply_laplace_polynomial,
    beltrami_radial,
    d_alpha_recursion_residual,
    eigen_residual,
    fuglede_residual,
    invert_mean_value,
    invert_poly_even_d,
    invert_poly_general,
    n2_correction,
    n2_identity_residual,
    pointwise_profile,
    potential_q_alpha,
    reconstruct_mean_value,
    reconstruct_points,
)
from horotomo.profiles import Profile1D, bump_profile, exponential_profile
from horotomo.quadrature import QuadratureSpec
from horotomo.transform import HorosphericalImage, ImageProvenance, horospherical_image, user_image


@fixture(scope="module")
def fine_quad() -> QuadratureSpec:
    return QuadratureSpec()


def test_laplace_polynomials():
    p1 = LaplacePolynomial.p_ell(3, 1)
    assert p1.factors == [1.0]
    assert p1.scale == -1.0
    assert LaplacePolynomial.d_alpha(3, 2.0).factors == p1.factors
    assert LaplacePolynomial.p_ell(5, 2).sign == 1.0
    assert LaplacePolynomial.even_d(5, 4).degree == 2
    with raises(ParameterError):
        LaplacePolynomial.even_d(3, 1)
    with raises(ParameterError):
        LaplacePolynomial.p_ell(3, 0)
    with raises(ValidationError):
        LaplacePolynomial(n=3, factors=[])


def test_height_is_a_laplace_eigenfunction():
    heights = np.array([1.0, 1.5, 3.0])
    values = beltrami_radial(Profile1D(function=lambda s: s), heights, 3)
    assert np.allclose(values, 3.0 * heights, rtol=1e-5)


def test_laplacian_of_a_quadratic():
    heights = np.array([1.0, 1.2, 2.0])
    values = beltrami_radial(Profile1D(function=lambda s: s**2), heights, 4)
    assert np.allclose(values, 10.0 * heights**2 - 2.0, rtol=1e-5)


def test_composed_polynomials():
    height = Profile1D(function=lambda s: s)
    shifted = apply_laplace_polynomial(LaplacePolynomial(n=3, factors=[-3.0]), height)
    assert abs(float(shifted(1.7))) < 1e-5
    squared = apply_laplace_polynomial(LaplacePolynomial(n=3, factors=[0.0, 0.0], constant=2.0), height)
    assert float(squared(1.7)) == approx(2.0 * 9.0 * 1.7, rel=1e-5)


def test_laplacians_need_smooth_profiles():
    sampled = Profile1D.sampled(np.exp, 1.0, 3.0, 1e-9)
    with raises(InsufficientSmoothness):
        apply_laplace_polynomial(LaplacePolynomial(n=3, factors=[0.0, 0.0]), sampled)
    with raises(ContractViolation):
        beltrami_radial(Profile1D(function=lambda s: s), 0.5, 3)


def test_pointwise_profiles_evaluate_each_height_once():
    calls = []

    def evaluate(s: float) -> float:
        calls.append(s)
        return 2.0 * s

    profile = pointwise_profile(evaluate, "double")
    assert profile(np.array([1.0, 2.0, 1.0])).tolist() == [2.0, 4.0, 2.0]
    assert profile(np.array([[2.0]])).shape == (1, 1)
    assert len(calls) == 2


def test_inversion_spec():
    spec = InversionSpec()
    assert spec.nodes.size == 7
    assert spec.nodes[0] == approx(1.2)
    assert spec.abort_tolerance == approx(1e-2)
    assert spec.laplace_step(1) == approx(1e-10 ** (1.0 / 6.0))
    for values in ({"delta": 0.0}, {"levels": 0}, {"form": "symmetric"}, {"target_tolerance": -1.0}):
        with raises(ValidationError):
            InversionSpec(**values)


def test_potential_spec():
    assert PotentialSpec(n=3, alpha=3.0).excluded
    assert not PotentialSpec(n=3, alpha=2.0).excluded
    with raises(ParameterError):
        PotentialSpec(n=3, alpha=5.0).constant


def test_error_budgets():
    worst = ErrorBudget.worst([ErrorBudget(quadrature=1e-6), ErrorBudget(differentiation=2e-5, extrapolation=1e-4)])
    assert worst == ErrorBudget(quadrature=1e-6, differentiation=2e-5, extrapolation=1e-4)
    assert worst.total == approx(1.21e-4)
    assert ErrorBudget.worst([]).total == 0.0


def test_reports_compute_their_sup_error():
    report = ReconstructionReport(
        method="test", probes=[1.0, 2.0], reference=[1.0, None], computed=[1.25, 3.0], budgets=[ErrorBudget()] * 2
    )
    assert report.sup_error == 0.25
    assert report.errors == [0.25, None]
    with raises(ValidationError):
        ReconstructionReport(method="test", probes=[1.0], reference=[], computed=[1.0], budgets=[ErrorBudget()])


def test_potential_paths_agree(quad):
    f = shifted_bump(3)
    x = radial_point(3, 1.4)
    profile = potential_q_alpha(f, x, 1.0, quad)
    sphere = potential_q_alpha(f, x, 1.0, quad, path="sphere")
    assert sphere == approx(profile, rel=1e-6)
    assert potential_q_alpha(f, x, 0.0, quad) == f.evaluate(x)
    with raises(ContractViolation):
        potential_q_alpha(f, x, 1.0, quad, path="polar")
    with raises(ParameterError):
        potential_q_alpha(f, x, 3.0, quad)


@mark.parametrize("f", [zonal_field(exponential_profile(1.0), 3), shifted_bump(3)], ids=["zonal", "shifted"])
def test_backprojection_is_a_potential(f, quad):
    image = horospherical_image(f, 1, quad)
    points = [radial_point(3, 1.0), radial_point(3, cosh(0.6))]
    assert fuglede_residual(image, points, quad) < 1e-3


@mark.parametrize("d", [1, 2])
@mark.parametrize(
    "f, tolerance",
    [(zonal_field(exponential_profile(1.0), 3), 1e-2), (shifted_bump(3), 5e-2)],
    ids=["zonal", "shifted"],
)
def test_mean_value_reconstruction(f, tolerance, d, coarse_quad):
    image = horospherical_image(f, d, coarse_quad)
    x = radial_point(3, cosh(0.3))
    record = reconstruct_mean_value(image, x, coarse_quad)
    assert record.value == approx(f.evaluate(x), abs=tolerance)
    assert len(record.nodes) == len(record.values) == 7
    assert record.budget.total >= 0.0


def _data_only(image: HorosphericalImage) -> HorosphericalImage:
    return user_image(image.function, image.n, image.d, image.support_radius, k_invariant=image.k_invariant)


@mark.parametrize("d", [1, 2])
def test_mean_value_reconstruction_from_data_alone(d, quad):
    f = zonal_field(exponential_profile(1.0), 3)
    data = _data_only(horospherical_image(f, d, quad))
    x = radial_point(3, cosh(0.3))
    assert data.source is None
    assert invert_mean_value(data, x, quad, d=d) == approx(f.evaluate(x), abs=1e-2)


def test_mean_value_reconstruction_of_shifted_data(coarse_quad):
    f = shifted_bump(3)
    data = _data_only(horospherical_image(f, 2, coarse_quad))
    x = radial_point(3, cosh(0.3))
    assert not data.k_invariant
    assert reconstruct_mean_value(data, x, coarse_quad, path="k-rule").value == approx(f.evaluate(x), abs=5e-2)


def test_mean_value_paths_reconstruct_alike(coarse_quad):
    f = zonal_field(bump_profile(0.0, 2.0), 3)
    image = horospherical_image(f, 1, coarse_quad)
    x = radial_point(3, cosh(0.3))
    sphere = reconstruct_mean_value(image, x, coarse_quad, path="sphere").value
    assert reconstruct_mean_value(image, x, coarse_quad).value == approx(sphere, abs=1e-2)


def test_mean_value_inversion_checks_the_dimension(quad):
    image = horospherical_image(zonal_field(exponential_profile(1.0), 3), 2, quad)
    with raises(ContractViolation):
        invert_mean_value(image, radial_point(3, 1.2), quad, d=1)


def test_reconstructions_follow_the_data_not_the_source(quad):
    f = zonal_field(exponential_profile(1.0), 3)
    exact = horospherical_image(f, 2, quad)
    doubled = HorosphericalImage(
        n=3,
        d=2,
        function=lambda ks, ts, us: 2.0 * exact.function(ks, ts, us),
        provenance=ImageProvenance.user,
        source=f,
        k_invariant=True,
    )
    x = radial_point(3, cosh(0.3))
    assert invert_mean_value(doubled, x, quad) == approx(2.0 * f.evaluate(x), abs=2e-2)
    report = invert_poly_even_d(doubled, [0.3], quad)
    assert report.computed[0] == approx(2.0 * f.evaluate(x), abs=2e-2)
    assert report.sup_error > 0.5


def test_mean_value_without_extrapolation(quad):
    f = zonal_field(exponential_profile(1.0), 3)
    image = horospherical_image(f, 2, quad)
    x = radial_point(3, 1.2)
    assert invert_mean_value(image, x, quad, Extrapolation.none) == approx(f.evaluate(x), abs=2e-2)


def test_unstable_extrapolation_is_reported(quad):
    image = horospherical_image(zonal_field(exponential_profile(1.0), 3), 2, quad)
    spec = InversionSpec(target_tolerance=1e-15, instability_factor=1.0)
    with raises(ReconstructionUnstable) as error:
        reconstruct_mean_value(image, radial_point(3, 1.2), quad, spec)
    assert "extrapolants" in error.value.diagnostics


def test_reconstruct_points_in_parallel(quad):
    f = zonal_field(exponential_profile(1.0), 3)
    image = horospherical_image(f, 2, quad)
    points = [radial_point(3, 1.1), radial_point(3, 1.3)]
    with ThreadPoolExecutor(max_workers=2) as executor:
        report = reconstruct_points(image, points, quad, mapper=executor.map)
    assert report.method == "mean-value"
    assert report.probes == approx([1.1, 1.3])
    assert report.sup_error < 1e-2


PROFILES = [exponential_profile(1.0), bump_profile(0.0, 2.0)]


@mark.parametrize("n", [3, 5])
@mark.parametrize("profile", PROFILES, ids=["exp", "bump"])
def test_even_d_polynomial_inversion(profile, n, coarse_quad):
    image = horospherical_image(zonal_field(profile, n), 2, coarse_quad)
    report = invert_poly_even_d(image, [0.0, 0.6], coarse_quad)
    assert report.method == "poly-even-d"
    assert report.sup_error < 1e-2


@mark.parametrize("profile", PROFILES, ids=["exp", "bump"])
def test_odd_n_polynomial_inversion(profile, quad):
    image = horospherical_image(zonal_field(profile, 3), 1, quad)
    report = invert_poly_general(image, 1, [0.3], quad)
    assert report.method == "poly-odd-n-l1"
    assert report.sup_error < 2e-2


def test_odd_n_with_integer_order_uses_the_even_d_inversion(fine_quad):
    image = horospherical_image(zonal_field(exponential_profile(1.0), 3), 2, fine_quad)
    assert invert_poly_general(image, radii=[0.0], quad=fine_quad).method == "poly-even-d"


def test_plane_polynomial_inversion(fine_quad):
    f = zero_mean_field(2, fine_quad)
    image = horospherical_image(f, 1, fine_quad)
    report = invert_poly_general(image, radii=[0.0, 0.5], quad=fine_quad)
    assert report.method == "poly-n2"
    assert report.sup_error < 2e-2


@mark.slow
@mark.parametrize("profile", PROFILES, ids=["exp", "bump"])
def test_even_n_log_polynomial_inversion(profile, fine_quad):
    image = horospherical_image(zonal_field(profile, 4), 1, fine_quad)
    report = invert_poly_general(image, radii=[0.3], quad=fine_quad)
    assert report.method == "poly-even-n-log"
    assert report.sup_error < 2e-2


@mark.parametrize(
    "n, d, ell, quad_name",
    [(3, 2, None, "coarse_quad"), (3, 1, 1, "quad"), (2, 1, None, "fine_quad")],
    ids=["even-d", "odd-n", "plane"],
)
def test_polynomial_inversion_from_data_alone(n, d, ell, quad_name, request):
    settings = request.getfixturevalue(quad_name)
    f = zero_mean_field(2, settings) if n == 2 else zonal_field(exponential_profile(1.0), n)
    data = _data_only(horospherical_image(f, d, settings))
    radius = 0.3
    report = invert_poly_general(data, ell, [radius], settings, path="k-rule")
    assert data.source is None
    assert report.sup_error is None
    assert report.computed[0] == approx(f.evaluate(radial_point(n, cosh(radius))), abs=2e-2)


def test_polynomial_inversion_of_corrupted_data(quad):
    f = zonal_field(exponential_profile(1.0), 3)
    exact = horospherical_image(f, 1, quad)
    reference = invert_poly_general(exact, 1, [0.3], quad).computed[0]
    bent = user_image(
        lambda ks, ts, us: exact.function(ks, ts, us) * (1.0 + 0.5 * np.exp(-ts**2)), 3, 1, k_invariant=True
    )
    assert abs(invert_poly_general(bent, 1, [0.3], quad).computed[0] - reference) > 0.05


def test_polynomial_inversion_preconditions(quad):
    centred = horospherical_image(zonal_field(exponential_profile(1.0), 3), 1, quad)
    with raises(ContractViolation):
        invert_poly_even_d(horospherical_image(shifted_bump(3), 2, quad), [0.0], quad)
    with raises(ParameterError):
        invert_poly_even_d(centred, [0.0], quad)
    with raises(ParameterError):
        invert_poly_general(centred, 0, [0.0], quad)
    with raises(ParameterError):
        invert_poly_general(horospherical_image(zonal_field(exponential_profile(1.0), 4), 1, quad), 1, [0.0], quad)
    with raises(ContractViolation):
        invert_poly_general(centred, 1, [], quad)


def test_plane_correction_is_a_quarter_of_the_mass_over_pi(quad):
    image = horospherical_image(zonal_field(exponential_profile(1.0), 2), 1, quad)
    assert n2_correction(image, quad) == approx(0.5, rel=1e-6)


@mark.parametrize("n, orders", [(3, [2.0]), (4, [2.0, 4.0])])
def test_potential_recursion(n, orders):
    f = zonal_field(bump_profile(0.0, 2.0), n)
    for alpha in orders:
        assert d_alpha_recursion_residual(f, alpha) < 1e-3


def test_recursion_needs_alpha_of_at_least_two():
    with raises(ParameterError):
        d_alpha_recursion_residual(zonal_field(bump_profile(0.0, 2.0), 3), 1.0)


def test_b_is_a_laplace_eigenfunction():
    assert eigen_residual(zonal_field(bump_profile(0.0, 2.0), 4)) < 1e-3


def test_plane_identity():
    assert n2_identity_residual(zonal_field(bump_profile(0.0, 2.0), 2)) < 1e-2
    with raises(ParameterError):
        n2_identity_residual(zonal_field(bump_profile(0.0, 2.0), 3))
