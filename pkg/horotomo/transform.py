"""The d-horospherical transform, spherical means, the mean value operator and the weighted duals H*^α.

Horospherical images are evaluated in batches: ``image.batch(ks, ts, us)`` takes rotation blocks of shape
(..., n, n), abelian parameters of shape (...) and nilpotent parameters of shape (..., n - 1 - d), all
broadcast against each other.
"""
import warnings
from enum import Enum
from logging import Logger, getLogger
from math import acosh, ceil, cosh, exp, gamma, inf, log, log2, pi, sqrt
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, PrivateAttr
from scipy.special import roots_legendre

from .constants import (
    dual_constant,
    gamma_ratio,
    kernel_correction_constant,
    log_correction_constant,
    log_dual_constant,
    sphere_area,
    weighted_constant,
    zonal_constant,
)
from .exceptions import AccuracyWarning, ContractViolation
from .fields import ScalarField, ZonalField
from .fractional import fractional_integral, integrated_profile
from .horosphere import (
    Horosphere,
    embed_u,
    embed_w,
    horosphere_from_group,
    horosphere_parameters,
    invariant_k_rule,
    k_rule,
)
from .hyperboloid import (
    HyperbolicPoint,
    LorentzElement,
    a_matrices,
    distance_to_origin,
    geodesic_distance,
    horospherical_points,
    k_matrices,
    n_matrices,
    point_transport,
    origin,
    radial_measure_integral,
)
from .profiles import Profile1D, RadialProfile, geodesic_support, sharpness_profile
from .quadrature import (
    QuadratureSpec,
    integrate,
    integrate_sphere,
    log_weighted_integral,
    power_weighted_integral,
    sphere_rule,
)
from .utils import FloatArray, MemoCache, as_float_array

logger: Logger = getLogger(__name__)

Scalar = Union[float, FloatArray]
BatchEvaluator = Callable[[FloatArray, FloatArray, FloatArray], FloatArray]

K_BATCH = 200_000
"""Largest number of horospheres evaluated in one call of an image"""
SETTLING_TIMES = (-2.0, -1.0, 0.0, 1.0, 2.0)
"""Abelian parameters at which the order of a sampled K-average is chosen"""
TABULATION_LIMIT = 1e3
"""Largest height up to which exact zonal images are tabulated"""


def _scalar(value: Any) -> Scalar:
    array = as_float_array(value)
    return float(array) if array.ndim == 0 else array


class ImageProvenance(str, Enum):
    exact_zonal = "exact-zonal"
    quadrature = "quadrature"
    user = "user"


class CheckPath(str, Enum):
    """How K-averages of images are computed"""

    auto = "auto"
    sphere = "sphere"
    k_rule = "k-rule"


class HorosphericalImage(BaseModel):
    """A function on the d-horospheres of H^n"""

    n: int
    d: int
    function: BatchEvaluator
    """Batch evaluator on horosphere parameters"""
    provenance: ImageProvenance
    source: Optional[ScalarField] = None
    """The field the image was computed from, if any"""
    support_radius: float = inf
    """The image vanishes on horospheres farther than this from x₀"""
    k_invariant: bool = False
    """φ(kξ) = φ(ξ) for every rotation k, as for images of fields zonal about x₀"""
    name: str = "image"
    _cache: MemoCache = PrivateAttr(default_factory=lambda: MemoCache("image values"))

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    def batch(self, ks: npt.ArrayLike, ts: npt.ArrayLike, us: npt.ArrayLike) -> FloatArray:
        """Evaluates the image on the horospheres k a_t n_u ξ₀, broadcasting the parameters"""
        k_array, t_array, u_array = as_float_array(ks), as_float_array(ts), as_float_array(us)
        shape = np.broadcast_shapes(k_array.shape[:-2], t_array.shape, u_array.shape[:-1])
        k_array = np.broadcast_to(k_array, shape + k_array.shape[-2:])
        t_array = np.broadcast_to(t_array, shape)
        u_array = np.broadcast_to(u_array, shape + u_array.shape[-1:])
        return np.asarray(self.function(k_array, t_array, u_array), dtype=np.float64)

    def evaluate(self, xi: Horosphere) -> float:
        """The value on one horosphere, memoised on its parameters"""
        if (xi.n, xi.d) != (self.n, self.d):
            raise ContractViolation(f"Horosphere of type {(xi.n, xi.d)} passed to an image on {(self.n, self.d)}")
        key = (np.round(xi.k, 12).tobytes(), round(xi.t, 12), np.round(xi.u, 12).tobytes())
        return self._cache.get_or_insert(key, lambda: float(self.batch(xi.k, xi.t, xi.u)))

    def __call__(self, xi: Horosphere) -> float:
        return self.evaluate(xi)


def forward_zonal(f0: Profile1D, t: npt.ArrayLike, u_norm: npt.ArrayLike, d: int, quad: QuadratureSpec) -> Scalar:
    """c e^{-td/2} (I^{d/2} f₀)(η) with η = cosh t + |u|² e^t / 2, the transform of a centred zonal field

    :param f0: The profile
    :param t: Abelian parameter(s)
    :param u_norm: Norm(s) of the nilpotent parameter
    :param d: Dimension of the horospheres
    :param quad: The quadrature controls
    :raises DivergenceError: when f₀ decays too slowly for the order d/2
    """
    times, norms = np.broadcast_arrays(as_float_array(t), as_float_array(u_norm))
    eta = np.cosh(times) + 0.5 * norms**2 * np.exp(times)
    integral = as_float_array(fractional_integral(f0, eta, d / 2.0, quad).value)
    return _scalar(zonal_constant(d) * np.exp(-0.5 * d * times) * integral)


def tabulated_kernel(f0: Profile1D, d: int, quad: QuadratureSpec) -> Profile1D:
    """η ↦ (I^{d/2} f₀)(η), sampled on [1, η_max] when f₀ is compactly supported or decays exponentially

    Profiles with algebraic tails, or whose tail reaches past TABULATION_LIMIT, stay analytic.
    """
    kernel = integrated_profile(f0, d / 2.0, quad)
    if f0.support_max is None and f0.decay_rate is None:
        return kernel
    upper = float(f0.upper_limit(1.0, d / 2.0, quad))
    if not 1.0 < upper <= TABULATION_LIMIT:
        return kernel
    return Profile1D.sampled(kernel, 1.0, upper, 0.1 * sampling_tolerance(quad), name=kernel.name)


def _zonal_batch(field: ZonalField, d: int, quad: QuadratureSpec) -> BatchEvaluator:
    n = field.n
    kernel = tabulated_kernel(field.profile, d, quad)
    constant = zonal_constant(d)

    def closed_form(times: FloatArray, norms: FloatArray) -> FloatArray:
        eta = np.cosh(times) + 0.5 * norms**2 * np.exp(times)
        return constant * np.exp(-0.5 * d * times) * kernel(eta)

    if field.centered:

        def centred(ks: FloatArray, ts: FloatArray, us: FloatArray) -> FloatArray:
            return closed_form(ts, np.linalg.norm(us, axis=-1))

        return centred
    back = field.center_transport().inverse().matrix

    def shifted(ks: FloatArray, ts: FloatArray, us: FloatArray) -> FloatArray:
        moved = back @ k_matrices(ks) @ a_matrices(ts, n) @ n_matrices(embed_u(us, n))
        _, times, offsets = horosphere_parameters(moved, d)
        return closed_form(times, np.linalg.norm(offsets, axis=-1))

    return shifted


def forward_general(f: ScalarField, xi: Horosphere, quad: QuadratureSpec) -> float:
    """∫_{R^d} f(k a_t n_u n_w x₀) dw by quadrature

    The offsets are rescaled by w = e^{-t/2} w' and integrated in polar coordinates up to the height where f
    becomes negligible.

    :raises DivergenceError: when f is not integrable over horospheres
    """
    if f.n != xi.n:
        raise ContractViolation(f"Field on H^{f.n} cannot be integrated over horospheres of H^{xi.n}")
    n, d = xi.n, xi.d
    eta = cosh(xi.t) + 0.5 * float(np.sum(xi.u**2)) * exp(xi.t)
    limit = f.height_limit(d / 2.0, quad)
    if limit <= eta:
        return 0.0
    rho_max = sqrt(2.0 * (limit - eta))
    directions, weights = sphere_rule(d, quad.sphere_order)
    outer = k_matrices(xi.k) @ a_matrices(xi.t, n)
    base = embed_u(xi.u, n)
    shrink = exp(-0.5 * xi.t)

    def radial(rho: FloatArray) -> FloatArray:
        offsets = shrink * rho[..., None, None] * directions
        v = base + embed_w(offsets, n)
        points = np.einsum("ij,...j->...i", outer, horospherical_points(v, np.zeros(v.shape[:-1])))
        return rho ** (d - 1) * (f(points) @ weights)

    result = integrate(radial, 0.0, rho_max, quad)
    return sphere_area(d - 1) * exp(-0.5 * d * xi.t) * float(result.value)


def horospherical_image(f: ScalarField, d: int, quad: QuadratureSpec) -> HorosphericalImage:
    """The image f̂, from the tabulated closed form for zonal fields and by quadrature otherwise"""
    if isinstance(f, ZonalField):
        return HorosphericalImage(
            n=f.n,
            d=d,
            function=_zonal_batch(f, d, quad),
            provenance=ImageProvenance.exact_zonal,
            source=f,
            support_radius=f.support_radius,
            k_invariant=f.centered,
            name=f"image of {f.name}",
        )
    n = f.n

    def by_quadrature(ks: FloatArray, ts: FloatArray, us: FloatArray) -> FloatArray:
        out = np.empty(ts.shape)
        for index in np.ndindex(ts.shape):
            out[index] = forward_general(f, Horosphere(n=n, d=d, k=ks[index], t=ts[index], u=us[index]), quad)
        return out

    return HorosphericalImage(
        n=n,
        d=d,
        function=by_quadrature,
        provenance=ImageProvenance.quadrature,
        source=f,
        support_radius=f.support_radius,
        name=f"image of {f.name}",
    )


def user_image(
    function: BatchEvaluator,
    n: int,
    d: int,
    support_radius: float = inf,
    name: str = "user image",
    k_invariant: bool = False,
) -> HorosphericalImage:
    """Wraps measured or synthetic data given as a batch evaluator on horosphere parameters

    :param k_invariant: Whether the data are unchanged by rotations about x₀, which shrinks K-averages to a
        rule on S^{n-1}
    """
    return HorosphericalImage(
        n=n,
        d=d,
        function=function,
        provenance=ImageProvenance.user,
        support_radius=support_radius,
        k_invariant=k_invariant,
        name=name,
    )


def zonal_mean_values(f0: Profile1D, rho: float, s: npt.ArrayLike, n: int, quad: QuadratureSpec) -> FloatArray:
    """M_x f(s) for f = f₀([·, c]) with ρ the distance from x to c

    The sphere around x is parametrised by the angle ψ to the geodesic towards c, so that
    [y, c] = s cosh ρ - (s² - 1)^{1/2} sinh ρ cos ψ with density sin^{n-2} ψ.
    """
    heights = as_float_array(s)
    if rho < 1e-14:
        return as_float_array(f0(heights))
    ch, sh = cosh(rho), np.sinh(rho)
    root = np.sqrt(np.clip(heights**2 - 1.0, 0.0, None))
    normaliser = sqrt(pi) * gamma_ratio([(n - 1) / 2.0], [n / 2.0])

    def integrand(psi: FloatArray) -> FloatArray:
        pairing = heights[..., None] * ch - root[..., None] * sh * np.cos(psi)
        return f0(np.maximum(pairing, 1.0)) * np.sin(psi) ** (n - 2)

    result = integrate(integrand, np.zeros_like(heights), np.full_like(heights, pi), quad)
    return as_float_array(result.value) / normaliser


def spherical_mean(f: ScalarField, x: HyperbolicPoint, s: npt.ArrayLike, quad: QuadratureSpec) -> Scalar:
    """The normalised average of f over the sphere {y: [x, y] = s}, by a product rule on S^{n-1}

    :raises ContractViolation: when s < 1
    """
    heights = as_float_array(s)
    if np.any(heights < 1.0):
        raise ContractViolation("Spherical means need s >= 1")
    radius = np.arccosh(heights)
    transport = point_transport(x).matrix
    n = x.n

    def on_sphere(theta: FloatArray) -> FloatArray:
        shape = radius.shape + theta.shape[:1]
        local = np.concatenate(
            [np.sinh(radius)[..., None, None] * theta, np.broadcast_to(np.cosh(radius)[..., None, None], shape + (1,))],
            axis=-1,
        )
        return f(np.einsum("ij,...j->...i", transport, local))

    return _scalar(integrate_sphere(on_sphere, n, quad).value)


def sampling_tolerance(quad: QuadratureSpec) -> float:
    """Midpoint tolerance of sampled profiles"""
    return 10.0 * max(quad.abs_tolerance, quad.rel_tolerance)


def spherical_mean_profile(
    f: ScalarField, x: HyperbolicPoint, quad: QuadratureSpec, sampled: bool = True
) -> Profile1D:
    """The profile g_x(s) = M_x f(s)

    Zonal fields use the one dimensional angular integral, other fields the sphere rule. Sampled profiles
    are quintic splines on [1, S_x] reused by nested integrals.
    """
    n = x.n
    if isinstance(f, ZonalField):
        rho = geodesic_distance(x, f.center_point)
        f0 = f.profile
        function: Callable[[FloatArray], FloatArray] = lambda s: zonal_mean_values(f0, rho, s, n, quad)
        radius = geodesic_support(f0) + rho
        decay_rate = None if f0.decay_rate is None else f0.decay_rate * exp(-rho)
        decay_mu = f0.decay_mu
    else:
        rho = distance_to_origin(x)
        function = lambda s: as_float_array(spherical_mean(f, x, s, quad))
        radius = f.support_radius + rho
        decay_rate = None if f.decay_rate is None else f.decay_rate * exp(-rho)
        decay_mu = f.decay_mu
    if not np.isfinite(radius) and decay_rate is None and decay_mu is None:
        radius = quad.truncation_radius + rho
    analytic = Profile1D(
        function=function,
        support_max=cosh(radius) if np.isfinite(radius) else None,
        decay_mu=decay_mu,
        decay_rate=decay_rate,
        name=f"M_x {f.name}",
    )
    if not sampled:
        return analytic
    upper = float(analytic.upper_limit(1.0, float(n), quad))
    if upper <= 1.0:
        return analytic
    return Profile1D.sampled(function, 1.0, upper, sampling_tolerance(quad), name=analytic.name)


def resolve_path(phi: HorosphericalImage, path: Union[str, CheckPath]) -> CheckPath:
    """The concrete path for an image, the k-rule unless the sphere path is asked for

    The sphere path reads the source field instead of φ and serves as a reference for images that know it.

    :raises ContractViolation: when the sphere path is asked for an image without a source field
    """
    chosen = CheckPath(path)
    if chosen == CheckPath.auto:
        return CheckPath.k_rule
    if chosen == CheckPath.sphere and phi.source is None:
        raise ContractViolation(f"Image {phi.name} has no source field, use the k-rule path")
    return chosen


def k_average(phi: HorosphericalImage, x: HyperbolicPoint, t: FloatArray, order: int) -> FloatArray:
    """φ̌_x(t) by the K rule of one order, in batches of at most K_BATCH horospheres

    K-invariant images are averaged at the radial point at the distance of x, where the rotations fixing e_n
    drop out and the rule reduces to invariant_k_rule.
    """
    if phi.k_invariant:
        ks, weights = invariant_k_rule(phi.n, phi.d, order)
        transport = a_matrices(distance_to_origin(x), phi.n) @ k_matrices(ks)
    else:
        ks, weights = k_rule(phi.n, phi.d, order)
        transport = point_transport(x).matrix @ k_matrices(ks)
    flat = as_float_array(t).ravel()
    out = np.empty(flat.shape)
    step = max(1, K_BATCH // weights.size)
    for start in range(0, flat.size, step):
        groups = transport @ a_matrices(flat[start : start + step, None], phi.n)
        rotations, times, offsets = horosphere_parameters(groups, phi.d)
        out[start : start + step] = phi.batch(rotations, times, offsets) @ weights
    return out.reshape(np.shape(t))


def _settle(
    phi: HorosphericalImage,
    x: HyperbolicPoint,
    times: FloatArray,
    quad: QuadratureSpec,
    refinements: int,
    limit: Optional[float] = None,
) -> Tuple[int, int, FloatArray, FloatArray, bool]:
    order = coarse = quad.sphere_order
    previous = k_average(phi, x, times, order)
    error = np.zeros_like(previous)
    for _ in range(refinements):
        coarse, order = order, order + max(2, order // 2)
        current = k_average(phi, x, times, order)
        error = np.abs(current - previous)
        previous = current
        admissible = quad.tolerance(current) if limit is None else limit
        if np.all(error <= admissible):
            logger.debug("K-average of %s settled at order %s", phi.name, order)
            return coarse, order, current, error, True
    return coarse, order, previous, error, False


def _unsettled(phi: HorosphericalImage, order: int, value: FloatArray, error: FloatArray) -> None:
    logger.warning("K-average of %s stopped at order %s with error %s", phi.name, order, float(np.max(error)))
    warnings.warn(AccuracyWarning(f"K-average of {phi.name} did not settle", value, error), stacklevel=3)


def k_rule_order(phi: HorosphericalImage, x: HyperbolicPoint, quad: QuadratureSpec, refinements: int = 3) -> int:
    """The K rule order used for a whole sampled profile of φ̌_x

    The order is raised until two successive rules agree to the sampling tolerance on SETTLING_TIMES; the
    lower of the two is kept.
    """
    times = as_float_array(SETTLING_TIMES)
    coarse, order, value, error, settled = _settle(phi, x, times, quad, refinements, sampling_tolerance(quad))
    if not settled:
        _unsettled(phi, order, value, error)
        return order
    return coarse


def data_reach(function: Callable[[FloatArray], FloatArray], upper: float, tolerance: float) -> float:
    """The first height 1 + 2^j beyond which |function| stays below tolerance, scanned up to upper

    Only the scanned heights are looked at, so the function must not come back between them.

    :param function: Vectorised function of heights s ≥ 1
    :param upper: Largest height where the function may not vanish
    :param tolerance: Level relative to max(1, peak) counted as zero
    :returns: A height in (1, upper]
    """
    if not upper > 1.0:
        raise ContractViolation(f"Cannot scan heights up to {upper}")
    top = ceil(log2(upper - 1.0))
    heights = 1.0 + 2.0 ** np.arange(-2.0, top + 1.0)
    heights = np.append(heights[heights < upper], upper)
    values = np.abs(as_float_array(function(heights)))
    above = np.flatnonzero(values > tolerance * max(1.0, float(np.max(values))))
    if above.size == 0:
        return float(heights[0])
    return float(heights[min(above[-1] + 1, heights.size - 1)])


def mean_value(
    phi: HorosphericalImage,
    x: HyperbolicPoint,
    t: npt.ArrayLike,
    quad: QuadratureSpec,
    path: Union[str, CheckPath] = CheckPath.auto,
    refinements: int = 3,
) -> Scalar:
    """φ̌_x(t) = ∫_K φ(r_x k a_t ξ₀) dk

    The k-rule path integrates over k = R(θ) diag(Q, 1) and raises the rule order until it settles. The sphere
    path uses φ̌_x(t) = c e^{-td/2} (I^{d/2} M_x f)(cosh t) and never looks at φ.

    :param phi: The image
    :param x: The point the horospheres are transported to
    :param t: Abelian parameter(s)
    :param quad: The quadrature controls
    :param path: "sphere", "k-rule" or "auto", which is the k-rule
    :param refinements: Maximal number of order increases of the k-rule path
    """
    times = as_float_array(t)
    chosen = resolve_path(phi, path)
    if chosen == CheckPath.sphere:
        assert phi.source is not None
        profile = spherical_mean_profile(phi.source, x, quad, sampled=False)
        integral = as_float_array(fractional_integral(profile, np.cosh(times), phi.d / 2.0, quad).value)
        return _scalar(zonal_constant(phi.d) * np.exp(-0.5 * phi.d * times) * integral)
    _, order, value, error, settled = _settle(phi, x, times, quad, refinements)
    if not settled:
        _unsettled(phi, order, value, error)
    return _scalar(value)


def check_operator(
    phi: HorosphericalImage, x: HyperbolicPoint, quad: QuadratureSpec, path: Union[str, CheckPath] = CheckPath.auto
) -> float:
    """φ̌(x), the average of φ over all d-horospheres through x"""
    return float(mean_value(phi, x, 0.0, quad, path))


def image_reach(phi: HorosphericalImage, x: HyperbolicPoint, quad: QuadratureSpec) -> float:
    """cosh of the largest t for which φ̌_x(±t) may not vanish, from the support of the image"""
    radius = phi.support_radius if np.isfinite(phi.support_radius) else quad.truncation_radius
    return cosh(distance_to_origin(x) + radius)


class SymmetricCheck(BaseModel):
    """G(τ) = e^{td/2} φ̌_x(t) + e^{-td/2} φ̌_x(-t) with cosh t = 1 + τ, vanishing beyond tau_max"""

    function: Callable[[FloatArray], FloatArray]
    tau_max: float

    class Config:
        arbitrary_types_allowed = True

    def __call__(self, tau: npt.ArrayLike) -> FloatArray:
        return np.asarray(self.function(as_float_array(tau)), dtype=np.float64)


def symmetric_check(
    phi: HorosphericalImage, x: HyperbolicPoint, quad: QuadratureSpec, path: Union[str, CheckPath] = CheckPath.auto
) -> SymmetricCheck:
    """The even part of the check profile in the variable τ = cosh t - 1, the integrand of the duals

    On the k-rule path G is evaluated at one K rule order and sampled into a spline on [0, tau_max], where
    tau_max is where G drops below the sampling tolerance.
    """
    chosen = resolve_path(phi, path)
    d = phi.d
    if chosen == CheckPath.sphere:
        assert phi.source is not None
        g = spherical_mean_profile(phi.source, x, quad)
        constant = 2.0 * zonal_constant(d)
        return SymmetricCheck(
            function=lambda tau: constant * as_float_array(fractional_integral(g, 1.0 + tau, d / 2.0, quad).value),
            tau_max=float(g.upper_limit(1.0, d / 2.0, quad)) - 1.0,
        )
    order = k_rule_order(phi, x, quad)

    def even_part(tau: FloatArray) -> FloatArray:
        times = np.arccosh(1.0 + np.maximum(tau, 0.0))
        both = k_average(phi, x, np.stack([times, -times]), order)
        return np.exp(0.5 * d * times) * both[0] + np.exp(-0.5 * d * times) * both[1]

    tolerance = sampling_tolerance(quad)
    reach = data_reach(lambda s: even_part(s - 1.0), image_reach(phi, x, quad), tolerance) - 1.0
    sampled = Profile1D.sampled(even_part, 0.0, reach, tolerance, name=f"G_x {phi.name}")
    return SymmetricCheck(function=sampled, tau_max=reach)


def hstar_alpha(
    phi: HorosphericalImage,
    x: HyperbolicPoint,
    alpha: float,
    quad: QuadratureSpec,
    path: Union[str, CheckPath] = CheckPath.auto,
) -> float:
    """H*^α φ(x) = c_α ∫_{K×R} φ(r_x k a_t ξ₀) e^{td/2} (cosh t - 1)^{α/2-1} |sinh t| dk dt

    :raises ParameterError: when α ≤ 0 or α + d - n ∈ {0, 2, 4, ...}
    """
    constant = dual_constant(phi.n, phi.d, alpha)
    even = symmetric_check(phi, x, quad, path)
    result = power_weighted_integral(even, 0.0, even.tau_max, alpha / 2.0 - 1.0, quad)
    logger.debug("H*^%s of %s at %s: %s", alpha, phi.name, x.coords, result.value)
    return constant * float(result.value)


def hstar_log(
    phi: HorosphericalImage, x: HyperbolicPoint, quad: QuadratureSpec, path: Union[str, CheckPath] = CheckPath.auto
) -> float:
    """The dual of order n - d with the kernel e^{td/2} (cosh t - 1)^{(n-d)/2-1} log(cosh t - 1) |sinh t|"""
    even = symmetric_check(phi, x, quad, path)
    beta = (phi.n - phi.d) / 2.0
    result = log_weighted_integral(even, 0.0, even.tau_max, beta - 1.0, quad)
    return log_dual_constant(phi.n, phi.d) * float(result.value)


def phi_term(
    phi: HorosphericalImage,
    x: HyperbolicPoint,
    quad: QuadratureSpec,
    form: str = "field",
    path: Union[str, CheckPath] = CheckPath.auto,
) -> float:
    """The correction Φ in H*^{n-d}_log f̂ = Q^n f + Φ

    The field form is γ_{n,d} σ_{n-1} ∫_1^∞ M_x f(s) (s - 1)^{n/2-1} ds; the kernel form is γ̃_{n,d} times the
    integral of φ against e^{td/2} (cosh t - 1)^{(n-d)/2-1} |sinh t| over K × R.
    """
    n, d = phi.n, phi.d
    if form == "field":
        if phi.source is None:
            raise ContractViolation(f"The field form of Φ needs the source of {phi.name}")
        g = spherical_mean_profile(phi.source, x, quad, sampled=False)
        upper = g.upper_limit(1.0, n / 2.0, quad)
        result = power_weighted_integral(g, 1.0, upper, n / 2.0 - 1.0, quad)
        return log_correction_constant(n, d) * sphere_area(n - 1) * float(result.value)
    if form == "kernel":
        even = symmetric_check(phi, x, quad, path)
        result = power_weighted_integral(even, 0.0, even.tau_max, (n - d) / 2.0 - 1.0, quad)
        return kernel_correction_constant(n, d) * float(result.value)
    raise ContractViolation(f"Unknown form '{form} - expected one of: field, kernel'")


def field_integral(f: ScalarField, quad: QuadratureSpec) -> float:
    """∫_{H^n} f(x) dx, through the profile for zonal fields and spherical means about x₀ otherwise"""
    if isinstance(f, ZonalField):
        return radial_measure_integral(f.profile, f.n, quad)
    n = f.n
    x0 = origin(n)
    exponent = n / 2.0 - 1.0
    upper = f.height_limit(n - 1.0, quad)
    result = power_weighted_integral(
        lambda s: as_float_array(spherical_mean(f, x0, s, quad)) * (s + 1.0) ** exponent, 1.0, upper, exponent, quad
    )
    return sphere_area(n - 1) * float(result.value)


def fubini_identity_residual(f: ScalarField, k: npt.ArrayLike, d: int, quad: QuadratureSpec) -> float:
    """|∫ dt ∫ f̂(k a_t n_u ξ₀) du - ∫ f(x) dx|

    The nilpotent parameter is rescaled by u = e^{-t/2} u', which turns the height of the horosphere into
    cosh t + |u'|² / 2.
    """
    n = f.n
    q = n - 1 - d
    image = horospherical_image(f, d, quad)
    rotation = as_float_array(k)
    limit = f.height_limit(n - 1.0, quad)
    reach = acosh(limit)
    if q == 0:
        lhs = integrate(lambda t: image.batch(rotation, t, np.zeros(t.shape + (0,))), -reach, reach, quad).value
    else:
        directions, weights = sphere_rule(q, quad.sphere_order)

        def over_t(t: FloatArray) -> FloatArray:
            rho_max = np.sqrt(2.0 * np.clip(limit - np.cosh(t), 0.0, None))

            def over_rho(rho: FloatArray) -> FloatArray:
                shrink = np.exp(-0.5 * t)[:, None, None, None]
                offsets = shrink * rho[..., None, None] * directions
                values = image.batch(rotation, t[:, None, None], offsets)
                return rho ** (q - 1) * (values @ weights)

            inner = integrate(over_rho, np.zeros_like(t), rho_max, quad)
            return np.exp(-0.5 * q * t) * sphere_area(q - 1) * as_float_array(inner.value)

        lhs = integrate(over_t, -reach, reach, quad).value
    rhs = field_integral(f, quad)
    logger.info("Fubini identity for %s, d = %s: %s against %s", f.name, d, lhs, rhs)
    return abs(float(lhs) - rhs)


def weighted_zonal_identity_residual(f: ZonalField, alpha: float, d: int, quad: QuadratureSpec) -> float:
    """The residual of the weighted zonal identity

    |∫ e^{td/2} (cosh t - 1)^{α/2-1} |sinh t| ∫_K f̂(k a_t ξ₀) dk dt
     - c₁ σ_{n-1} ∫ f₀(s) (s-1)^{(α+d)/2-1} ds|

    :raises ContractViolation: when f is not centred at x₀
    """
    if not f.centered:
        raise ContractViolation("The weighted zonal identity needs a field centred at x₀")
    f0, n = f.profile, f.n
    order = (alpha + d) / 2.0

    def even(tau: FloatArray) -> FloatArray:
        times = np.arccosh(1.0 + tau)
        ahead = as_float_array(forward_zonal(f0, times, 0.0, d, quad))
        behind = as_float_array(forward_zonal(f0, -times, 0.0, d, quad))
        return np.exp(0.5 * d * times) * ahead + np.exp(-0.5 * d * times) * behind

    upper = float(f0.upper_limit(1.0, order, quad))
    lhs = power_weighted_integral(even, 0.0, upper - 1.0, alpha / 2.0 - 1.0, quad).value
    rhs = weighted_constant(n, d, alpha) * sphere_area(n - 1)
    rhs *= float(power_weighted_integral(f0, 1.0, upper, order - 1.0, quad).value)
    return abs(float(lhs) - rhs)


def sharpness_probe(
    p: float, n: int, d: int, cutoff: float, quad: QuadratureSpec, profile: Optional[RadialProfile] = None
) -> Tuple[float, float]:
    """The L^p norm over {x_{n+1} ≤ cutoff} and the zonal transform integral at η = 2 truncated at cutoff

    Both integrals use s = e^u away from their singular ends.

    :param p: The exponent, p ≥ 1
    :param n: Dimension of the hyperbolic space
    :param d: Dimension of the horospheres
    :param cutoff: Truncation height, above e
    :param quad: The quadrature controls
    :param profile: Profile to probe, the borderline profile of exponent p by default
    """
    if p < 1 or not cutoff > np.e:
        raise ContractViolation(f"Expected p >= 1 and cutoff > e, got p = {p}, cutoff = {cutoff}")
    f0 = profile if profile is not None else sharpness_profile(p, n)
    weight = n / 2.0 - 1.0

    def norm_integrand(u: FloatArray) -> FloatArray:
        s = np.exp(u)
        return np.abs(f0(s)) ** p * (s * s - 1.0) ** weight * s

    norm = sphere_area(n - 1) * float(integrate(norm_integrand, 0.0, log(cutoff), quad).value)
    exponent = d / 2.0 - 1.0
    split = min(3.0, cutoff)
    near = float(power_weighted_integral(f0, 2.0, split, exponent, quad).value)
    far = 0.0
    if cutoff > split:

        def far_integrand(u: FloatArray) -> FloatArray:
            s = np.exp(u)
            return f0(s) * (s - 2.0) ** exponent * s

        far = float(integrate(far_integrand, log(split), log(cutoff), quad).value)
    transform = zonal_constant(d) / gamma(d / 2.0) * (near + far)
    logger.debug("Sharpness probe p=%s cutoff=%s: norm %s, transform %s", p, cutoff, norm, transform)
    return norm ** (1.0 / p), transform


class SharpnessCriteria(BaseModel):
    """Pass thresholds of sharpness_verdict

    The defaults are the strict thresholds. The borderline profile sits a logarithm away from L^p, so its
    truncated norm and transform integral move slowly with the cutoff; ``SharpnessCriteria.logarithmic()``
    widens the change thresholds and asks for shrinking increments instead.
    """

    growth: float = 0.10
    """Least relative growth of the transform integral over the last cutoff step past the critical exponent"""
    norm_change: float = 0.01
    """Largest relative change of the norm over the last cutoff step past the critical exponent"""
    transform_change: float = 1e-3
    """Largest relative change of the transform integral over the last cutoff step below the critical exponent"""
    transform_ratio: Optional[float] = None
    """Largest ratio of the last two transform increments below the critical exponent, unchecked when None"""
    norm_ratio: Optional[float] = None
    """Largest ratio of the last two norm increments below the critical exponent, unchecked when None"""

    class Config:
        allow_mutation = False

    @classmethod
    def logarithmic(cls) -> "SharpnessCriteria":
        """Thresholds reachable with cutoffs up to 1e6 on the borderline profile"""
        return cls(norm_change=0.015, transform_change=0.03, transform_ratio=0.2, norm_ratio=0.5)


class SharpnessVerdict(BaseModel):
    """Whether truncated integrals over increasing cutoffs behave as the exponent predicts"""

    divergent: bool
    """Whether p ≥ 2(n - 1)/d, where the transform integral must keep growing"""
    passed: bool
    transform_change: float
    """Relative change of the transform integral between the last two cutoffs"""
    norm_change: float
    """Relative change of the norm between the last two cutoffs"""
    transform_ratio: Optional[float] = None
    """Last increment of the transform integral over the one before"""
    norm_ratio: Optional[float] = None
    criteria: SharpnessCriteria = SharpnessCriteria()


def _below(value: Optional[float], limit: Optional[float]) -> bool:
    return limit is None or value is None or value < limit


def sharpness_verdict(
    p: float,
    n: int,
    d: int,
    norms: Sequence[float],
    transforms: Sequence[float],
    criteria: Optional[SharpnessCriteria] = None,
) -> SharpnessVerdict:
    """Judges probes taken at increasing cutoffs

    Past the critical exponent the transform integral must grow by criteria.growth over the last cutoff step
    while the norm moves by less than criteria.norm_change. Below it the transform must move by less than
    criteria.transform_change, with the optional increment ratios checked on top.

    :param criteria: The thresholds, the strict defaults when None
    """
    if len(norms) != len(transforms) or len(norms) < 2:
        raise ContractViolation("At least two probes with both integrals are needed")
    limits = criteria or SharpnessCriteria()
    divergent = p >= 2.0 * (n - 1) / d
    transform_steps = np.diff(as_float_array(transforms))
    norm_steps = np.diff(as_float_array(norms))
    transform_change = float(transform_steps[-1] / abs(transforms[-2]))
    norm_change = float(abs(norm_steps[-1]) / abs(norms[-2]))
    transform_ratio = norm_ratio = None
    if len(norms) > 2:
        transform_ratio = float(abs(transform_steps[-1]) / max(abs(transform_steps[-2]), 1e-300))
        norm_ratio = float(abs(norm_steps[-1]) / max(abs(norm_steps[-2]), 1e-300))
    if divergent:
        passed = transform_change >= limits.growth and norm_change < limits.norm_change
    else:
        passed = abs(transform_change) < limits.transform_change
        passed = passed and _below(transform_ratio, limits.transform_ratio) and _below(norm_ratio, limits.norm_ratio)
    return SharpnessVerdict(
        divergent=divergent,
        passed=passed,
        transform_change=transform_change,
        norm_change=norm_change,
        transform_ratio=transform_ratio,
        norm_ratio=norm_ratio,
        criteria=limits,
    )


def equivariance_residual(f: ScalarField, xi: Horosphere, gamma_element: LorentzElement, quad: QuadratureSpec) -> float:
    """|(f∘γ)^(ξ) - f̂(γ ξ)|, both sides by quadrature"""
    moved = horosphere_from_group(gamma_element @ xi.group_element(), xi.d)
    return abs(forward_general(f.transported(gamma_element), xi, quad) - forward_general(f, moved, quad))


def spherical_mean_limit_residual(
    f: ScalarField, points: Sequence[HyperbolicPoint], heights: Sequence[float], quad: QuadratureSpec
) -> List[float]:
    """sup over points of |M_x f(s) - f(x)| for each height s"""
    residuals = []
    for s in heights:
        worst = max(abs(float(spherical_mean(f, x, s, quad)) - f.evaluate(x)) for x in points)
        residuals.append(worst)
    return residuals


def spherical_mean_norm(
    f: ZonalField, s: float, p: float, quad: QuadratureSpec, nodes: int = 96
) -> Tuple[float, float]:
    """Discrete L^p norms of x ↦ M_x f(s) and of f on the same Gauss-Legendre radial grid about the centre"""
    f0, n = f.profile, f.n
    spread = geodesic_support(f0) if np.isfinite(geodesic_support(f0)) else acosh(float(f0.upper_limit(1.0, n, quad)))
    top = cosh(spread + acosh(s))
    unit, unit_weights = roots_legendre(nodes)
    heights = 1.0 + 0.5 * (top - 1.0) * (unit + 1.0)
    weights = 0.5 * (top - 1.0) * unit_weights * sphere_area(n - 1) * (heights**2 - 1.0) ** (n / 2.0 - 1.0)
    means = np.array([float(zonal_mean_values(f0, acosh(h), np.array(s), n, quad)) for h in heights])
    field_norm = float(np.sum(weights * np.abs(f0(heights)) ** p)) ** (1.0 / p)
    mean_norm = float(np.sum(weights * np.abs(means) ** p)) ** (1.0 / p)
    return mean_norm, field_norm

