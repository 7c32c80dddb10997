"""Reconstruction of fields from their horospherical images.

Two procedures are offered. The mean value method rebuilds f(x) from the averages φ̌_x(t) through a fractional
derivative and a limit s → 1⁺. The polynomial methods apply a polynomial in the Beltrami-Laplace operator to
the backprojection or to a weighted dual; they work on fields zonal about x₀, where Δ_H has a radial form.
"""
from logging import Logger, getLogger
from math import cosh, pi
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, root_validator, validator

from .constants import (
    even_inversion_constant,
    fuglede_constant,
    in_pole_set,
    log_potential_constant,
    potential_constant,
    sphere_area,
    zonal_constant,
)
from .exceptions import ContractViolation, InsufficientSmoothness, ParameterError
from .extrapolation import Extrapolation, extrapolate, geometric_nodes
from .fields import ScalarField, ZonalField
from .fractional import STENCILS, default_step, frac_derivative_minus, integrated_profile
from .horosphere import check_dimensions
from .hyperboloid import HyperbolicPoint, radial_point
from .profiles import Profile1D
from .quadrature import QuadratureSpec, integrate, log_weighted_integral, power_weighted_integral
from .transform import (
    CheckPath,
    HorosphericalImage,
    check_operator,
    data_reach,
    field_integral,
    hstar_alpha,
    hstar_log,
    image_reach,
    k_average,
    k_rule_order,
    resolve_path,
    sampling_tolerance,
    spherical_mean_profile,
)
from .utils import FloatArray, MemoCache, as_float_array

logger: Logger = getLogger(__name__)

Scalar = Union[float, FloatArray]
Mapper = Callable[[Callable[[Any], Any], Iterable[Any]], Iterable[Any]]

DEFAULT_RADII = (0.0, 0.3, 0.6, 0.9, 1.2)
"""Geodesic radii of the radial probes along e_n"""
RESIDUAL_HEIGHTS = (1.3, 1.45, 1.6, 1.75, 1.9)
"""Heights x_{n+1} at which the operator identities are checked"""

_SECOND = STENCILS[2][1]
_FIRST = np.insert(STENCILS[1][1], 2, 0.0)
# Weight sum of the second difference stencil
_AMPLIFICATION = float(np.sum(np.abs(_SECOND)))


class InversionSpec(BaseModel):
    """Controls of the reconstruction procedures"""

    extrapolation: Extrapolation = Extrapolation.richardson
    """Rule taking the limit s → 1⁺"""
    delta: float = 0.2
    """Width δ₀ of the first node s_0 = 1 + δ₀"""
    levels: int = 6
    """Index J of the last node s_J = 1 + 2^{-J} δ₀"""
    target_tolerance: float = 1e-3
    """Accuracy the reconstruction aims for"""
    instability_factor: float = 10.0
    """Extrapolants further apart than this multiple of the target abort the reconstruction"""
    laplace_target: float = 1e-10
    """Accuracy target fixing the radial step h = target^{1/(2ℓ+4)} of ℓ composed Laplacians"""
    form: str = "standard"
    """Odd order fractional derivative formula, "standard" or "alternative\""""

    class Config:
        allow_mutation = False

    @validator("delta")
    def valid_delta(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ValueError(f"δ₀ must lie in (0, 1], got {value}")
        return value

    @validator("levels")
    def valid_levels(cls, value: int) -> int:
        if value < 1:
            raise ValueError("at least two extrapolation nodes are needed")
        return value

    @validator("target_tolerance", "instability_factor", "laplace_target")
    def positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"must be positive, got {value}")
        return value

    @validator("form")
    def known_form(cls, value: str) -> str:
        if value not in ("standard", "alternative"):
            raise ValueError(f"unknown fractional derivative form '{value}'")
        return value

    @property
    def nodes(self) -> FloatArray:
        return geometric_nodes(self.delta, self.levels)

    @property
    def abort_tolerance(self) -> float:
        return self.instability_factor * self.target_tolerance

    def laplace_step(self, degree: int) -> float:
        """Radial step of a polynomial of the given degree in Δ_H"""
        return float(self.laplace_target ** (1.0 / (2 * degree + 4)))


class PotentialSpec(BaseModel):
    """Order α of the potential Q^α on H^n and its normalising constant"""

    n: int
    alpha: float

    class Config:
        allow_mutation = False

    @property
    def excluded(self) -> bool:
        """Whether α - n lies in {0, 2, 4, ...}, where ζ_{n,α} has a pole"""
        return in_pole_set(self.alpha - self.n)

    @property
    def constant(self) -> float:
        """ζ_{n,α}

        :raises ParameterError: for excluded orders
        """
        return potential_constant(self.n, self.alpha)

    @property
    def log_constant(self) -> float:
        """ζ'_n of the logarithmic potential and of B"""
        return log_potential_constant(self.n)


class LaplacePolynomial(BaseModel):
    """sign · constant · ∏_i (Δ_H + factor_i) acting on functions on H^n"""

    n: int
    factors: List[float]
    sign: float = 1.0
    constant: float = 1.0
    name: str = "P(Δ)"

    class Config:
        allow_mutation = False

    @validator("factors")
    def not_empty(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("a Laplace polynomial needs at least one factor")
        return value

    @property
    def degree(self) -> int:
        return len(self.factors)

    @property
    def scale(self) -> float:
        return self.sign * self.constant

    @classmethod
    def p_ell(cls, n: int, ell: int) -> "LaplacePolynomial":
        """P_ℓ(Δ_H) = (-1)^ℓ ∏_{i=1}^ℓ [Δ_H + i(n - 1 - i)], the left inverse of Q^{2ℓ}

        >>> LaplacePolynomial.p_ell(5, 2).factors
        [3.0, 4.0]
        """
        if ell < 1:
            raise ParameterError(f"P_ℓ needs ℓ >= 1, got {ell}")
        return cls(
            n=n, factors=[float(i * (n - 1 - i)) for i in range(1, ell + 1)], sign=(-1.0) ** ell, name=f"P_{ell}(Δ)"
        )

    @classmethod
    def even_d(cls, n: int, d: int) -> "LaplacePolynomial":
        """c P(Δ_H) with P = ∏_{i=1}^{d/2} [Δ_H + i(n - 1 - i)], inverting the backprojection for even d

        :raises ParameterError: when d is odd
        """
        constant = even_inversion_constant(n, d)
        return cls(
            n=n, factors=[float(i * (n - 1 - i)) for i in range(1, d // 2 + 1)], constant=constant, name="c P(Δ)"
        )

    @classmethod
    def d_alpha(cls, n: int, alpha: float) -> "LaplacePolynomial":
        """D_α = -Δ_H - α(2n - 2 - α)/4"""
        return cls(n=n, factors=[alpha * (2 * n - 2 - alpha) / 4.0], sign=-1.0, name=f"D_{alpha:g}")

    @classmethod
    def laplacian(cls, n: int) -> "LaplacePolynomial":
        return cls(n=n, factors=[0.0], name="Δ")


def _radial_laplacian(values: FloatArray, radii: FloatArray, n: int, h: float) -> FloatArray:
    """Δ_H G = G'' + (n - 1) coth(r) G' on a uniform grid in r, losing two points at each end"""
    windows = sliding_window_view(values, 5, axis=-1)
    second = windows @ _SECOND / h**2
    first = windows @ _FIRST / h
    centre = radii[..., 2:-2]
    pole = np.abs(centre) < 1e-6
    safe = np.where(pole, 1.0, centre)
    return np.where(pole, n * second, second + (n - 1) * first / np.tanh(safe))


def _compose(profile: Profile1D, n: int, factors: Sequence[float], s: npt.ArrayLike, h: float) -> FloatArray:
    heights = as_float_array(s)
    if np.any(heights < 1.0):
        raise ContractViolation("Radial profiles are defined for s >= 1")
    reach = 2 * len(factors)
    grid = np.arccosh(heights)[..., None] + h * np.arange(-reach, reach + 1)
    # G(r) = F(cosh r) is even, so stencils may cross the pole
    values = profile(np.cosh(grid))
    for factor in factors:
        values = _radial_laplacian(values, grid, n, h) + factor * values[..., 2:-2]
        grid = grid[..., 2:-2]
    return values[..., 0]


def _check_smoothness(profile: Profile1D, order: int) -> None:
    if profile.smoothness is not None and profile.smoothness < order:
        raise InsufficientSmoothness(
            f"Profile {profile.name} supplies {profile.smoothness} derivatives, {order} are needed"
        )


def beltrami_radial(profile: Profile1D, s: npt.ArrayLike, n: int, step: Optional[float] = None) -> Scalar:
    """Δ_H of the zonal function x ↦ F(x_{n+1}) at height s, equal to (s² - 1) F'' + n s F'

    The derivatives are taken in the geodesic radius r = arccosh s with fourth order central differences.

    :param profile: The profile F
    :param s: Height(s) s >= 1
    :param n: Dimension of the hyperbolic space
    :param step: Radial step, 1e-10^{1/6} by default
    :raises InsufficientSmoothness: when F cannot supply two derivatives
    """
    _check_smoothness(profile, 2)
    h = InversionSpec().laplace_step(1) if step is None else step
    value = _compose(profile, n, [0.0], s, h)
    return float(value) if np.ndim(value) == 0 else value


def apply_laplace_polynomial(
    polynomial: LaplacePolynomial, profile: Profile1D, step: Optional[float] = None, target: float = 1e-10
) -> Profile1D:
    """The profile of P(Δ_H) F, composing the radial Laplacian factor by factor

    :param polynomial: The polynomial P
    :param profile: The profile F of a zonal function
    :param step: Radial step, target^{1/(2ℓ+4)} by default
    :param target: Accuracy target of the default step
    :raises InsufficientSmoothness: when F cannot supply 2ℓ derivatives
    """
    _check_smoothness(profile, 2 * polynomial.degree)
    h = target ** (1.0 / (2 * polynomial.degree + 4)) if step is None else step
    logger.debug("Applying %s to %s with radial step %s", polynomial.name, profile.name, h)
    return Profile1D(
        function=lambda s: polynomial.scale * _compose(profile, polynomial.n, polynomial.factors, s, h),
        name=f"{polynomial.name}({profile.name})",
    )


def pointwise_profile(evaluate: Callable[[float], float], name: str) -> Profile1D:
    """A profile evaluated one height at a time, each height computed once"""
    cache: MemoCache[float, float] = MemoCache(name)

    def function(s: FloatArray) -> FloatArray:
        heights = as_float_array(s)
        flat = [cache.get_or_insert(round(float(v), 12), lambda v=v: evaluate(float(v))) for v in heights.ravel()]
        return np.reshape(np.array(flat, dtype=np.float64), heights.shape)

    return Profile1D(function=function, name=name)


def _mean_profile(f: ScalarField, x: HyperbolicPoint, quad: QuadratureSpec, path: str) -> Profile1D:
    if path == "profile":
        return spherical_mean_profile(f, x, quad, sampled=False)
    if path == "sphere":
        generic = ScalarField(
            n=f.n,
            function=f.function,
            support_radius=f.support_radius,
            decay_mu=f.decay_mu,
            decay_rate=f.decay_rate,
            name=f.name,
        )
        return spherical_mean_profile(generic, x, quad, sampled=False)
    raise ContractViolation(f"Unknown path '{path} - expected one of: profile, sphere'")


def potential_q_alpha(
    f: ScalarField, x: HyperbolicPoint, alpha: float, quad: QuadratureSpec, path: str = "profile"
) -> float:
    """Q^α f(x) = ζ_{n,α} ∫ f(y) ([x,y] - 1)^{(α-n)/2} ([x,y] + 1)^{1-n/2} dy, with Q⁰ f = f

    In geodesic polar coordinates about x this is ζ_{n,α} σ_{n-1} ∫_1^∞ M_x f(s) (s - 1)^{α/2-1} ds. The
    "profile" path uses the angular reduction for zonal fields, the "sphere" path the product rule.

    :raises ParameterError: when α < 0 or α - n ∈ {0, 2, 4, ...}
    :raises DivergenceError: when f decays too slowly for the order α
    """
    if alpha == 0:
        return f.evaluate(x)
    constant = PotentialSpec(n=f.n, alpha=alpha).constant
    g = _mean_profile(f, x, quad, path)
    upper = g.upper_limit(1.0, alpha / 2.0, quad)
    result = power_weighted_integral(g, 1.0, upper, alpha / 2.0 - 1.0, quad)
    return constant * sphere_area(f.n - 1) * float(result.value)


def potential_q_n_log(f: ScalarField, x: HyperbolicPoint, quad: QuadratureSpec, path: str = "profile") -> float:
    """Qⁿ f(x) = ζ'_n ∫ f(y) log([x,y] - 1) ([x,y] + 1)^{1-n/2} dy"""
    n = f.n
    g = _mean_profile(f, x, quad, path)
    upper = g.upper_limit(1.0, n / 2.0, quad)
    result = log_weighted_integral(g, 1.0, upper, n / 2.0 - 1.0, quad)
    return PotentialSpec(n=n, alpha=n).log_constant * sphere_area(n - 1) * float(result.value)


def operator_b(f: ScalarField, x: HyperbolicPoint, quad: QuadratureSpec, path: str = "profile") -> float:
    """Bf(x) = ζ'_n ∫ f(y) ([x,y] + 1)^{1-n/2} dy"""
    n = f.n
    g = _mean_profile(f, x, quad, path)
    upper = g.upper_limit(1.0, n / 2.0, quad)
    result = power_weighted_integral(g, 1.0, upper, n / 2.0 - 1.0, quad)
    return PotentialSpec(n=n, alpha=n).log_constant * sphere_area(n - 1) * float(result.value)


def potential_profile(f: ScalarField, alpha: float, quad: QuadratureSpec) -> Profile1D:
    """s ↦ Q^α f at height s on the e_n axis, the logarithmic potential when α = n"""
    n = f.n
    if alpha == n:
        return pointwise_profile(lambda s: potential_q_n_log(f, radial_point(n, s), quad), f"Q^{n}_log {f.name}")
    return pointwise_profile(
        lambda s: potential_q_alpha(f, radial_point(n, s), alpha, quad), f"Q^{alpha:g} {f.name}"
    )


class ErrorBudget(BaseModel):
    """Error estimates of one reconstructed value, split by stage"""

    quadrature: float = 0.0
    differentiation: float = 0.0
    extrapolation: float = 0.0

    @property
    def total(self) -> float:
        return self.quadrature + self.differentiation + self.extrapolation

    @classmethod
    def worst(cls, budgets: Sequence["ErrorBudget"]) -> "ErrorBudget":
        """The stage-wise maximum"""
        return cls(
            quadrature=max((b.quadrature for b in budgets), default=0.0),
            differentiation=max((b.differentiation for b in budgets), default=0.0),
            extrapolation=max((b.extrapolation for b in budgets), default=0.0),
        )


class ReconstructionReport(BaseModel):
    """Reconstructed values at probe points, next to the field values when those are known"""

    method: str
    probes: List[float]
    """Heights x_{n+1} of the probe points"""
    reference: List[Optional[float]]
    computed: List[float]
    budgets: List[ErrorBudget]
    sup_error: Optional[float] = None
    """Largest absolute error over the probes with a reference"""

    @root_validator(skip_on_failure=True)
    def compute_sup_error(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        size = len(values["probes"])
        if any(len(values[key]) != size for key in ("reference", "computed", "budgets")):
            raise ValueError("probes, reference, computed and budgets must have the same length")
        errors = [abs(r - c) for r, c in zip(values["reference"], values["computed"]) if r is not None]
        values["sup_error"] = max(errors) if errors else None
        return values

    @property
    def errors(self) -> List[Optional[float]]:
        return [None if r is None else abs(r - c) for r, c in zip(self.reference, self.computed)]

    @property
    def budget(self) -> ErrorBudget:
        return ErrorBudget.worst(self.budgets)


class MeanValueReconstruction(BaseModel):
    """The full record of one mean value reconstruction"""

    value: float
    nodes: List[float]
    values: List[float]
    """D^{d/2} ψ_x at the nodes"""
    extrapolants: List[float]
    budget: ErrorBudget


def mean_value_profile(
    phi: HorosphericalImage, x: HyperbolicPoint, quad: QuadratureSpec, path: Union[str, CheckPath] = CheckPath.auto
) -> Profile1D:
    """ψ_x(r) = c⁻¹ e^{td/2} φ̌_x(t) at cosh t = r

    On the k-rule path the averages are taken at one K rule order over a whole grid of t and sampled into a
    spline on [1, R], R being where ψ_x drops below the sampling tolerance. On the sphere path this is the
    fractional integral I^{d/2} of the sampled spherical mean of the source.
    """
    d = phi.d
    if resolve_path(phi, path) == CheckPath.sphere:
        assert phi.source is not None
        return integrated_profile(spherical_mean_profile(phi.source, x, quad), d / 2.0, quad)
    order = k_rule_order(phi, x, quad)
    scale = 1.0 / zonal_constant(d)

    def psi(r: FloatArray) -> FloatArray:
        times = np.arccosh(np.maximum(r, 1.0))
        return scale * np.exp(0.5 * d * times) * k_average(phi, x, times, order)

    tolerance = sampling_tolerance(quad)
    reach = data_reach(psi, image_reach(phi, x, quad), tolerance)
    return Profile1D.sampled(psi, 1.0, reach, tolerance, name=f"ψ_x {phi.name}")


def reconstruct_mean_value(
    phi: HorosphericalImage,
    x: HyperbolicPoint,
    quad: QuadratureSpec,
    inv: Optional[InversionSpec] = None,
    path: Union[str, CheckPath] = CheckPath.auto,
) -> MeanValueReconstruction:
    """f(x) = lim_{s→1⁺} (D^{d/2} ψ_x)(s), evaluated on the geometric nodes and extrapolated

    :param phi: The image f̂
    :param x: The point to reconstruct at
    :param quad: The quadrature controls
    :param inv: The inversion controls
    :param path: How the averages φ̌_x are computed
    :raises ReconstructionUnstable: when successive extrapolants drift apart
    """
    spec = inv or InversionSpec()
    d = phi.d
    nodes = spec.nodes
    psi = mean_value_profile(phi, x, quad, path)
    values = as_float_array(frac_derivative_minus(psi, nodes, d, quad, spec.form))
    order = d // 2 if d % 2 == 0 else (1 if spec.form == "standard" else (d + 1) // 2)
    last = float(nodes[-1])
    coarse = float(frac_derivative_minus(psi, last, d, quad, spec.form, step=2.0 * default_step(last, order)))
    result = extrapolate(values, spec.extrapolation, tolerance=spec.abort_tolerance)
    budget = ErrorBudget(
        quadrature=sampling_tolerance(quad) * max(1.0, float(np.max(np.abs(values)))),
        differentiation=abs(float(values[-1]) - coarse) / 15.0,
        extrapolation=result.error,
    )
    logger.debug("Mean value reconstruction at %s: %s with budget %s", x.coords, result.value, budget)
    return MeanValueReconstruction(
        value=result.value,
        nodes=nodes.tolist(),
        values=values.tolist(),
        extrapolants=result.extrapolants,
        budget=budget,
    )


def invert_mean_value(
    phi: HorosphericalImage,
    x: HyperbolicPoint,
    quad: QuadratureSpec,
    extrapolation: Extrapolation = Extrapolation.richardson,
    inv: Optional[InversionSpec] = None,
    d: Optional[int] = None,
) -> float:
    """The reconstructed value f(x), see reconstruct_mean_value

    :param d: Horosphere dimension the caller expects, checked against the image when given
    :raises ContractViolation: when d differs from phi.d
    """
    if d is not None and d != phi.d:
        raise ContractViolation(f"Image {phi.name} lives on {phi.d}-horospheres, not on {d}-horospheres")
    spec = (inv or InversionSpec()).copy(update={"extrapolation": extrapolation})
    return reconstruct_mean_value(phi, x, quad, spec).value


def _reference(phi: HorosphericalImage, x: HyperbolicPoint) -> Optional[float]:
    return None if phi.source is None else phi.source.evaluate(x)


def reconstruct_points(
    phi: HorosphericalImage,
    points: Sequence[HyperbolicPoint],
    quad: QuadratureSpec,
    inv: Optional[InversionSpec] = None,
    mapper: Mapper = map,
) -> ReconstructionReport:
    """Mean value reconstructions at several points

    :param mapper: Applies the per-point reconstruction, ``map`` or the map of an executor
    """
    records = list(mapper(lambda x: reconstruct_mean_value(phi, x, quad, inv), points))
    return ReconstructionReport(
        method="mean-value",
        probes=[float(x.coords[-1]) for x in points],
        reference=[_reference(phi, x) for x in points],
        computed=[r.value for r in records],
        budgets=[r.budget for r in records],
    )


def _require_radial(phi: HorosphericalImage) -> None:
    source = phi.source
    if source is not None and not (isinstance(source, ZonalField) and source.centered):
        raise ContractViolation(f"Polynomial inversion needs an image of a field zonal about x₀, got {source.name}")


def _radial_value(
    polynomial: LaplacePolynomial,
    profile: Profile1D,
    radius: float,
    quad: QuadratureSpec,
    spec: InversionSpec,
) -> Tuple[float, ErrorBudget]:
    s = cosh(radius)
    h = spec.laplace_step(polynomial.degree)
    value = float(apply_laplace_polynomial(polynomial, profile, step=h)(s))
    coarse = float(apply_laplace_polynomial(polynomial, profile, step=2.0 * h)(s))
    scale = max(1.0, abs(float(profile(s))))
    amplification = (_AMPLIFICATION / h**2) ** polynomial.degree
    budget = ErrorBudget(
        quadrature=abs(polynomial.scale) * amplification * sampling_tolerance(quad) * scale,
        differentiation=abs(value - coarse) / 15.0,
    )
    return value, budget


def _radial_report(
    method: str,
    phi: HorosphericalImage,
    polynomial: LaplacePolynomial,
    profile: Profile1D,
    radii: Sequence[float],
    quad: QuadratureSpec,
    spec: InversionSpec,
    mapper: Mapper,
    correction: float = 0.0,
) -> ReconstructionReport:
    if not radii:
        raise ContractViolation("At least one probe radius is needed")
    n = phi.n
    results = list(mapper(lambda r: _radial_value(polynomial, profile, r, quad, spec), radii))
    points = [radial_point(n, cosh(r)) for r in radii]
    report = ReconstructionReport(
        method=method,
        probes=[float(x.coords[-1]) for x in points],
        reference=[_reference(phi, x) for x in points],
        computed=[value + correction for value, _ in results],
        budgets=[budget for _, budget in results],
    )
    logger.info("%s reconstruction of %s: sup error %s", method, phi.name, report.sup_error)
    return report


def check_profile(
    phi: HorosphericalImage, quad: QuadratureSpec, path: Union[str, CheckPath] = CheckPath.auto
) -> Profile1D:
    """s ↦ φ̌ at height s on the e_n axis"""
    return pointwise_profile(lambda s: check_operator(phi, radial_point(phi.n, s), quad, path), f"check {phi.name}")


def invert_poly_even_d(
    phi: HorosphericalImage,
    radii: Sequence[float] = DEFAULT_RADII,
    quad: Optional[QuadratureSpec] = None,
    path: Union[str, CheckPath] = CheckPath.auto,
    inv: Optional[InversionSpec] = None,
    mapper: Mapper = map,
) -> ReconstructionReport:
    """f = c P(Δ_H) φ̌ for even d, at radial probes

    :raises ParameterError: when d is odd
    :raises ContractViolation: when the source field is not zonal about x₀
    """
    _require_radial(phi)
    polynomial = LaplacePolynomial.even_d(phi.n, phi.d)
    settings = quad or QuadratureSpec()
    return _radial_report(
        "poly-even-d",
        phi,
        polynomial,
        check_profile(phi, settings, path),
        radii,
        settings,
        inv or InversionSpec(),
        mapper,
    )


def n2_correction(phi: HorosphericalImage, quad: QuadratureSpec) -> float:
    """(1/4π) ∫_R φ(a_t ξ₀) dt, the constant completing the inversion on H²"""
    reach = phi.support_radius if np.isfinite(phi.support_radius) else quad.truncation_radius
    rotation = np.eye(phi.n)
    offsets = phi.n - 1 - phi.d

    def along_axis(t: FloatArray) -> FloatArray:
        return phi.batch(rotation, t, np.zeros(t.shape + (offsets,)))

    return float(integrate(along_axis, -reach, reach, quad).value) / (4.0 * pi)


def invert_poly_general(
    phi: HorosphericalImage,
    ell: Optional[int] = None,
    radii: Sequence[float] = DEFAULT_RADII,
    quad: Optional[QuadratureSpec] = None,
    path: Union[str, CheckPath] = CheckPath.auto,
    inv: Optional[InversionSpec] = None,
    mapper: Mapper = map,
) -> ReconstructionReport:
    """Inversion through the weighted duals, at radial probes

    For odd n, f = P_ℓ(Δ_H) H*^{2ℓ-d} φ with ℓ >= d/2 (the smallest such ℓ by default). For even n >= 4,
    f = P_{n/2}(Δ_H) H*^{n-d}_log φ. For n = 2, f = -Δ_H H*^1_log φ + (1/4π) ∫ φ(a_t ξ₀) dt.

    :raises ParameterError: when ℓ does not fit the dimension
    :raises ContractViolation: when the source field is not zonal about x₀
    """
    _require_radial(phi)
    n, d = phi.n, phi.d
    check_dimensions(n, d)
    settings = quad or QuadratureSpec()
    spec = inv or InversionSpec()
    correction = 0.0
    if n % 2:
        order = (d + 1) // 2 if ell is None else ell
        alpha = 2 * order - d
        if alpha < 0:
            raise ParameterError(f"ℓ = {order} is below d/2 = {d / 2}")
        if alpha == 0:
            return invert_poly_even_d(phi, radii, settings, path, spec, mapper)
        polynomial = LaplacePolynomial.p_ell(n, order)
        profile = pointwise_profile(
            lambda s: hstar_alpha(phi, radial_point(n, s), alpha, settings, path), f"H*^{alpha} {phi.name}"
        )
        method = f"poly-odd-n-l{order}"
    else:
        if ell is not None and ell != n // 2:
            raise ParameterError(f"For even n the polynomial order is n/2 = {n // 2}, got {ell}")
        polynomial = LaplacePolynomial.p_ell(n, n // 2)
        profile = pointwise_profile(
            lambda s: hstar_log(phi, radial_point(n, s), settings, path), f"H*_log {phi.name}"
        )
        if n == 2:
            correction = n2_correction(phi, settings)
            method = "poly-n2"
        else:
            method = "poly-even-n-log"
    return _radial_report(method, phi, polynomial, profile, radii, settings, spec, mapper, correction)


def d_alpha_recursion_residual(
    f: ScalarField, alpha: float, heights: Sequence[float] = RESIDUAL_HEIGHTS, quad: Optional[QuadratureSpec] = None
) -> float:
    """sup |D_α Q^α f - Q^{α-2} f| over radial probes

    For α = n the logarithmic potential is used and the right hand side becomes Q^{n-2} f + Bf.
    """
    settings = quad or QuadratureSpec()
    n = f.n
    if alpha < 2:
        raise ParameterError(f"The recursion needs α >= 2, got {alpha}")
    lhs = apply_laplace_polynomial(LaplacePolynomial.d_alpha(n, alpha), potential_profile(f, alpha, settings))
    residual = 0.0
    for s in heights:
        x = radial_point(n, s)
        rhs = potential_q_alpha(f, x, alpha - 2.0, settings)
        if alpha == n:
            rhs += operator_b(f, x, settings)
        residual = max(residual, abs(float(lhs(s)) - rhs))
    return residual


def eigen_residual(
    f: ScalarField, heights: Sequence[float] = RESIDUAL_HEIGHTS, quad: Optional[QuadratureSpec] = None
) -> float:
    """sup |-Δ_H Bf - n(n-2)/4 Bf| relative to sup |Bf| over radial probes"""
    settings = quad or QuadratureSpec()
    n = f.n
    profile = pointwise_profile(lambda s: operator_b(f, radial_point(n, s), settings), f"B {f.name}")
    values = profile(as_float_array(heights))
    laplacian = as_float_array(beltrami_radial(profile, heights, n))
    scale = float(np.max(np.abs(values)))
    residual = float(np.max(np.abs(-laplacian - n * (n - 2) / 4.0 * values)))
    return residual / scale if scale > 0 else residual


def n2_identity_residual(
    f: ScalarField, heights: Sequence[float] = RESIDUAL_HEIGHTS, quad: Optional[QuadratureSpec] = None
) -> float:
    """sup |-Δ_H Q² f - f + (1/4π) ∫ f| over radial probes on H², Q² being the logarithmic potential"""
    settings = quad or QuadratureSpec()
    if f.n != 2:
        raise ParameterError(f"The identity holds on H², got n = {f.n}")
    mass = field_integral(f, settings) / (4.0 * pi)
    laplacian = as_float_array(beltrami_radial(potential_profile(f, 2.0, settings), heights, 2))
    values = np.array([f.evaluate(radial_point(2, s)) for s in heights])
    return float(np.max(np.abs(-laplacian - values + mass)))


def fuglede_residual(
    phi: HorosphericalImage, points: Sequence[HyperbolicPoint], quad: QuadratureSpec
) -> float:
    """sup |φ̌(x) - c Q^d f(x)| / sup |c Q^d f| over the points, φ being the image of its source"""
    if phi.source is None:
        raise ContractViolation(f"Image {phi.name} has no source field")
    constant = fuglede_constant(phi.n, phi.d)
    expected = np.array([constant * potential_q_alpha(phi.source, x, float(phi.d), quad) for x in points])
    computed = np.array([check_operator(phi, x, quad, CheckPath.k_rule) for x in points])
    scale = float(np.max(np.abs(expected)))
    residual = float(np.max(np.abs(computed - expected)))
    return residual / scale if scale > 0 else residual
