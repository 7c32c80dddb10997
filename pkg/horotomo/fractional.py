"""Right-sided Riemann-Liouville integrals on [1, ∞), their inverses and the Abel kernel of the zonal identities."""
from logging import Logger, getLogger
from math import gamma
from typing import Dict, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt

from .constants import gamma_ratio, sphere_area
from .exceptions import ContractViolation, InsufficientSmoothness
from .profiles import Profile1D
from .quadrature import QuadratureResult, QuadratureSpec, integrate, power_weighted_integral
from .utils import FloatArray, as_float_array

logger: Logger = getLogger(__name__)

Scalar = Union[float, FloatArray]

# Fourth order central stencils: offsets and weights
STENCILS: Dict[int, Tuple[FloatArray, FloatArray]] = {
    1: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
    2: (np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
    3: (
        np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]),
        np.array([1.0 / 8.0, -1.0, 13.0 / 8.0, -13.0 / 8.0, 1.0, -1.0 / 8.0]),
    ),
    4: (
        np.array([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]),
        np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]) / 6.0,
    ),
}


def _scalar(value: FloatArray) -> Scalar:
    return float(value) if np.ndim(value) == 0 else value


def default_step(s: npt.ArrayLike, order: int) -> FloatArray:
    """Finite difference step max(1e-5, 1e-4 s) widened by a decade per extra derivative"""
    return np.maximum(1e-5, 1e-4 * np.abs(as_float_array(s))) * 10.0 ** (order - 1)


def derivative(profile: Profile1D, s: npt.ArrayLike, order: int, step: Optional[npt.ArrayLike] = None) -> Scalar:
    """The order-th derivative of a profile

    Sampled profiles are differentiated through their spline, analytic ones by central differences whose
    stencil never reaches below the profile's lower limit.

    :param profile: The profile to differentiate
    :param s: Abscissa(e) strictly above profile.lower
    :param order: Derivative order, 0 to 4
    :param step: Finite difference step, see default_step
    :raises InsufficientSmoothness: when the profile cannot supply order derivatives
    :raises ContractViolation: when an abscissa does not lie above the lower limit
    """
    points = as_float_array(s)
    if order == 0:
        return _scalar(profile(points))
    if profile.smoothness is not None and order > profile.smoothness:
        raise InsufficientSmoothness(
            f"Profile {profile.name} supplies {profile.smoothness} derivatives, {order} were requested"
        )
    if profile.spline is not None:
        values = profile.spline.derivative(order)(points)
        if profile.support_max is not None:
            values = np.where(points <= profile.support_max, values, 0.0)
        return _scalar(np.asarray(values, dtype=np.float64))
    if order not in STENCILS:
        raise InsufficientSmoothness(f"No difference stencil for derivatives of order {order}")
    offsets, weights = STENCILS[order]
    room = points - profile.lower
    if np.any(room <= 0):
        raise ContractViolation(f"Cannot differentiate {profile.name} at or below its lower limit {profile.lower}")
    h = default_step(points, order) if step is None else as_float_array(step)
    h = np.minimum(h, room / (np.max(np.abs(offsets)) + 0.5))
    values = profile(points[..., None] + h[..., None] * offsets)
    return _scalar(np.sum(values * weights, axis=-1) / h**order)


def fractional_integral(psi: Profile1D, r: npt.ArrayLike, alpha: float, quad: QuadratureSpec) -> QuadratureResult:
    """(I^α ψ)(r) = Γ(α)^{-1} ∫_r^∞ ψ(s) (s - r)^{α-1} ds with its error estimate

    :raises ContractViolation: when α ≤ 0
    :raises DivergenceError: when ψ does not decay fast enough for the order α
    """
    if not alpha > 0:
        raise ContractViolation(f"The fractional order must be positive, got {alpha}")
    start = as_float_array(r)
    upper = psi.upper_limit(start, alpha, quad)
    result = power_weighted_integral(psi, start, upper, alpha - 1.0, quad)
    scale = 1.0 / gamma(alpha)
    return QuadratureResult(value=result.value * scale, error=result.error * scale, evals=result.evals)


def rl_integral_minus(psi: Profile1D, r: npt.ArrayLike, alpha: float, quad: QuadratureSpec) -> Scalar:
    """The right-sided Riemann-Liouville integral of order α at r

    >>> from horotomo.profiles import exponential_profile
    >>> quad = QuadratureSpec()
    >>> round(rl_integral_minus(exponential_profile(1.0), 1.0, 1.0, quad), 10)
    1.0
    """
    return _scalar(as_float_array(fractional_integral(psi, r, alpha, quad).value))


def integrated_profile(psi: Profile1D, alpha: float, quad: QuadratureSpec) -> Profile1D:
    """The profile r ↦ (I^α ψ)(r), sharing the support of ψ"""
    return Profile1D(
        function=lambda r: as_float_array(fractional_integral(psi, r, alpha, quad).value),
        lower=psi.lower,
        support_max=psi.support_max,
        decay_mu=None if psi.decay_mu is None else psi.decay_mu - alpha,
        decay_rate=psi.decay_rate,
        name=f"I^{alpha:g}({psi.name})",
    )


def abel_forward_sqrt(phi: Profile1D, s: npt.ArrayLike, d: int, quad: QuadratureSpec) -> Scalar:
    """ψ(s) = 2^{d/2} σ_{d-1} ∫_1^s φ(r) (r² - 1)^{-1/2} (s - r)^{d/2-1} dr

    The range is split at the midpoint; the left half is mapped by r = 1 + ρ², the right half is integrated
    against the weight (s - r)^{d/2-1} from the upper end.
    """
    end = as_float_array(s)
    if np.any(end <= 1.0):
        raise ContractViolation("The Abel integral needs s > 1")
    middle = 0.5 * (1.0 + end)
    exponent = d / 2.0 - 1.0
    top = end[..., None]

    def left(rho: FloatArray) -> FloatArray:
        square = rho**2
        return 2.0 * phi(1.0 + square) * (top - 1.0 - square) ** exponent / np.sqrt(square + 2.0)

    def right(offset: FloatArray) -> FloatArray:
        r = top - offset
        return phi(r) / np.sqrt(r**2 - 1.0)

    near_one = integrate(left, np.zeros_like(end), np.sqrt(middle - 1.0), quad)
    near_s = power_weighted_integral(right, np.zeros_like(end), end - middle, exponent, quad)
    constant = 2.0 ** (d / 2.0) * sphere_area(d - 1)
    return _scalar(constant * (as_float_array(near_one.value) + as_float_array(near_s.value)))


def abel_power_constant(d: int, alpha: float) -> float:
    """Coefficient of (s - 1)^{(α+d)/2-1} in the Abel image of (r - 1)^{α/2-1} (r² - 1)^{1/2}"""
    return 2.0 ** (d / 2.0) * sphere_area(d - 1) * gamma_ratio([alpha / 2.0, d / 2.0], [(alpha + d) / 2.0])


def frac_derivative_minus(
    psi: Profile1D,
    s: npt.ArrayLike,
    d: int,
    quad: QuadratureSpec,
    form: str = "standard",
    step: Optional[npt.ArrayLike] = None,
) -> Scalar:
    """D^{d/2} ψ at s, the left inverse of I^{d/2}

    For d = 2m this is (-1)^m ψ^{(m)}. For d = 2m - 1 the standard form is
    (-1)^m s^{1/2} d/ds [s^{1/2} I^{1/2}(ψ^{(m-1)} / r)] and the alternative form is
    (-1)^m s^{1/2} (d/ds)^m [s^{m-1/2} I^{1/2}(r^{-m} ψ)].

    :param psi: The profile, m derivatives (even d) or m - 1 derivatives (odd d) are needed
    :param s: Abscissa(e) above psi.lower
    :param d: The horosphere dimension
    :param quad: The quadrature controls of the half-order integral
    :param form: "standard" or "alternative", odd d only
    :param step: Finite difference step of the outer derivatives
    :raises ContractViolation: for an unknown form or d < 1
    """
    if d < 1:
        raise ContractViolation(f"The horosphere dimension must be positive, got {d}")
    points = as_float_array(s)
    if d % 2 == 0:
        m = d // 2
        return _scalar((-1.0) ** m * as_float_array(derivative(psi, points, m, step)))
    m = (d + 1) // 2
    if form == "standard":
        inner = Profile1D(
            function=lambda r: as_float_array(derivative(psi, r, m - 1)) / r,
            lower=psi.lower,
            support_max=psi.support_max,
            decay_mu=None if psi.decay_mu is None else psi.decay_mu + 1.0,
            decay_rate=psi.decay_rate,
            name=f"{psi.name}/r",
        )
        weight, outer_order = 0.5, 1
    elif form == "alternative":
        inner = Profile1D(
            function=lambda r: psi(r) / r**m,
            lower=psi.lower,
            support_max=psi.support_max,
            decay_mu=None if psi.decay_mu is None else psi.decay_mu + m,
            decay_rate=psi.decay_rate,
            name=f"{psi.name}/r^{m}",
        )
        weight, outer_order = m - 0.5, m
    else:
        raise ContractViolation(f"Unknown form '{form} - expected one of: standard, alternative'")
    outer = Profile1D(
        function=lambda sigma: sigma**weight * as_float_array(fractional_integral(inner, sigma, 0.5, quad).value),
        lower=psi.lower,
        name=f"s^{weight:g} I^0.5({inner.name})",
    )
    value = (-1.0) ** m * np.sqrt(points) * as_float_array(derivative(outer, points, outer_order, step))
    logger.debug("D^%s of %s evaluated with the %s form", d / 2.0, psi.name, form)
    return _scalar(value)
