import warnings
from logging import Logger, getLogger
from math import acosh, cosh, log
from typing import Any, Callable, Dict, Optional

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, root_validator, validator
from scipy.interpolate import BSpline, make_interp_spline

from .exceptions import AccuracyWarning, ContractViolation, DivergenceError
from .quadrature import QuadratureSpec
from .utils import FloatArray, as_float_array

logger: Logger = getLogger(__name__)

SPLINE_DEGREE = 5


class Profile1D(BaseModel):
    """A function of one variable on [lower, ∞) together with the metadata truncating its tail integrals

    Profiles hold the zonal profiles f₀(s), spherical means g_x(s) and intermediate functions ψ_x(r) of the
    inversion pipelines. A profile is either an analytic vectorised callable or a quintic spline sampled
    on a strictly increasing grid.
    """

    function: Callable[[FloatArray], FloatArray]
    """Vectorised evaluator"""
    lower: float = 1.0
    """Left end of the domain"""
    support_max: Optional[float] = None
    """The profile vanishes beyond this abscissa"""
    decay_mu: Optional[float] = None
    """Algebraic decay, the profile is O(s^-mu)"""
    decay_rate: Optional[float] = None
    """Exponential decay, the profile is O(e^{-rate s})"""
    smoothness: Optional[int] = None
    """Number of reliable derivatives, unlimited when None"""
    grid: Optional[np.ndarray] = None
    """Sampling grid of a spline profile"""
    spline: Optional[BSpline] = None
    """Interpolant of a sampled profile"""
    name: str = "profile"
    """Label used in logs and reports"""

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("grid")
    def increasing_grid(cls, value: Optional[np.ndarray]) -> Optional[np.ndarray]:
        """The sampling grid must be strictly increasing"""
        if value is not None and np.any(np.diff(value) <= 0):
            raise ValueError("the sampling grid must be strictly increasing")
        return value

    @root_validator
    def consistent_support(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        """The support must not end before the domain starts"""
        support_max, lower = values.get("support_max"), values.get("lower")
        if support_max is not None and lower is not None and support_max < lower:
            raise ValueError(f"support_max {support_max} lies below the lower limit {lower}")
        return values

    @property
    def analytic(self) -> bool:
        return self.spline is None

    def __call__(self, s: npt.ArrayLike) -> FloatArray:
        points = as_float_array(s)
        values = np.asarray(self.function(points), dtype=np.float64)
        if self.support_max is not None:
            values = np.where(points <= self.support_max, values, 0.0)
        return values

    def evaluate(self, s: float) -> float:
        """Evaluates the profile at a single abscissa"""
        return float(self(np.array([s]))[0])

    def upper_limit(self, start: npt.ArrayLike, alpha: float, quad: QuadratureSpec) -> FloatArray:
        """The abscissa beyond which a tail integral against a weight of order s^{alpha-1} is negligible

        :param start: Where the tail integral starts
        :param alpha: Growth order of the weight
        :param quad: The quadrature controls
        :raises DivergenceError: when the decay cannot make the tail integrable
        :returns: The truncation point, never below start
        """
        begin = as_float_array(start)
        if self.support_max is not None:
            return np.maximum(begin, self.support_max)
        if self.decay_rate is not None:
            return begin + (-log(quad.abs_tolerance) + 10.0 + 2.0 * max(alpha, 0.0)) / self.decay_rate
        if self.decay_mu is not None:
            excess = self.decay_mu - alpha
            if excess <= 0:
                raise DivergenceError(
                    f"Profile {self.name} with decay {self.decay_mu} is not integrable at order {alpha}"
                )
            limit = (10.0 / (excess * quad.abs_tolerance)) ** (1.0 / excess)
            if limit > quad.profile_cutoff:
                logger.warning("Profile %s truncated at %s instead of %s", self.name, quad.profile_cutoff, limit)
                warnings.warn(
                    AccuracyWarning(f"Tail of profile {self.name} truncated at {quad.profile_cutoff}", error=limit),
                    stacklevel=2,
                )
                limit = quad.profile_cutoff
            return np.maximum(begin, limit)
        raise DivergenceError(f"Profile {self.name} carries neither support nor decay information")

    def restricted(self, support_max: float) -> "Profile1D":
        """The same profile cut off beyond support_max"""
        current = self.support_max if self.support_max is not None else np.inf
        return self.copy(update={"support_max": float(min(current, support_max))})

    @classmethod
    def sampled(
        cls,
        function: Callable[[FloatArray], FloatArray],
        lower: float,
        upper: float,
        tolerance: float,
        name: str = "sampled",
        points: int = 257,
        max_points: int = 16385,
    ) -> "Profile1D":
        """Samples function on [lower, upper] into a quintic spline, doubling the grid until midpoints agree

        :param function: Vectorised function to sample
        :param lower: Left end of the grid
        :param upper: Right end of the grid, the sampled profile vanishes beyond it
        :param tolerance: Absolute midpoint tolerance
        :param name: Label of the profile
        :param points: Initial number of grid points
        :param max_points: Largest grid before giving up with a warning
        :returns: The sampled profile
        :rtype: Profile1D
        """
        if not upper > lower:
            raise ContractViolation(f"Cannot sample {name} on the empty range [{lower}, {upper}]")
        grid = np.linspace(lower, upper, points)
        values = np.asarray(function(grid), dtype=np.float64)
        while True:
            spline = make_interp_spline(grid, values, k=SPLINE_DEGREE)
            middles = 0.5 * (grid[1:] + grid[:-1])
            exact = np.asarray(function(middles), dtype=np.float64)
            error = float(np.max(np.abs(spline(middles) - exact)))
            if error <= tolerance or grid.size >= max_points:
                break
            merged = np.empty(grid.size + middles.size)
            merged[0::2], merged[1::2] = grid, middles
            merged_values = np.empty_like(merged)
            merged_values[0::2], merged_values[1::2] = values, exact
            grid, values = merged, merged_values
        if error > tolerance:
            logger.warning("Sampling of %s stopped at %s points with error %s", name, grid.size, error)
            warnings.warn(AccuracyWarning(f"Sampling of {name} did not reach {tolerance}", error=error), stacklevel=2)
        logger.debug("Sampled %s on %s points, midpoint error %s", name, grid.size, error)
        return cls(
            function=spline,
            lower=lower,
            support_max=upper,
            smoothness=SPLINE_DEGREE - 2,
            grid=grid,
            spline=spline,
            name=name,
        )


class RadialProfile(Profile1D):
    """Profile f₀ of a zonal field x ↦ f₀(x_{n+1}), defined for s ≥ 1"""

    @validator("lower")
    def starts_at_one(cls, value: float) -> float:
        if value != 1.0:
            raise ValueError("radial profiles are defined on [1, ∞)")
        return value


def exponential_profile(rate: float) -> RadialProfile:
    """f₀(s) = e^{-rate (s - 1)}

    This is e^{rate} times the field e^{-rate x_{n+1}}, normalised to f₀(1) = 1. Images, means and reconstructions
    carry the same factor, so absolute errors on the normalised field are e^{rate} times those on e^{-rate s}.
    """
    if not rate > 0:
        raise ContractViolation(f"The exponential rate must be positive, got {rate}")
    return RadialProfile(
        function=lambda s: np.exp(-rate * (s - 1.0)), decay_rate=rate, name=f"zonal-exp({rate:g})"
    )


def bump_profile(radius: float = 0.0, width: float = 2.0, height: float = 1.0) -> RadialProfile:
    """Smooth compactly supported f₀ centred at s = cosh(radius) with half-width width in s"""
    if not width > 0:
        raise ContractViolation(f"The bump width must be positive, got {width}")
    centre = cosh(radius)

    def bump(s: FloatArray) -> FloatArray:
        scaled = (s - centre) / width
        inside = np.abs(scaled) < 1.0
        safe = np.where(inside, scaled, 0.0)
        return np.where(inside, height * np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)

    return RadialProfile(function=bump, support_max=centre + width, name=f"zonal-bump({radius:g},{width:g})")


def sharpness_profile(p: float, n: int) -> RadialProfile:
    """f₀(s) = (s² - 1)^{(1 - n/2)/p} / ((s + 1)^{1/p} log(s + 1)), in L^p for every p > 1"""
    if p < 1:
        raise ContractViolation(f"The exponent p must be at least 1, got {p}")

    def profile(s: FloatArray) -> FloatArray:
        return (s**2 - 1.0) ** ((1.0 - n / 2.0) / p) / ((s + 1.0) ** (1.0 / p) * np.log(s + 1.0))

    return RadialProfile(function=profile, decay_mu=(n - 1.0) / p, name=f"sharpness({p:g})")


def zero_profile() -> RadialProfile:
    """f₀ ≡ 0"""
    return RadialProfile(function=np.zeros_like, support_max=1.0, name="zero")


def combined_profile(first: RadialProfile, second: RadialProfile, weight: float) -> RadialProfile:
    """f₀ = first - weight * second, supported where both are"""
    support = None
    if first.support_max is not None and second.support_max is not None:
        support = max(first.support_max, second.support_max)
    rates = [rate for rate in (first.decay_rate, second.decay_rate) if rate is not None]
    return RadialProfile(
        function=lambda s: first(s) - weight * second(s),
        support_max=support,
        decay_rate=min(rates) if support is None and rates else None,
        name=f"{first.name}-{weight:g}*{second.name}",
    )


def geodesic_support(profile: Profile1D) -> float:
    """Geodesic radius of the support of a zonal field with this profile, infinite when unbounded"""
    if profile.support_max is None:
        return float("inf")
    return acosh(max(profile.support_max, 1.0))

