"""Scalar fields on H^n: general callables, zonal fields about a centre and the named test fields."""
from logging import Logger, getLogger
from math import acosh, cosh, exp, inf
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, root_validator, validator

from .exceptions import ContractViolation, UnknownField
from .hyperboloid import (
    HyperbolicPoint,
    LorentzElement,
    minkowski_form,
    origin,
    point_transport,
    radial_measure_integral,
    radial_point,
)
from .profiles import (
    Profile1D,
    RadialProfile,
    bump_profile,
    combined_profile,
    exponential_profile,
    geodesic_support,
    sharpness_profile,
    zero_profile,
)
from .quadrature import QuadratureSpec
from .utils import FloatArray, as_float_array, parse_spec

logger: Logger = getLogger(__name__)


class ScalarField(BaseModel):
    """A real function on H^n with the support and decay information its integrals are truncated by"""

    n: int
    """Dimension of the hyperbolic space"""
    function: Callable[[FloatArray], FloatArray]
    """Vectorised evaluator on ambient coordinates of shape (..., n + 1)"""
    support_radius: float = inf
    """The field vanishes beyond this geodesic distance from x₀"""
    decay_mu: Optional[float] = None
    """Algebraic decay, f(x) = O(x_{n+1}^-mu)"""
    decay_rate: Optional[float] = None
    """Exponential decay, f(x) = O(e^{-rate x_{n+1}})"""
    name: str = "field"

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("n")
    def valid_dimension(cls, value: int) -> int:
        if value < 2:
            raise ContractViolation(f"Fields live on H^n with n >= 2, got {value}")
        return value

    @root_validator(skip_on_failure=True)
    def vanishes_outside_support(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        """Spot-checks that the field vanishes on a sphere just outside its support"""
        radius, n = values["support_radius"], values["n"]
        if np.isfinite(radius):
            directions = np.eye(n)
            outside = radius + 0.25
            points = np.concatenate(
                [np.vstack([directions, -directions]) * np.sinh(outside), np.full((2 * n, 1), np.cosh(outside))],
                axis=1,
            )
            if np.any(np.asarray(values["function"](points)) != 0.0):
                raise ContractViolation(f"Field {values['name']} does not vanish beyond radius {radius}")
        return values

    def __call__(self, coords: npt.ArrayLike) -> FloatArray:
        return np.asarray(self.function(as_float_array(coords)), dtype=np.float64)

    def evaluate(self, x: HyperbolicPoint) -> float:
        """The value at a single point"""
        return float(self(x.coords))

    def height_envelope(self) -> Profile1D:
        """A profile in x_{n+1} carrying the truncation information of the field"""
        return Profile1D(
            function=np.zeros_like,
            support_max=None if not np.isfinite(self.support_radius) else cosh(self.support_radius),
            decay_mu=self.decay_mu,
            decay_rate=self.decay_rate,
            name=self.name,
        )

    def height_limit(self, alpha: float, quad: QuadratureSpec) -> float:
        """Height x_{n+1} beyond which integrals of growth order alpha see a negligible field

        Fields without support or decay information are cut at quad.truncation_radius.
        """
        envelope = self.height_envelope()
        if envelope.support_max is None and envelope.decay_mu is None and envelope.decay_rate is None:
            return cosh(quad.truncation_radius)
        return float(envelope.upper_limit(1.0, alpha, quad))

    def transported(self, gamma: LorentzElement) -> "ScalarField":
        """The field x ↦ f(γ x)"""
        matrix = gamma.matrix
        shift = acosh(max(float(matrix[-1, -1]), 1.0))
        return ScalarField(
            n=self.n,
            function=lambda coords: self.function(np.einsum("ij,...j->...i", matrix, coords)),
            support_radius=self.support_radius + shift,
            decay_mu=self.decay_mu,
            decay_rate=None if self.decay_rate is None else self.decay_rate * exp(-shift),
            name=f"{self.name}∘γ",
        )


class ZonalField(ScalarField):
    """The field x ↦ f₀([x, c]), invariant under the rotations fixing the centre c"""

    profile: RadialProfile
    """The profile f₀"""
    center: np.ndarray
    """Ambient coordinates of the centre c"""

    @root_validator(pre=True)
    def from_profile(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        profile: Optional[RadialProfile] = values.get("profile")
        n = values.get("n")
        if profile is None or n is None:
            return values
        center = values.get("center")
        center = origin(n).coords if center is None else HyperbolicPoint(coords=center).coords
        offset = acosh(max(float(center[-1]), 1.0))
        values["center"] = center
        values["function"] = lambda coords: profile(minkowski_form(coords, center))
        values["support_radius"] = geodesic_support(profile) + offset
        values["decay_mu"] = profile.decay_mu
        values["decay_rate"] = None if profile.decay_rate is None else profile.decay_rate * exp(-offset)
        values.setdefault("name", profile.name)
        return values

    @property
    def center_point(self) -> HyperbolicPoint:
        return HyperbolicPoint(coords=self.center)

    @property
    def centered(self) -> bool:
        """Whether the centre is x₀"""
        return bool(np.allclose(self.center[:-1], 0.0, atol=1e-15))

    def center_transport(self) -> LorentzElement:
        """γ_c taking x₀ to the centre"""
        return point_transport(self.center_point)

    def transported(self, gamma: LorentzElement) -> "ZonalField":
        """f∘γ is zonal about γ⁻¹ c"""
        return ZonalField(
            n=self.n, profile=self.profile, center=gamma.inverse().apply(self.center), name=f"{self.name}∘γ"
        )


def zonal_field(profile: RadialProfile, n: int, center: Optional[npt.ArrayLike] = None) -> ZonalField:
    """The zonal field with profile f₀ about center, x₀ by default"""
    return ZonalField(n=n, profile=profile, center=None if center is None else as_float_array(center))


def zero_field(n: int) -> ZonalField:
    return zonal_field(zero_profile(), n)


def shifted_bump(n: int, center: float = 0.4, width: float = 1.5) -> ZonalField:
    """A bump about the point at geodesic distance center from x₀ along e_n"""
    return ZonalField(
        n=n,
        profile=bump_profile(0.0, width),
        center=radial_point(n, cosh(center)).coords,
        name=f"shifted-bump({center:g},{width:g})",
    )


def zero_mean_field(n: int, quad: QuadratureSpec, inner: float = 1.0, outer: float = 2.0) -> ZonalField:
    """A difference of two centred bumps with vanishing integral over H^n"""
    first, second = bump_profile(0.0, inner), bump_profile(0.0, outer)
    weight = radial_measure_integral(first, n, quad) / radial_measure_integral(second, n, quad)
    return zonal_field(combined_profile(first, second, weight), n)


_FIELDS: Dict[str, Callable[[int, List[float], QuadratureSpec], ScalarField]] = {
    "zonal-exp": lambda n, args, quad: zonal_field(exponential_profile(*(args or [1.0])), n),
    "zonal-bump": lambda n, args, quad: zonal_field(bump_profile(*(args or [0.0, 2.0])), n),
    "shifted-bump": lambda n, args, quad: shifted_bump(n, *args),
    "sharpness": lambda n, args, quad: zonal_field(sharpness_profile(*(args or [2.0]), n=n), n),
    "zero-mean": lambda n, args, quad: zero_mean_field(n, quad, *args),
    "zero": lambda n, args, quad: zero_field(n),
}


def parse_field(text: str, n: int, quad: QuadratureSpec) -> ScalarField:
    """Builds a test field from its description, such as ``zonal-exp:1.0`` or ``shifted-bump:0.4,1.5``

    ``zonal-exp:λ`` is the profile e^{-λ(s - 1)}, the field e^{-λ x_{n+1}} scaled by e^{λ} to equal one at x₀.

    :raises UnknownField: when the name is not a known test field
    """
    name, arguments = parse_spec(text)
    if name not in _FIELDS:
        raise UnknownField(f"Unknown field '{name} - expected one of: {', '.join(_FIELDS.keys())}'")
    logger.debug("Building field %s with arguments %s", name, arguments)
    return _FIELDS[name](n, arguments, quad)


def field_names() -> List[str]:
    return list(_FIELDS.keys())
