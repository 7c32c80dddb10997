"""The pseudo-Euclidean space E^{n,1}, the hyperboloid H^n and the Lorentz group acting on it.

Vectors have n + 1 coordinates, the last one being x_{n+1}; x₀ = (0, ..., 0, 1) is the origin of H^n. The
batch helpers act on stacks of vectors or matrices along the leading axes.
"""
from logging import Logger, getLogger
from math import acosh, cosh, sinh, sqrt
from typing import Any, Dict, Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, root_validator, validator

from .constants import sphere_area
from .exceptions import ContractViolation, DecompositionFailure, GeometryError
from .profiles import Profile1D
from .quadrature import QuadratureSpec, power_weighted_integral
from .utils import FloatArray, as_float_array

logger: Logger = getLogger(__name__)

SHEET_TOLERANCE = 1e-12
GROUP_TOLERANCE = 1e-10
REASSEMBLY_TOLERANCE = 1e-8


class AmbientVector(BaseModel):
    coords: np.ndarray
    """Coordinates x_1, ..., x_{n+1}"""

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("coords", pre=True)
    def as_coordinates(cls, value: Any) -> np.ndarray:
        """Coordinates are stored as a read-only float vector of length n + 1 ≥ 3"""
        coords = np.array(value, dtype=np.float64)
        if coords.ndim != 1 or coords.size < 3:
            raise ContractViolation(f"Expected a vector with at least 3 coordinates, got shape {coords.shape}")
        coords.setflags(write=False)
        return coords

    @property
    def n(self) -> int:
        """Dimension of the hyperbolic space the vector lives over"""
        return int(self.coords.size - 1)


class HyperbolicPoint(AmbientVector):
    """A point of the upper sheet [x, x] = 1, x_{n+1} ≥ 1"""

    @validator("coords")
    def on_upper_sheet(cls, value: np.ndarray) -> np.ndarray:
        scale = max(1.0, float(value[-1]) ** 2)
        if abs(float(minkowski_form(value, value)) - 1.0) > SHEET_TOLERANCE * scale or value[-1] < 1.0 - 1e-12:
            raise GeometryError(f"{value} does not lie on the upper sheet of the hyperboloid")
        return value


class ConeVector(AmbientVector):
    """A vector of the asymptotic cone [x, x] = 0, x_{n+1} > 0"""

    @validator("coords")
    def on_cone(cls, value: np.ndarray) -> np.ndarray:
        scale = max(1.0, float(value[-1]) ** 2)
        if abs(float(minkowski_form(value, value))) > SHEET_TOLERANCE * scale or value[-1] <= 0:
            raise GeometryError(f"{value} does not lie on the asymptotic cone")
        return value


class LorentzElement(BaseModel):
    """An element of the identity component of SO(n, 1)"""

    matrix: np.ndarray
    """The (n+1)×(n+1) matrix acting on column vectors"""

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("matrix", pre=True)
    def as_matrix(cls, value: Any) -> np.ndarray:
        matrix = np.array(value, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 3:
            raise ContractViolation(f"Expected a square matrix of size at least 3, got shape {matrix.shape}")
        matrix.setflags(write=False)
        return matrix

    @validator("matrix")
    def preserves_form(cls, value: np.ndarray) -> np.ndarray:
        """gᵀJg = J, det g = 1 and g x₀ lies on the upper sheet"""
        form = minkowski_matrix(value.shape[0] - 1)
        scale = max(1.0, float(np.max(np.abs(value))) ** 2)
        if np.max(np.abs(value.T @ form @ value - form)) > GROUP_TOLERANCE * scale:
            raise ContractViolation("The matrix does not preserve the Minkowski form")
        if abs(float(np.linalg.det(value)) - 1.0) > GROUP_TOLERANCE * scale or value[-1, -1] < 1.0 - GROUP_TOLERANCE:
            raise ContractViolation("The matrix is not in the identity component")
        return value

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0] - 1)

    def inverse(self) -> "LorentzElement":
        """g⁻¹ = J gᵀ J"""
        form = minkowski_matrix(self.n)
        return LorentzElement.construct(matrix=form @ self.matrix.T @ form)

    def __matmul__(self, other: "LorentzElement") -> "LorentzElement":
        return LorentzElement.construct(matrix=self.matrix @ other.matrix)

    def apply(self, x: Union[AmbientVector, npt.ArrayLike]) -> FloatArray:
        """Applies the element to one vector or a stack of vectors along the last axis"""
        return np.einsum("ij,...j->...i", self.matrix, _coords(x))

    def apply_point(self, x: HyperbolicPoint) -> HyperbolicPoint:
        return HyperbolicPoint(coords=self.apply(x))


class IwasawaFactors(BaseModel):
    """The factors of g = n_v a_t k"""

    v: np.ndarray
    """Nilpotent coordinate in R^{n-1}"""
    t: float
    """Abelian coordinate"""
    k: np.ndarray
    """Rotation block in SO(n)"""

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @root_validator
    def rotation_block(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        k, v = values.get("k"), values.get("v")
        if k is None or v is None:
            return values
        if k.shape != (v.size + 1, v.size + 1):
            raise ContractViolation(f"Rotation block of shape {k.shape} does not match v of size {v.size}")
        _check_rotation(k)
        return values

    def element(self) -> LorentzElement:
        """Reassembles n_v a_t k"""
        return make_n(self.v) @ make_a(self.t, self.v.size + 1) @ make_k(self.k)


def _coords(x: Union[AmbientVector, npt.ArrayLike]) -> FloatArray:
    if isinstance(x, AmbientVector):
        return x.coords
    return as_float_array(x)


def _check_rotation(k: np.ndarray) -> None:
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ContractViolation(f"Expected a square rotation block, got shape {k.shape}")
    if np.max(np.abs(k.T @ k - np.eye(k.shape[0]))) > GROUP_TOLERANCE or abs(np.linalg.det(k) - 1.0) > GROUP_TOLERANCE:
        raise ContractViolation("The block is not a rotation")


def minkowski_matrix(n: int) -> FloatArray:
    """J = diag(-1, ..., -1, 1) of size n + 1"""
    form = -np.eye(n + 1)
    form[n, n] = 1.0
    return form


def origin(n: int) -> HyperbolicPoint:
    """x₀ = e_{n+1}"""
    coords = np.zeros(n + 1)
    coords[n] = 1.0
    return HyperbolicPoint(coords=coords)


def minkowski_form(
    x: Union[AmbientVector, npt.ArrayLike], y: Union[AmbientVector, npt.ArrayLike]
) -> Union[float, FloatArray]:
    """[x, y] = -x₁y₁ - ... - x_n y_n + x_{n+1} y_{n+1}, broadcast over leading axes

    :raises ContractViolation: when the dimensions differ

    >>> minkowski_form([0.0, 0.0, 1.0], [0.0, 0.0, 1.0])
    1.0
    >>> minkowski_form([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    -1.0
    """
    left, right = _coords(x), _coords(y)
    if left.shape[-1] != right.shape[-1]:
        raise ContractViolation(f"Cannot pair vectors of lengths {left.shape[-1]} and {right.shape[-1]}")
    value = left[..., -1] * right[..., -1] - np.sum(left[..., :-1] * right[..., :-1], axis=-1)
    return float(value) if np.ndim(value) == 0 else value


def geodesic_distance(x: HyperbolicPoint, y: HyperbolicPoint) -> float:
    """arccosh [x, y], clamped to 0 when the pairing falls below 1 by rounding only

    :raises GeometryError: when [x, y] < 1 - 1e-12
    """
    value = float(minkowski_form(x, y))
    if value < 1.0 - SHEET_TOLERANCE:
        raise GeometryError(f"Pairing {value} < 1, the points are not both on the upper sheet")
    return acosh(max(value, 1.0))


def hyperbolic_coords(theta: npt.ArrayLike, r: float) -> HyperbolicPoint:
    """The point θ sinh r + e_{n+1} cosh r

    :param theta: Unit vector of R^n
    :param r: Geodesic distance from x₀
    :raises ContractViolation: when theta is not a unit vector
    """
    direction = as_float_array(theta)
    if direction.ndim != 1 or abs(float(np.linalg.norm(direction)) - 1.0) > 1e-12:
        raise ContractViolation(f"{direction} is not a unit vector")
    return HyperbolicPoint(coords=np.append(direction * sinh(r), cosh(r)))


def horospherical_coords(v: npt.ArrayLike, t: float) -> HyperbolicPoint:
    """The point n_v a_t x₀ = (e^{-t} v, sinh t + |v|² e^{-t}/2, cosh t + |v|² e^{-t}/2)"""
    return HyperbolicPoint(coords=horospherical_points(as_float_array(v), as_float_array(t)))


def horospherical_points(v: FloatArray, t: FloatArray) -> FloatArray:
    """Batch version of horospherical_coords over the leading axes of v and t"""
    decay = np.asarray(np.exp(-t))
    half_square = np.asarray(0.5 * np.sum(v**2, axis=-1) * decay)
    return np.concatenate(
        [v * decay[..., None], (np.sinh(t) + half_square)[..., None], (np.cosh(t) + half_square)[..., None]], axis=-1
    )


def horospherical_chart(x: Union[HyperbolicPoint, npt.ArrayLike]) -> Tuple[FloatArray, FloatArray]:
    """Inverts horospherical_points: t = -log(x_{n+1} - x_n), v = e^t (x_1, ..., x_{n-1})"""
    coords = _coords(x)
    t = np.asarray(-np.log(coords[..., -1] - coords[..., -2]))
    return coords[..., :-2] * np.exp(t)[..., None], t


def point_transport(x: HyperbolicPoint) -> LorentzElement:
    """r_x = n_v a_t taking x₀ to x, read off the horospherical coordinates of x"""
    v, t = horospherical_chart(x)
    return LorentzElement.construct(matrix=n_matrices(v) @ a_matrices(t, x.n))


def radial_point(n: int, s: float) -> HyperbolicPoint:
    """The point at height x_{n+1} = s on the geodesic through x₀ along e_n"""
    if s < 1.0:
        raise ContractViolation(f"Height {s} lies below the origin")
    coords = np.zeros(n + 1)
    coords[n - 1], coords[n] = sqrt(s * s - 1.0), s
    return HyperbolicPoint(coords=coords)


def n_matrices(v: npt.ArrayLike) -> FloatArray:
    """Stack of nilpotent matrices n_v for v of shape (..., n-1)"""
    vectors = as_float_array(v)
    dim = vectors.shape[-1]
    n = dim + 1
    shape = vectors.shape[:-1]
    out = np.zeros(shape + (n + 1, n + 1))
    out[..., np.arange(dim), np.arange(dim)] = 1.0
    half_square = 0.5 * np.sum(vectors**2, axis=-1)
    out[..., :dim, n - 1] = -vectors
    out[..., :dim, n] = vectors
    out[..., n - 1, :dim] = vectors
    out[..., n, :dim] = vectors
    out[..., n - 1, n - 1] = 1.0 - half_square
    out[..., n - 1, n] = half_square
    out[..., n, n - 1] = -half_square
    out[..., n, n] = 1.0 + half_square
    return out


def a_matrices(t: npt.ArrayLike, n: int) -> FloatArray:
    """Stack of hyperbolic rotations a_t in the (x_n, x_{n+1}) plane"""
    times = as_float_array(t)
    out = np.zeros(times.shape + (n + 1, n + 1))
    out[..., np.arange(n - 1), np.arange(n - 1)] = 1.0
    out[..., n - 1, n - 1] = out[..., n, n] = np.cosh(times)
    out[..., n - 1, n] = out[..., n, n - 1] = np.sinh(times)
    return out


def k_matrices(k: npt.ArrayLike) -> FloatArray:
    """Stack of block embeddings diag(k, 1) of rotations of shape (..., n, n)"""
    blocks = as_float_array(k)
    n = blocks.shape[-1]
    out = np.zeros(blocks.shape[:-2] + (n + 1, n + 1))
    out[..., :n, :n] = blocks
    out[..., n, n] = 1.0
    return out


def make_n(v: npt.ArrayLike) -> LorentzElement:
    """The nilpotent element n_v, v ∈ R^{n-1}"""
    return LorentzElement(matrix=n_matrices(np.atleast_1d(as_float_array(v))))


def make_a(t: float, n: int) -> LorentzElement:
    """The hyperbolic rotation a_t of E^{n,1}"""
    return LorentzElement(matrix=a_matrices(t, n))


def make_k(k: npt.ArrayLike) -> LorentzElement:
    """The block embedding diag(k, 1) of a rotation k ∈ SO(n)

    :raises ContractViolation: when k is not a rotation
    """
    block = as_float_array(k)
    _check_rotation(block)
    return LorentzElement(matrix=k_matrices(block))


def nak_arrays(g: npt.ArrayLike) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """Batch Iwasawa factors (v, t, k) of a stack of Lorentz matrices, without validation

    t = -log(p_{n+1} - p_n) and v = e^t (p_1, ..., p_{n-1}) for p = g x₀, then k = a_{-t} n_{-v} g.
    """
    matrices = as_float_array(g)
    n = matrices.shape[-1] - 1
    image = matrices[..., :, n]
    gap = image[..., n] - image[..., n - 1]
    if np.any(gap <= 0):
        raise DecompositionFailure("The element does not map x₀ into the upper sheet")
    t = np.asarray(-np.log(gap))
    v = image[..., : n - 1] * np.exp(t)[..., None]
    rotation = a_matrices(-t, n) @ n_matrices(-v) @ matrices
    return v, t, rotation[..., :n, :n]


def iwasawa_nak(g: LorentzElement) -> IwasawaFactors:
    """The unique factors (v, t, k) with g = n_v a_t k

    :raises DecompositionFailure: when the reassembly residual exceeds 1e-8
    """
    v, t, k = nak_arrays(g.matrix)
    reassembled = n_matrices(v) @ a_matrices(t, g.n) @ k_matrices(k)
    scale = max(1.0, float(np.max(np.abs(g.matrix))))
    residual = float(np.max(np.abs(reassembled - g.matrix)))
    if residual > REASSEMBLY_TOLERANCE * scale:
        raise DecompositionFailure(f"Iwasawa reassembly residual {residual} exceeds {REASSEMBLY_TOLERANCE}")
    logger.debug("Iwasawa factors t=%s |v|=%s residual=%s", float(t), float(np.linalg.norm(v)), residual)
    return IwasawaFactors(v=v, t=float(t), k=k)


def radial_measure_integral(f0: Profile1D, n: int, quad: QuadratureSpec) -> float:
    """σ_{n-1} ∫₁^∞ f₀(s) (s² - 1)^{n/2-1} ds, the integral over H^n of the zonal field with profile f₀

    :raises DivergenceError: when the decay of f₀ does not make the integral finite
    """
    exponent = n / 2.0 - 1.0
    upper = float(f0.upper_limit(1.0, n - 1.0, quad))
    result = power_weighted_integral(lambda s: f0(s) * (s + 1.0) ** exponent, 1.0, upper, exponent, quad)
    return sphere_area(n - 1) * float(result.value)


def distance_to_origin(x: HyperbolicPoint) -> float:
    """Geodesic distance from x₀, arccosh x_{n+1}"""
    return acosh(max(float(x.coords[-1]), 1.0))
