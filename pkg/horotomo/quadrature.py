"""Vectorised quadrature on intervals and spheres.

Every integrand receives an array of nodes whose leading axes follow the broadcast shape of the
integration limits and whose trailing axis enumerates the nodes, and returns values of the same shape.
"""
import warnings
from enum import Enum
from logging import Logger, getLogger
from math import isclose, log
from typing import Any, Callable, Optional, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, validator
from scipy.special import roots_gegenbauer, roots_legendre

from .exceptions import AccuracyWarning, ContractViolation
from .utils import FloatArray, MemoCache, as_float_array

logger: Logger = getLogger(__name__)

Integrand = Callable[[FloatArray], FloatArray]

GAUSS_POINTS = 16
_legendre_nodes, _legendre_weights = roots_legendre(GAUSS_POINTS)
UNIT_NODES: FloatArray = 0.5 * (_legendre_nodes + 1.0)
UNIT_WEIGHTS: FloatArray = 0.5 * _legendre_weights

TANH_SINH_LIMIT = 3.0


class Scheme(str, Enum):
    adaptive_simpson = "adaptive-simpson"
    gauss_legendre = "gauss-legendre-composite"
    tanh_sinh = "tanh-sinh"


class QuadratureSpec(BaseModel):
    rel_tolerance: float = 1e-10
    """Relative tolerance of every refinement loop"""
    abs_tolerance: float = 1e-12
    """Absolute tolerance of every refinement loop"""
    truncation_radius: float = 12.0
    """Geodesic radius used when an integrand carries no support or decay information"""
    max_evals: int = 50_000
    """Evaluation budget per integral and per batch entry"""
    scheme: Scheme = Scheme.gauss_legendre
    """The one dimensional rule"""
    sphere_order: int = 12
    """Starting order of the product rules on spheres"""
    profile_cutoff: float = 1e8
    """Largest abscissa used for algebraically decaying profiles"""

    class Config:
        frozen = True

    @validator("rel_tolerance", "abs_tolerance", "truncation_radius", "profile_cutoff")
    def positive(cls, value: float) -> float:
        """Tolerances and cutoffs must be positive"""
        if not value > 0:
            raise ValueError(f"expected a positive value, got {value}")
        return value

    @validator("max_evals")
    def enough_evaluations(cls, value: int) -> int:
        """The evaluation budget must allow at least a hundred nodes"""
        if value < 100:
            raise ValueError(f"max_evals must be at least 100, got {value}")
        return value

    @validator("sphere_order")
    def positive_order(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"sphere_order must be at least 1, got {value}")
        return value

    def tolerance(self, value: npt.ArrayLike) -> FloatArray:
        """The admissible error for an estimate

        :param value: The current estimate
        :returns: max(abs_tolerance, rel_tolerance * |value|)
        """
        return np.maximum(self.abs_tolerance, self.rel_tolerance * np.abs(value))


class QuadratureResult(BaseModel):
    value: Any
    """The estimate, a float or an array following the limits"""
    error: Any
    """The refinement difference of the last step"""
    evals: int
    """Nodes evaluated per batch entry"""

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            value=self.value + other.value, error=self.error + other.error, evals=self.evals + other.evals
        )


def _warn(scheme: str, value: FloatArray, error: FloatArray, evals: int) -> None:
    worst = float(np.max(error)) if np.size(error) else 0.0
    logger.warning("%s stopped after %s evaluations with error %s", scheme, evals, worst)
    warnings.warn(
        AccuracyWarning(f"{scheme} did not reach its tolerance within {evals} evaluations", value, error),
        stacklevel=3,
    )


def _panel_rule(panels: int) -> Tuple[FloatArray, FloatArray]:
    offsets = np.arange(panels, dtype=np.float64)[:, None]
    nodes = ((offsets + UNIT_NODES[None, :]) / panels).ravel()
    weights = np.tile(UNIT_WEIGHTS, panels) / panels
    return nodes, weights


def _gauss_legendre(
    evaluate: Integrand, width: FloatArray, quad: QuadratureSpec
) -> Tuple[FloatArray, FloatArray, int]:
    panels = 4
    nodes, weights = _panel_rule(panels)
    previous = np.sum(evaluate(nodes) * weights, axis=-1) * width
    evals = GAUSS_POINTS * panels
    while True:
        panels *= 2
        nodes, weights = _panel_rule(panels)
        current = np.sum(evaluate(nodes) * weights, axis=-1) * width
        evals += GAUSS_POINTS * panels
        error = np.abs(current - previous)
        if np.all(error <= quad.tolerance(current)):
            logger.debug("gauss-legendre converged with %s panels", panels)
            return current, error, evals
        if evals >= quad.max_evals:
            _warn(Scheme.gauss_legendre.value, current, error, evals)
            return current, error, evals
        previous = current


def _tanh_sinh_rule(level: int) -> Tuple[FloatArray, FloatArray]:
    step = 2.0**-level
    abscissae = np.arange(-TANH_SINH_LIMIT, TANH_SINH_LIMIT + 0.5 * step, step)
    inner = 0.5 * np.pi * np.sinh(abscissae)
    nodes = 1.0 / (1.0 + np.exp(-2.0 * inner))
    weights = step * 0.25 * np.pi * np.cosh(abscissae) / np.cosh(inner) ** 2
    return nodes, weights


def _tanh_sinh(evaluate: Integrand, width: FloatArray, quad: QuadratureSpec) -> Tuple[FloatArray, FloatArray, int]:
    level = 2
    nodes, weights = _tanh_sinh_rule(level)
    previous = np.sum(evaluate(nodes) * weights, axis=-1) * width
    evals = nodes.size
    while True:
        level += 1
        nodes, weights = _tanh_sinh_rule(level)
        current = np.sum(evaluate(nodes) * weights, axis=-1) * width
        evals += nodes.size
        error = np.abs(current - previous)
        if np.all(error <= quad.tolerance(current)):
            logger.debug("tanh-sinh converged at level %s", level)
            return current, error, evals
        if evals >= quad.max_evals:
            _warn(Scheme.tanh_sinh.value, current, error, evals)
            return current, error, evals
        previous = current


def _adaptive_simpson(
    evaluate: Integrand, width: FloatArray, quad: QuadratureSpec
) -> Tuple[FloatArray, FloatArray, int]:
    starts = np.linspace(0.0, 1.0, 9)
    values = evaluate(np.linspace(0.0, 1.0, 17))
    evals = 17
    stack = [
        (starts[i], starts[i + 1], values[..., 2 * i], values[..., 2 * i + 1], values[..., 2 * i + 2])
        for i in range(8)
    ]
    total = np.zeros(np.shape(width))
    error = np.zeros(np.shape(width))
    exhausted = False
    while stack:
        low, high, f_low, f_mid, f_high = stack.pop()
        middle = 0.5 * (low + high)
        quarters = evaluate(np.array([0.5 * (low + middle), 0.5 * (middle + high)]))
        evals += 2
        f_left, f_right = quarters[..., 0], quarters[..., 1]
        whole = (high - low) / 6.0 * (f_low + 4.0 * f_mid + f_high) * width
        left = (middle - low) / 6.0 * (f_low + 4.0 * f_left + f_mid) * width
        right = (high - middle) / 6.0 * (f_mid + 4.0 * f_right + f_high) * width
        difference = left + right - whole
        local = quad.abs_tolerance * (high - low) + quad.rel_tolerance * np.abs(left + right)
        exhausted = exhausted or evals >= quad.max_evals
        if exhausted or high - low < 1e-12 or np.all(np.abs(difference) <= 15.0 * local):
            total += left + right + difference / 15.0
            error += np.abs(difference) / 15.0
        else:
            stack.append((middle, high, f_mid, f_right, f_high))
            stack.append((low, middle, f_low, f_left, f_mid))
    if exhausted:
        _warn(Scheme.adaptive_simpson.value, total, error, evals)
    return total, error, evals


_SCHEMES = {
    Scheme.gauss_legendre: _gauss_legendre,
    Scheme.tanh_sinh: _tanh_sinh,
    Scheme.adaptive_simpson: _adaptive_simpson,
}


def integrate(func: Integrand, a: npt.ArrayLike, b: npt.ArrayLike, quad: QuadratureSpec) -> QuadratureResult:
    """Integrates func over [a, b] to the tolerances of quad

    The limits may be arrays, in which case one integral per broadcast entry is computed and the
    integrand is called with nodes of shape ``broadcast_shape + (k,)``.

    :param func: The vectorised integrand
    :type func: Callable[[FloatArray], FloatArray]
    :param a: Lower limit(s)
    :param b: Upper limit(s)
    :param quad: The quadrature controls
    :type quad: QuadratureSpec
    :returns: The estimate with its error and evaluation count
    :rtype: QuadratureResult
    """
    lower, upper = np.broadcast_arrays(as_float_array(a), as_float_array(b))
    width = upper - lower

    def evaluate(nodes: FloatArray) -> FloatArray:
        return np.asarray(func(lower[..., None] + width[..., None] * nodes), dtype=np.float64)

    value, error, evals = _SCHEMES[quad.scheme](evaluate, width, quad)
    if np.ndim(value) == 0:
        return QuadratureResult(value=float(value), error=float(error), evals=evals)
    return QuadratureResult(value=value, error=error, evals=evals)


def substitution_power(exponent: float) -> float:
    """Power m of the substitution s - a = σ^m smoothing the weight (s - a)^exponent

    >>> substitution_power(-0.5), substitution_power(0.5), substitution_power(0.0)
    (2.0, 2.0, 1.0)
    """
    order = exponent + 1.0
    if order <= 0:
        raise ContractViolation(f"The weight exponent {exponent} is not integrable")
    if exponent >= 0 and isclose(exponent, round(exponent), abs_tol=1e-12):
        return 1.0
    if order < 1.0:
        return 1.0 / order
    if isclose(2.0 * order, round(2.0 * order), abs_tol=1e-12):
        return 2.0
    return 1.0


def _split_limits(a: npt.ArrayLike, b: npt.ArrayLike) -> Tuple[FloatArray, FloatArray, FloatArray]:
    lower, upper = np.broadcast_arrays(as_float_array(a), as_float_array(b))
    span = np.maximum(upper - lower, 0.0)
    return lower, span, np.minimum(span, 1.0)


def power_weighted_integral(
    func: Integrand, a: npt.ArrayLike, b: npt.ArrayLike, exponent: float, quad: QuadratureSpec
) -> QuadratureResult:
    """Computes ∫_a^b func(s) (s - a)^exponent ds for exponent > -1

    The unit interval next to a is mapped by s - a = σ^m so the integrand becomes smooth; the rest is
    integrated as is.

    :param func: The vectorised smooth factor
    :param a: Lower limit(s), where the weight is singular
    :param b: Upper limit(s)
    :param exponent: Exponent of the weight
    :param quad: The quadrature controls
    :returns: The weighted integral
    :rtype: QuadratureResult
    """
    lower, span, near = _split_limits(a, b)
    power = substitution_power(exponent)
    shifted = power * (exponent + 1.0) - 1.0
    base = lower[..., None]

    def singular(sigma: FloatArray) -> FloatArray:
        return power * sigma**shifted * func(base + sigma**power)

    result = integrate(singular, 0.0, near ** (1.0 / power), quad)
    if np.any(span > near):

        def regular(offset: FloatArray) -> FloatArray:
            return offset**exponent * func(base + offset)

        result = result + integrate(regular, near, span, quad)
    return result


def log_weighted_integral(
    func: Integrand, a: npt.ArrayLike, b: npt.ArrayLike, exponent: float, quad: QuadratureSpec
) -> QuadratureResult:
    """Computes ∫_a^b func(s) (s - a)^exponent log(s - a) ds for exponent > -1

    The unit interval next to a is mapped by s - a = w e^{-v}, which turns the logarithmic singularity
    into an exponentially decaying integrand in v.
    """
    lower, span, near = _split_limits(a, b)
    order = exponent + 1.0
    if order <= 0:
        raise ContractViolation(f"The weight exponent {exponent} is not integrable")
    present = near > 0
    scale = np.where(present, near, 1.0)
    horizon = (-log(quad.abs_tolerance) + 10.0) / order
    base = lower[..., None]
    width = scale[..., None]

    def singular(v: FloatArray) -> FloatArray:
        decay = np.exp(-v)
        return width**order * decay**order * (np.log(width) - v) * func(base + width * decay)

    near_part = integrate(singular, 0.0, horizon, quad)
    value = np.where(present, near_part.value, 0.0)
    result = QuadratureResult(
        value=float(value) if np.ndim(value) == 0 else value, error=near_part.error, evals=near_part.evals
    )
    if np.any(span > near):

        def regular(offset: FloatArray) -> FloatArray:
            return offset**exponent * np.log(offset) * func(base + offset)

        result = result + integrate(regular, near, span, quad)
    return result


_SPHERE_RULES: MemoCache[Tuple[int, int], Tuple[FloatArray, FloatArray]] = MemoCache("sphere rules")


def _build_sphere_rule(dim: int, order: int) -> Tuple[FloatArray, FloatArray]:
    if dim == 1:
        nodes, weights = np.array([[1.0], [-1.0]]), np.array([0.5, 0.5])
    elif dim == 2:
        count = 2 * order
        angles = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        nodes, weights = np.column_stack([np.cos(angles), np.sin(angles)]), np.full(count, 1.0 / count)
    else:
        heights, height_weights = roots_gegenbauer(order, (dim - 2) / 2.0)
        height_weights = height_weights / np.sum(height_weights)
        sub_nodes, sub_weights = sphere_rule(dim - 1, order)
        radius = np.sqrt(np.clip(1.0 - heights**2, 0.0, None))
        lifted = radius[:, None, None] * sub_nodes[None, :, :]
        last = np.broadcast_to(heights[:, None, None], (heights.size, sub_nodes.shape[0], 1))
        nodes = np.concatenate([lifted, last], axis=-1).reshape(-1, dim)
        weights = (height_weights[:, None] * sub_weights[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def sphere_rule(dim: int, order: int) -> Tuple[FloatArray, FloatArray]:
    """Product rule on the unit sphere S^{dim-1} of R^dim with weights summing to one

    :param dim: Dimension of the ambient space of the sphere
    :type dim: int
    :param order: Number of Gauss-Gegenbauer heights, half the number of azimuths
    :type order: int
    :raises ContractViolation: when dim or order is smaller than one
    :returns: Nodes of shape (m, dim) and weights of shape (m,)
    :rtype: Tuple[FloatArray, FloatArray]
    """
    if dim < 1 or order < 1:
        raise ContractViolation(f"A sphere rule needs dim >= 1 and order >= 1, got {dim} and {order}")
    return _SPHERE_RULES.get_or_insert((dim, order), lambda: _build_sphere_rule(dim, order))


def integrate_sphere(
    func: Callable[[FloatArray], FloatArray],
    dim: int,
    quad: QuadratureSpec,
    order: Optional[int] = None,
    refinements: int = 3,
) -> QuadratureResult:
    """Averages func over S^{dim-1}, raising the rule order until two successive rules agree

    :param func: Maps nodes of shape (m, dim) to values of shape (..., m)
    :param dim: Dimension of the ambient space of the sphere
    :param quad: The quadrature controls
    :param order: Starting order, quad.sphere_order by default
    :param refinements: Maximal number of order increases
    :returns: The normalised average
    :rtype: QuadratureResult
    """
    order = order or quad.sphere_order
    nodes, weights = sphere_rule(dim, order)
    previous = np.sum(np.asarray(func(nodes)) * weights, axis=-1)
    evals = weights.size
    current, error = previous, np.zeros_like(previous)
    if dim == 1 or refinements < 1:
        return _sphere_result(current, error, evals)
    for _ in range(refinements):
        order = order + max(2, order // 2)
        nodes, weights = sphere_rule(dim, order)
        current = np.sum(np.asarray(func(nodes)) * weights, axis=-1)
        evals += weights.size
        error = np.abs(current - previous)
        if np.all(error <= quad.tolerance(current)):
            logger.debug("sphere rule on S^%s converged at order %s", dim - 1, order)
            return _sphere_result(current, error, evals)
        previous = current
    _warn("sphere rule", current, error, evals)
    return _sphere_result(current, error, evals)


def _sphere_result(value: FloatArray, error: FloatArray, evals: int) -> QuadratureResult:
    if np.ndim(value) == 0:
        return QuadratureResult(value=float(value), error=float(error), evals=evals)
    return QuadratureResult(value=value, error=error, evals=evals)
