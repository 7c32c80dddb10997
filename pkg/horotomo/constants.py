"""Normalising constants of the transform, its duals and the potential family.

Every constant is assembled from log-gamma and digamma values so that large dimensions stay finite.
"""
from math import exp, isclose, pi
from typing import Iterable

from scipy.special import gammaln, gammasgn, psi

from .exceptions import ParameterError


def gamma_ratio(numerator: Iterable[float], denominator: Iterable[float] = ()) -> float:
    """Computes prod Γ(a) / prod Γ(b) through log-gamma values

    :param numerator: Arguments of the gamma functions in the numerator
    :param denominator: Arguments of the gamma functions in the denominator
    :returns: The signed ratio

    >>> abs(gamma_ratio([0.5], [1.0]) ** 2 - pi) < 1e-12
    True
    """
    sign = 1.0
    total = 0.0
    for value in numerator:
        sign *= float(gammasgn(value))
        total += float(gammaln(value))
    for value in denominator:
        sign *= float(gammasgn(value))
        total -= float(gammaln(value))
    return sign * exp(total)


def in_pole_set(value: float) -> bool:
    """Whether value belongs to {0, 2, 4, ...}

    >>> in_pole_set(2.0), in_pole_set(1.0), in_pole_set(-2.0)
    (True, False, False)
    """
    return value > -1e-12 and isclose(value / 2.0, round(value / 2.0), abs_tol=1e-12)


def sphere_area(m: int) -> float:
    """Area σ_m of the unit sphere S^m in R^{m+1}, with σ_0 = 2

    >>> round(sphere_area(2) / pi, 12)
    4.0
    """
    return 2.0 * pi ** ((m + 1) / 2.0) / gamma_ratio([(m + 1) / 2.0])


def zonal_constant(d: int) -> float:
    """Constant c = 2^{d/2-1} σ_{d-1} Γ(d/2) of the zonal reduction, equal to (2π)^{d/2}"""
    return 2.0 ** (d / 2.0 - 1.0) * sphere_area(d - 1) * gamma_ratio([d / 2.0])


def check_constant(d: int) -> float:
    """Constant 2^{d/2-1} σ_{d-1} of the backprojection of a zonal image at the origin"""
    return 2.0 ** (d / 2.0 - 1.0) * sphere_area(d - 1)


def fuglede_constant(n: int, d: int) -> float:
    """Constant relating the backprojection to Q^d: 2^d π^{d/2} Γ(n/2) / Γ((n-d)/2)"""
    return 2.0**d * pi ** (d / 2.0) * gamma_ratio([n / 2.0], [(n - d) / 2.0])


def even_inversion_constant(n: int, d: int) -> float:
    """Leading constant (-1)^{d/2} Γ((n-d)/2) / (2^d π^{d/2} Γ(n/2)) of the even-d polynomial inversion

    :raises ParameterError: when d is odd
    """
    if d % 2:
        raise ParameterError(f"The polynomial inversion of the backprojection needs an even d, got {d}")
    return (-1.0) ** (d // 2) * gamma_ratio([(n - d) / 2.0], [n / 2.0]) / (2.0**d * pi ** (d / 2.0))


def potential_constant(n: int, alpha: float) -> float:
    """Constant ζ_{n,α} = Γ((n-α)/2) / (2^{α/2+1} π^{n/2} Γ(α/2)) of the potential Q^α

    :raises ParameterError: when α ≤ 0 or α - n ∈ {0, 2, 4, ...}
    """
    if alpha <= 0:
        raise ParameterError(f"The potential order must be positive, got {alpha}")
    if in_pole_set(alpha - n):
        raise ParameterError(f"The potential order {alpha} is excluded for n = {n}")
    return gamma_ratio([(n - alpha) / 2.0], [alpha / 2.0]) / (2.0 ** (alpha / 2.0 + 1.0) * pi ** (n / 2.0))


def log_potential_constant(n: int) -> float:
    """Constant ζ'_n = -2^{-1-n/2} / (π^{n/2} Γ(n/2)) of the logarithmic potential Q^n"""
    return -(2.0 ** (-1.0 - n / 2.0)) / (pi ** (n / 2.0) * gamma_ratio([n / 2.0]))


def dual_constant(n: int, d: int, alpha: float) -> float:
    """Constant c_α = Γ((n-α-d)/2) / (2^{α/2+d+1} π^{d/2} Γ(α/2) Γ(n/2)) of the weighted dual H*^α

    :raises ParameterError: when α ≤ 0 or α + d - n ∈ {0, 2, 4, ...}
    """
    if alpha <= 0:
        raise ParameterError(f"The dual order must be positive, got {alpha}")
    if in_pole_set(alpha + d - n):
        raise ParameterError(f"The dual order {alpha} is excluded for n = {n}, d = {d}")
    return gamma_ratio([(n - alpha - d) / 2.0], [alpha / 2.0, n / 2.0]) / (
        2.0 ** (alpha / 2.0 + d + 1.0) * pi ** (d / 2.0)
    )


def log_dual_constant(n: int, d: int) -> float:
    """Constant c_{n,d} = -1 / (2^{(n+d)/2+1} π^{d/2} Γ(n/2) Γ((n-d)/2)) of the logarithmic dual"""
    return -1.0 / (2.0 ** ((n + d) / 2.0 + 1.0) * pi ** (d / 2.0) * gamma_ratio([n / 2.0, (n - d) / 2.0]))


def log_correction_constant(n: int, d: int) -> float:
    """Constant γ_{n,d} = (ψ(n/2) - ψ((n-d)/2)) / (2^{n/2+1} π^{n/2} Γ(n/2)) of the correction Φ"""
    digamma_gap = float(psi(n / 2.0) - psi((n - d) / 2.0))
    return digamma_gap / (2.0 ** (n / 2.0 + 1.0) * pi ** (n / 2.0) * gamma_ratio([n / 2.0]))


def smooth_kernel_constant(n: int, d: int) -> float:
    """Constant c̃_1 = 2^{d/2} π^{(d-n)/2} Γ((n-d)/2) linking the unweighted dual to B-type integrals"""
    return 2.0 ** (d / 2.0) * pi ** ((d - n) / 2.0) * gamma_ratio([(n - d) / 2.0])


def kernel_correction_constant(n: int, d: int) -> float:
    """Constant γ̃_{n,d} = γ_{n,d} / c̃_1 of the correction Φ written on horospheres"""
    return log_correction_constant(n, d) / smooth_kernel_constant(n, d)


def weighted_constant(n: int, d: int, alpha: float) -> float:
    """Constant c_1 = 2^{d/2} σ_{d-1} Γ(α/2) Γ(d/2) / (σ_{n-1} Γ((α+d)/2)) of the weighted zonal identity"""
    if alpha <= 0:
        raise ParameterError(f"The weight order must be positive, got {alpha}")
    return (
        2.0 ** (d / 2.0)
        * sphere_area(d - 1)
        * gamma_ratio([alpha / 2.0, d / 2.0], [(alpha + d) / 2.0])
        / sphere_area(n - 1)
    )
