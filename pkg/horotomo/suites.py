"""Validation suites of the driver, each a list of residual checks with their tolerances."""
from logging import Logger, getLogger
from typing import Callable, Dict, List

import numpy as np

from .config import ExperimentConfig
from .constants import fuglede_constant
from .exceptions import UnknownSuite
from .fields import shifted_bump, zonal_field
from .fractional import frac_derivative_minus, integrated_profile
from .horosphere import Horosphere, random_rotation
from .hyperboloid import a_matrices, k_matrices, minkowski_matrix, n_matrices, nak_arrays, radial_point
from .inversion import (
    d_alpha_recursion_residual,
    eigen_residual,
    n2_identity_residual,
    potential_q_alpha,
)
from .profiles import bump_profile, exponential_profile
from .results import ResultRow
from .transform import (
    CheckPath,
    check_operator,
    forward_general,
    forward_zonal,
    fubini_identity_residual,
    horospherical_image,
    mean_value,
    weighted_zonal_identity_residual,
)
from .utils import as_float_array, format_float

logger: Logger = getLogger(__name__)

Suite = Callable[[ExperimentConfig, np.random.Generator], List[ResultRow]]

GROUP_SAMPLES = 1000


def _residual_row(probe_id: str, residual: float, tolerance: float) -> ResultRow:
    return ResultRow(probe_id=probe_id, reference=0.0, computed=residual, tolerance=tolerance)


def _random_elements(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    rotations = np.stack([random_rotation(n, rng) for _ in range(count)])
    times = rng.uniform(-2.0, 2.0, count)
    offsets = rng.uniform(-1.0, 1.0, (count, n - 1))
    return k_matrices(rotations) @ a_matrices(times, n) @ n_matrices(offsets)


def group_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """gᵀJg = J, n_{v₁} n_{v₂} = n_{v₁+v₂} and the NAK round trip on random elements"""
    n = config.n
    elements = _random_elements(n, GROUP_SAMPLES, rng)
    form = minkowski_matrix(n)
    scale = np.maximum(1.0, np.max(np.abs(elements), axis=(-2, -1))) ** 2
    lorentz = np.max(np.abs(np.swapaxes(elements, -1, -2) @ form @ elements - form), axis=(-2, -1)) / scale
    first, second = rng.uniform(-1.0, 1.0, (2, GROUP_SAMPLES, n - 1))
    product = n_matrices(first) @ n_matrices(second) - n_matrices(first + second)
    v, t, k = nak_arrays(elements)
    reassembled = n_matrices(v) @ a_matrices(t, n) @ k_matrices(k)
    round_trip = np.max(np.abs(reassembled - elements), axis=(-2, -1)) / np.sqrt(scale)
    return [
        _residual_row("lorentz", float(np.max(lorentz)), 1e-10),
        _residual_row("nilpotent", float(np.max(np.abs(product))), 1e-12),
        _residual_row("nak", float(np.max(round_trip)), 1e-9),
    ]


def zonal_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """Quadrature transforms against the closed form on 20 random zonal cases"""
    quad = config.quadrature
    rows = []
    for case in range(20):
        n = int(rng.integers(2, 5))
        d = int(rng.integers(1, n))
        t = float(rng.uniform(-1.0, 1.0))
        u = rng.uniform(-0.6, 0.6, n - 1 - d)
        rate = float(rng.uniform(0.5, 2.0))
        f = zonal_field(exponential_profile(rate), n)
        xi = Horosphere(n=n, d=d, k=random_rotation(n, rng), t=t, u=u)
        reference = float(forward_zonal(f.profile, t, float(np.linalg.norm(u)), d, quad))
        computed = forward_general(f, xi, quad)
        rows.append(
            ResultRow(
                probe_id=f"case{case}:n={n},d={d}",
                reference=reference,
                computed=computed,
                tolerance=1e-4 * abs(reference),
            )
        )
    return rows


def fubini_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """∫ f over H^n through horospheres through x₀ in three random directions"""
    f = zonal_field(exponential_profile(1.0), config.n)
    return [
        _residual_row(
            f"k{index}", fubini_identity_residual(f, random_rotation(config.n, rng), config.d, config.quadrature), 1e-4
        )
        for index in range(3)
    ]


def weighted_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """The weighted zonal identity for two dimension and order combinations"""
    rows = []
    for n, d, alpha in ((3, 1, 1.0), (4, 2, 2.5)):
        f = zonal_field(exponential_profile(1.0), n)
        residual = weighted_zonal_identity_residual(f, alpha, d, config.quadrature)
        rows.append(_residual_row(f"n={n},d={d},alpha={format_float(alpha)}", residual, 1e-4))
    return rows


def fuglede_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """φ̌ = c Q^d f for a centred and a shifted field at the radial probes"""
    n, d, quad = config.n, config.d, config.quadrature
    constant = fuglede_constant(n, d)
    radii = [float(r) for r in config.probe_list if not isinstance(r, list)]
    rows = []
    for f in (zonal_field(exponential_profile(1.0), n), shifted_bump(n)):
        image = horospherical_image(f, d, quad)
        points = [radial_point(n, float(np.cosh(r))) for r in radii]
        expected = [constant * potential_q_alpha(f, x, float(d), quad) for x in points]
        scale = max(abs(value) for value in expected)
        for r, x, reference in zip(radii, points, expected):
            rows.append(
                ResultRow(
                    probe_id=f"{f.name}:r={format_float(r)}",
                    reference=reference,
                    computed=check_operator(image, x, quad, CheckPath.k_rule),
                    tolerance=1e-3 * scale,
                )
            )
    return rows


PATH_TIMES = (-0.5, 0.0, 0.4, 1.0)
"""Abelian parameters at which the two K-average paths are compared"""


def paths_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """φ̌_x(t) from the image values against the spherical mean formula of the source"""
    n, d, quad = config.n, config.d, config.quadrature
    radii = [float(r) for r in config.probe_list if not isinstance(r, list)]
    rows = []
    for f in (zonal_field(exponential_profile(1.0), n), shifted_bump(n)):
        image = horospherical_image(f, d, quad)
        for r in radii:
            x = radial_point(n, float(np.cosh(r)))
            reference = as_float_array(mean_value(image, x, PATH_TIMES, quad, CheckPath.sphere))
            computed = as_float_array(mean_value(image, x, PATH_TIMES, quad, CheckPath.k_rule))
            scale = max(1.0, float(np.max(np.abs(reference))))
            for t, expected, value in zip(PATH_TIMES, reference, computed):
                rows.append(
                    ResultRow(
                        probe_id=f"{f.name}:r={format_float(r)}:t={format_float(t)}",
                        reference=float(expected),
                        computed=float(value),
                        tolerance=1e-6 * scale,
                    )
                )
    return rows


def fractional_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """D^{d/2} I^{d/2} ψ = ψ on [1.1, 5] for an exponential and a bump profile"""
    d, quad = config.d, config.quadrature
    tolerance = 1e-6 if d % 2 == 0 else 1e-3
    heights = np.linspace(1.1, 5.0, 9)
    rows = []
    for profile in (exponential_profile(1.0), bump_profile(0.0, 2.0)):
        restored = np.asarray(frac_derivative_minus(integrated_profile(profile, d / 2.0, quad), heights, d, quad))
        for s, value, reference in zip(heights, restored, profile(heights)):
            rows.append(
                ResultRow(
                    probe_id=f"{profile.name}:s={format_float(s)}",
                    reference=float(reference),
                    computed=float(value),
                    tolerance=tolerance,
                )
            )
    return rows


def recursion_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """D_α Q^α f = Q^{α-2} f on a centred bump, with the B term when α = n"""
    n = config.n
    f = zonal_field(bump_profile(0.0, 2.0), n)
    orders = [2.0, 4.0] if n >= 4 else [2.0]
    return [
        _residual_row(
            f"alpha={format_float(alpha)}", d_alpha_recursion_residual(f, alpha, quad=config.quadrature), 1e-3
        )
        for alpha in orders
    ]


def eigen_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """-Δ_H Bf = n(n - 2)/4 Bf on a centred bump"""
    f = zonal_field(bump_profile(0.0, 2.0), config.n)
    return [_residual_row(f"n={config.n}", eigen_residual(f, quad=config.quadrature), 1e-3)]


def n2_identity_suite(config: ExperimentConfig, rng: np.random.Generator) -> List[ResultRow]:
    """-Δ_H Q² f = f - (1/4π) ∫ f on H²"""
    f = zonal_field(bump_profile(0.0, 2.0), 2)
    return [_residual_row("n=2", n2_identity_residual(f, quad=config.quadrature), 1e-2)]


_SUITES: Dict[str, Suite] = {
    "group": group_suite,
    "zonal": zonal_suite,
    "fubini": fubini_suite,
    "weighted": weighted_suite,
    "fuglede": fuglede_suite,
    "paths": paths_suite,
    "fractional": fractional_suite,
    "recursion": recursion_suite,
    "eigen": eigen_suite,
    "n2-identity": n2_identity_suite,
}


def suite_names() -> List[str]:
    return list(_SUITES.keys())


def run_suite(name: str, config: ExperimentConfig) -> List[ResultRow]:
    """Runs a validation suite with the generator seeded from the config

    :raises UnknownSuite: when no suite has this name
    """
    if name not in _SUITES:
        raise UnknownSuite(f"Unknown suite '{name} - expected one of: {', '.join(_SUITES.keys())}'")
    logger.info("Running suite %s for n = %s, d = %s", name, config.n, config.d)
    rows = _SUITES[name](config, np.random.default_rng(config.seed))
    logger.info("Suite %s: %s of %s checks passed", name, sum(row.passed for row in rows), len(rows))
    return rows
