"""Command line driver: forward transforms, reconstructions, validation suites and plot data.

Every run writes a CSV of result rows and a JSON summary. The exit code is 0 when every tolerance holds,
1 when one fails, 2 for an invalid configuration, 3 for an unstable reconstruction and 4 for I/O errors.
"""
import json
import logging
import sys
import time
from argparse import ArgumentParser, Namespace
from concurrent.futures import ThreadPoolExecutor
from logging import Logger, getLogger
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from .config import ExperimentConfig, Method, PlotKind, PolyVariant, Probe, RuntimeSettings
from .exceptions import (
    ContractViolation,
    DecompositionFailure,
    DivergenceError,
    GeometryError,
    InsufficientSmoothness,
    ParameterError,
    ReconstructionUnstable,
    UnknownField,
    UnknownSuite,
)
from .fields import ScalarField, ZonalField, field_names, parse_field
from .horosphere import Horosphere
from .hyperboloid import HyperbolicPoint, radial_point
from .inversion import invert_poly_even_d, invert_poly_general, reconstruct_mean_value
from .results import ResultRow, report_rows, sup_error, write_columns, write_rows, write_summary
from .suites import run_suite, suite_names
from .transform import forward_general, horospherical_image, sharpness_probe, sharpness_verdict
from .utils import format_float

logger: Logger = getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3
EXIT_IO = 4

CONFIG_ERRORS = (
    ValidationError,
    ValueError,
    UnknownField,
    UnknownSuite,
    ParameterError,
    ContractViolation,
    GeometryError,
    DecompositionFailure,
    InsufficientSmoothness,
)


class Outcome(BaseModel):
    """What a run produced"""

    rows: List[ResultRow]
    passed: bool
    details: Dict[str, Any] = {}
    """Method specific entries of the summary"""
    header: Optional[List[str]] = None
    """Plot columns written instead of the rows"""
    columns: Optional[List[List[Optional[float]]]] = None


def _timed(function: Callable[[T], R]) -> Callable[[T], Tuple[R, float]]:
    def wrapper(item: T) -> Tuple[R, float]:
        start = time.perf_counter()
        result = function(item)
        return result, 1000.0 * (time.perf_counter() - start)

    return wrapper


def _parallel(function: Callable[[T], R], items: Sequence[T], settings: RuntimeSettings) -> List[Tuple[R, float]]:
    """Maps function over the items on at most settings.threads workers, keeping their order"""
    workers = max(1, min(settings.threads, len(items)))
    if workers == 1:
        return [_timed(function)(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_timed(function), items))


def _tolerance(config: ExperimentConfig, default: float) -> float:
    return default if config.tolerance is None else config.tolerance


def _field(config: ExperimentConfig) -> ScalarField:
    return parse_field(config.field, config.n, config.quadrature)


def _radii(probes: Sequence[Probe]) -> List[float]:
    if any(isinstance(probe, list) for probe in probes):
        raise ContractViolation("Radial reconstructions take geodesic radii as probes")
    return [float(probe) for probe in probes]  # type: ignore[arg-type]


def _point(n: int, probe: Probe) -> HyperbolicPoint:
    if isinstance(probe, list):
        return HyperbolicPoint(coords=probe)
    return radial_point(n, float(np.cosh(probe)))


def _horosphere(n: int, d: int, probe: Probe) -> Horosphere:
    values = probe if isinstance(probe, list) else [probe]
    t, u = float(values[0]), list(values[1:]) or [0.0] * (n - 1 - d)
    return Horosphere(n=n, d=d, k=np.eye(n), t=t, u=u)


def _probe_id(probe: Probe) -> str:
    if isinstance(probe, list):
        return "[" + ",".join(format_float(value) for value in probe) + "]"
    return format_float(probe)


def run_forward(config: ExperimentConfig, settings: RuntimeSettings) -> Outcome:
    """Quadrature transforms on the probe horospheres, against the exact image of zonal fields"""
    f = _field(config)
    quad = config.quadrature
    image = horospherical_image(f, config.d, quad) if isinstance(f, ZonalField) else None
    horospheres = [_horosphere(config.n, config.d, probe) for probe in config.probe_list]
    relative = _tolerance(config, 1e-4)

    def compute(xi: Horosphere) -> Tuple[Optional[float], float]:
        return (None if image is None else image.evaluate(xi)), forward_general(f, xi, quad)

    rows = [
        ResultRow(
            probe_id=f"t={_probe_id(probe)}",
            reference=reference,
            computed=computed,
            wall_time_ms=elapsed,
            tolerance=None if reference is None else relative * abs(reference),
        )
        for probe, ((reference, computed), elapsed) in zip(
            config.probe_list, _parallel(compute, horospheres, settings)
        )
    ]
    return Outcome(rows=rows, passed=all(row.passed for row in rows))


def run_invert_mv(config: ExperimentConfig, settings: RuntimeSettings) -> Outcome:
    """Mean value reconstructions at the probe points"""
    f = _field(config)
    quad = config.quadrature
    image = horospherical_image(f, config.d, quad)
    centred = isinstance(f, ZonalField) and f.centered
    tolerance = _tolerance(config, 1e-2 if centred else 5e-2)
    points = [_point(config.n, probe) for probe in config.probe_list]
    results = _parallel(
        lambda x: reconstruct_mean_value(image, x, quad, config.inversion, config.path), points, settings
    )
    rows = [
        ResultRow(
            probe_id=f"r={_probe_id(probe)}",
            reference=f.evaluate(x),
            computed=record.value,
            budget=record.budget,
            wall_time_ms=elapsed,
            tolerance=tolerance,
        )
        for probe, x, (record, elapsed) in zip(config.probe_list, points, results)
    ]
    return Outcome(rows=rows, passed=all(row.passed for row in rows))


def run_invert_poly(config: ExperimentConfig, settings: RuntimeSettings) -> Outcome:
    """Polynomial reconstructions at radial probes"""
    f = _field(config)
    quad = config.quadrature
    image = horospherical_image(f, config.d, quad)
    variant = config.variant
    if variant == PolyVariant.auto:
        variant = PolyVariant.even_d if config.d % 2 == 0 else PolyVariant.general
    tolerance = _tolerance(config, 1e-2 if variant == PolyVariant.even_d else 2e-2)

    def reconstruct(radius: float) -> List[ResultRow]:
        if variant == PolyVariant.even_d:
            report = invert_poly_even_d(image, [radius], quad, config.path, config.inversion)
        else:
            report = invert_poly_general(image, config.ell, [radius], quad, config.path, config.inversion)
        return report_rows(report, tolerance)

    results = _parallel(reconstruct, _radii(config.probe_list), settings)
    rows = [row.copy(update={"wall_time_ms": elapsed}) for chunk, elapsed in results for row in chunk]
    return Outcome(rows=rows, passed=all(row.passed for row in rows), details={"variant": variant.value})


def run_validate(config: ExperimentConfig, settings: RuntimeSettings) -> Outcome:
    """A validation suite, the tolerance flag overriding the suite's own"""
    assert config.suite is not None
    rows, elapsed = _timed(lambda name: run_suite(name, config))(config.suite)
    if config.tolerance is not None:
        rows = [row.copy(update={"tolerance": config.tolerance}) for row in rows]
    rows = [row.copy(update={"wall_time_ms": elapsed / max(len(rows), 1)}) for row in rows]
    return Outcome(rows=rows, passed=all(row.passed for row in rows), details={"suite": config.suite})


def _sharpness_series(config: ExperimentConfig, settings: RuntimeSettings) -> Tuple[List[float], List[float]]:
    probes = _parallel(
        lambda cutoff: sharpness_probe(config.p, config.n, config.d, cutoff, config.quadrature),
        config.cutoffs,
        settings,
    )
    return [norm for (norm, _), _ in probes], [transform for (_, transform), _ in probes]


def run_sharpness(config: ExperimentConfig, settings: RuntimeSettings) -> Outcome:
    """Truncated norms and transform integrals of the borderline profile over increasing cutoffs"""
    norms, transforms = _sharpness_series(config, settings)
    verdict = sharpness_verdict(config.p, config.n, config.d, norms, transforms, config.sharpness)
    rows = []
    for cutoff, norm, transform in zip(config.cutoffs, norms, transforms):
        rows.append(ResultRow(probe_id=f"norm:cutoff={format_float(cutoff)}", computed=norm))
        rows.append(ResultRow(probe_id=f"transform:cutoff={format_float(cutoff)}", computed=transform))
    return Outcome(rows=rows, passed=verdict.passed, details={"verdict": verdict.dict()})


def run_emit_plot(config: ExperimentConfig, settings: RuntimeSettings) -> Outcome:
    """Plot data: reconstructed against true values, or truncated integrals against cutoffs"""
    if config.plot == PlotKind.sharpness:
        norms, transforms = _sharpness_series(config, settings)
        verdict = sharpness_verdict(config.p, config.n, config.d, norms, transforms, config.sharpness)
        return Outcome(
            rows=[],
            passed=verdict.passed,
            details={"verdict": verdict.dict()},
            header=["cutoff", "norm", "truncated_integral"],
            columns=[list(config.cutoffs), list(norms), list(transforms)],
        )
    outcome = run_invert_mv(config, settings)
    heights = [float(_point(config.n, probe).coords[-1]) for probe in config.probe_list]
    return outcome.copy(
        update={
            "header": ["s", "f", "f_reconstructed"],
            "columns": [heights, [row.reference for row in outcome.rows], [row.computed for row in outcome.rows]],
        }
    )


_RUNNERS: Dict[Method, Callable[[ExperimentConfig, RuntimeSettings], Outcome]] = {
    Method.forward: run_forward,
    Method.invert_mv: run_invert_mv,
    Method.invert_poly: run_invert_poly,
    Method.validate: run_validate,
    Method.sharpness: run_sharpness,
    Method.emit_plot: run_emit_plot,
}


def run(config: ExperimentConfig, settings: Optional[RuntimeSettings] = None) -> int:
    """Runs an experiment, writes its CSV and JSON summary and returns the exit code"""
    settings = settings or RuntimeSettings()
    logger.info("Starting %s run, n = %s, d = %s, field %s", config.method.value, config.n, config.d, config.field)
    try:
        outcome = _RUNNERS[config.method](config, settings)
    except CONFIG_ERRORS as error:
        logger.error("Invalid configuration: %s", error)
        return EXIT_CONFIG
    except ReconstructionUnstable as error:
        logger.error("Reconstruction unstable: %s, diagnostics %s", error, error.diagnostics)
        return EXIT_UNSTABLE
    except DivergenceError as error:
        logger.error("Integral diverged: %s, truncated estimate %s", error, error.value)
        return EXIT_UNSTABLE
    summary = {
        "method": config.method.value,
        "config": config.echo(),
        "sup_error": sup_error(outcome.rows),
        "passed": outcome.passed,
        "rows": len(outcome.rows),
        **outcome.details,
    }
    try:
        if outcome.header is not None and outcome.columns is not None:
            write_columns(config.output, outcome.header, outcome.columns)
        else:
            write_rows(config.output, outcome.rows, config.timings)
        write_summary(config.summary_path, summary)
    except OSError as error:
        logger.error("Could not write results: %s", error)
        return EXIT_IO
    logger.info("Finished %s run: sup error %s, passed %s", config.method.value, summary["sup_error"], outcome.passed)
    return EXIT_OK if outcome.passed else EXIT_TOLERANCE


def _probes(text: str) -> List[Probe]:
    """Probes as a JSON list or comma separated radii"""
    if text.strip().startswith("["):
        return list(json.loads(text))
    return [float(value) for value in text.split(",") if value.strip()]


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with configuration values, flags take precedence")
    common.add_argument("--n", type=int, help="dimension of the hyperbolic space")
    common.add_argument("--d", type=int, help="dimension of the horospheres")
    common.add_argument("--field", help=f"test field, one of {', '.join(field_names())} with arguments after ':'")
    common.add_argument("--probes", type=_probes, help="JSON list or comma separated radii")
    common.add_argument("--output", type=Path, help="CSV of result rows")
    common.add_argument("--summary", type=Path, help="JSON summary, next to the CSV by default")
    common.add_argument("--seed", type=int)
    common.add_argument("--tolerance", type=float, help="pass threshold overriding the method default")
    common.add_argument("--path", choices=["auto", "sphere", "k-rule"], help="how K-averages are computed")
    common.add_argument("--rel-tol", type=float, help="relative quadrature tolerance")
    common.add_argument("--abs-tol", type=float, help="absolute quadrature tolerance")
    common.add_argument("--scheme", choices=["gauss-legendre-composite", "tanh-sinh", "adaptive-simpson"])
    common.add_argument("--sphere-order", type=int, help="starting order of sphere rules")
    common.add_argument("--timings", action="store_const", const=True, help="write wall times to the CSV")
    common.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    common.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")

    parser = ArgumentParser(
        prog="horotomo", description="Horospherical transforms on the hyperboloid and their inversion"
    )
    commands = parser.add_subparsers(dest="method", required=True)
    commands.add_parser("forward", parents=[common], help="transforms at horospheres given by t or [t, u...]")
    invert_mv = commands.add_parser("invert-mv", parents=[common], help="mean value reconstruction")
    invert_mv.add_argument("--extrapolation", choices=["richardson", "linear", "none"])
    invert_mv.add_argument("--delta", type=float, help="width of the first extrapolation node")
    invert_mv.add_argument("--levels", type=int, help="index of the last extrapolation node")
    invert_poly = commands.add_parser("invert-poly", parents=[common], help="polynomial reconstruction")
    invert_poly.add_argument("--ell", type=int, help="polynomial order for odd n")
    invert_poly.add_argument("--variant", choices=["auto", "even-d", "general"])
    validate = commands.add_parser("validate", parents=[common], help="run a validation suite")
    validate.add_argument("--suite", required=True, help=f"one of {', '.join(suite_names())}")
    for name in ("sharpness", "emit-plot"):
        command = commands.add_parser(name, parents=[common], help=f"{name} run")
        command.add_argument("--p", type=float, help="exponent of the borderline profile")
        command.add_argument("--cutoffs", type=lambda text: [float(v) for v in text.split(",")])
        if name == "emit-plot":
            command.add_argument("--plot", choices=["reconstruction", "sharpness"])
    return parser


def _overrides(args: Namespace) -> Dict[str, Any]:
    values = vars(args)
    overrides: Dict[str, Any] = {
        key: values.get(key)
        for key in (
            "method", "n", "d", "field", "probes", "output", "summary", "seed", "tolerance", "path", "timings",
            "suite", "ell", "variant", "p", "cutoffs", "plot",
        )
    }
    quadrature = {
        "rel_tolerance": values.get("rel_tol"),
        "abs_tolerance": values.get("abs_tol"),
        "scheme": values.get("scheme"),
        "sphere_order": values.get("sphere_order"),
    }
    inversion = {
        "extrapolation": values.get("extrapolation"),
        "delta": values.get("delta"),
        "levels": values.get("levels"),
    }
    overrides["quadrature"] = {key: value for key, value in quadrature.items() if value is not None} or None
    overrides["inversion"] = {key: value for key, value in inversion.items() if value is not None} or None
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        config = ExperimentConfig.from_sources(args.config, _overrides(args))
        settings = RuntimeSettings()
    except OSError as error:
        logger.error("Could not read the configuration: %s", error)
        return EXIT_IO
    except CONFIG_ERRORS as error:
        logger.error("Invalid configuration: %s", error)
        return EXIT_CONFIG
    return run(config, settings)


if __name__ == "__main__":
    sys.exit(main())
