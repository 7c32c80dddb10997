"""Configuration of experiment runs: a JSON file, command line flags on top and the HOROTOMO_ environment."""
import json
import os
from enum import Enum
from logging import Logger, getLogger
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, BaseSettings, Field, root_validator, validator

from .inversion import DEFAULT_RADII, InversionSpec
from .quadrature import QuadratureSpec
from .transform import CheckPath, SharpnessCriteria

logger: Logger = getLogger(__name__)

Probe = Union[float, List[float]]


class Method(str, Enum):
    forward = "forward"
    invert_mv = "invert-mv"
    invert_poly = "invert-poly"
    validate = "validate"
    sharpness = "sharpness"
    emit_plot = "emit-plot"


class PolyVariant(str, Enum):
    auto = "auto"
    even_d = "even-d"
    general = "general"


class PlotKind(str, Enum):
    reconstruction = "reconstruction"
    sharpness = "sharpness"


class RuntimeSettings(BaseSettings):
    """Settings read from the environment"""

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1)
    """Upper bound on worker threads, HOROTOMO_THREADS"""

    class Config:
        env_prefix = "HOROTOMO_"

    @validator("threads")
    def at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"at least one thread is needed, got {value}")
        return value


class ExperimentConfig(BaseModel):
    """One run of the driver"""

    method: Method
    """What to compute"""
    n: int = 3
    """Dimension of the hyperbolic space"""
    d: int = 1
    """Dimension of the horospheres"""
    field: str = "zonal-exp:1.0"
    """The test field, such as ``zonal-bump:0.0,2.0`` or ``shifted-bump:0.4,1.5``"""
    quadrature: QuadratureSpec = QuadratureSpec()
    inversion: InversionSpec = InversionSpec()
    probes: Optional[List[Probe]] = None
    """Radii along e_n or ambient coordinates; t or [t, u...] for forward runs"""
    suite: Optional[str] = None
    """Validation suite of validate runs"""
    ell: Optional[int] = None
    """Polynomial order of invert-poly runs on odd n"""
    variant: PolyVariant = PolyVariant.auto
    """Polynomial inversion to run, even-d for even d by default"""
    path: CheckPath = CheckPath.auto
    """How K-averages of images are computed, auto being the k-rule on the image values"""
    p: float = 2.0
    """Exponent of sharpness runs"""
    cutoffs: List[float] = [1e2, 1e4, 1e6]
    """Truncation heights of sharpness runs"""
    sharpness: SharpnessCriteria = SharpnessCriteria()
    """Pass thresholds of sharpness runs, strict unless a JSON file relaxes them"""
    plot: PlotKind = PlotKind.reconstruction
    """Data emitted by emit-plot runs"""
    tolerance: Optional[float] = None
    """Pass threshold overriding the method default"""
    output: Path = Path("results.csv")
    """CSV of result rows"""
    summary: Optional[Path] = None
    """JSON summary, next to the CSV by default"""
    seed: int = 0
    timings: bool = False
    """Whether wall times are written, which makes reruns differ"""

    class Config:
        allow_mutation = False

    @validator("probes")
    def not_empty(cls, value: Optional[List[Probe]]) -> Optional[List[Probe]]:
        if value is not None and not value:
            raise ValueError("the probe list must not be empty")
        return value

    @validator("cutoffs")
    def increasing_cutoffs(cls, value: List[float]) -> List[float]:
        if len(value) < 2 or any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("at least two increasing cutoffs are needed")
        return value

    @root_validator(skip_on_failure=True)
    def valid_dimensions(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        n, d = values["n"], values["d"]
        if n < 2 or not 1 <= d <= n - 1:
            raise ValueError(f"expected n >= 2 and 1 <= d <= n - 1, got n = {n}, d = {d}")
        if values["method"] == Method.validate and not values.get("suite"):
            raise ValueError("validate runs need a suite")
        return values

    @property
    def probe_list(self) -> List[Probe]:
        return list(DEFAULT_RADII) if self.probes is None else list(self.probes)

    @property
    def summary_path(self) -> Path:
        return self.summary or self.output.with_suffix(".json")

    @classmethod
    def from_sources(cls, path: Optional[Path], overrides: Dict[str, Any]) -> "ExperimentConfig":
        """Builds the config from a JSON file with the given values on top

        :param path: The JSON file, if any
        :param overrides: Values set on the command line, None meaning unset
        :raises OSError: when the file cannot be read
        :raises ValidationError: when the merged values are invalid
        """
        values: Dict[str, Any] = {}
        if path is not None:
            values = json.loads(path.read_text(encoding="utf-8"))
            logger.debug("Read configuration %s from %s", values, path)
        for key, value in overrides.items():
            if value is None:
                continue
            if isinstance(value, dict) and isinstance(values.get(key), dict):
                values[key] = {**values[key], **value}
            else:
                values[key] = value
        return cls(**values)

    def echo(self) -> Dict[str, Any]:
        """A JSON compatible copy for summaries"""
        return dict(json.loads(self.json()))
