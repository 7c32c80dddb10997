"""Limits s → 1⁺ from values on the geometric node sequence s_j = 1 + 2^{-j} δ₀."""
from enum import Enum
from logging import Logger, getLogger
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from .exceptions import ContractViolation, ReconstructionUnstable
from .utils import as_float_array

logger: Logger = getLogger(__name__)


class Extrapolation(str, Enum):
    richardson = "richardson"
    linear = "linear"
    none = "none"


class ExtrapolationResult(BaseModel):
    value: float
    """The extrapolated limit"""
    extrapolants: List[float]
    """Diagonal of the Richardson tableau, or the raw values for the other rules"""
    error: float
    """Difference of the last two extrapolants"""


def geometric_nodes(delta: float, levels: int) -> np.ndarray:
    """The nodes 1 + 2^{-j} δ₀ for j = 0..levels

    >>> geometric_nodes(0.2, 2).tolist()
    [1.2, 1.1, 1.05]
    """
    return 1.0 + delta * 2.0 ** -np.arange(levels + 1, dtype=np.float64)


def richardson_tableau(values: Sequence[float]) -> np.ndarray:
    """Lower triangular tableau T[j, k] for an error expansion in powers of 2^{-j}

    >>> richardson_tableau([3.0, 2.0])[1, 1]
    1.0
    """
    samples = as_float_array(values)
    size = samples.size
    tableau = np.full((size, size), np.nan)
    tableau[:, 0] = samples
    for k in range(1, size):
        factor = 2.0**k - 1.0
        tableau[k:, k] = tableau[k:, k - 1] + (tableau[k:, k - 1] - tableau[k - 1 : -1, k - 1]) / factor
    return tableau


def extrapolate(
    values: Sequence[float],
    rule: Extrapolation = Extrapolation.richardson,
    tolerance: Optional[float] = None,
) -> ExtrapolationResult:
    """Extrapolates values sampled on the geometric nodes to the limit at s = 1

    :param values: Values on s_0, ..., s_J, in this order
    :param rule: The extrapolation rule
    :param tolerance: When set, successive extrapolants further apart than this abort the reconstruction
    :raises ContractViolation: when fewer than two values are passed
    :raises ReconstructionUnstable: when the last two extrapolants differ by more than tolerance
    """
    samples = as_float_array(values)
    if samples.size < 2:
        raise ContractViolation("At least two values are needed to extrapolate")
    if rule == Extrapolation.richardson:
        tableau = richardson_tableau(samples)
        diagonal = np.diag(tableau)
        logger.debug("Richardson tableau diagonal %s", diagonal)
        value, previous = float(diagonal[-1]), float(diagonal[-2])
        extrapolants = diagonal.tolist()
    elif rule == Extrapolation.linear:
        value = float(2.0 * samples[-1] - samples[-2])
        previous = float(2.0 * samples[-2] - samples[-3]) if samples.size > 2 else float(samples[-1])
        extrapolants = samples.tolist()
    else:
        value, previous = float(samples[-1]), float(samples[-2])
        extrapolants = samples.tolist()
    error = abs(value - previous)
    if tolerance is not None and (error > tolerance or not np.isfinite(value)):
        logger.warning("Extrapolation diverged: last extrapolants %s and %s", previous, value)
        raise ReconstructionUnstable(
            f"Successive extrapolants differ by {error}, more than {tolerance}",
            diagnostics={"values": samples.tolist(), "extrapolants": extrapolants, "rule": rule.value},
        )
    return ExtrapolationResult(value=value, extrapolants=extrapolants, error=error)
