from typing import Any, Dict, Optional


class ContractViolation(Exception):
    """An operation was called outside of its preconditions"""


class GeometryError(Exception):
    """Points do not lie on the upper sheet of the hyperboloid"""


class DecompositionFailure(Exception):
    """An Iwasawa factorization could not be reassembled"""


class ParameterError(Exception):
    """A parameter lies in an excluded set or outside its admissible range"""


class InsufficientSmoothness(Exception):
    """A profile cannot supply the derivatives an operator needs"""


class UnknownSuite(Exception):
    """Validation suite could not be found"""


class UnknownField(Exception):
    """Test field could not be found"""


class DivergenceError(Exception):
    """An integral did not converge within the truncation budget"""

    def __init__(self, message: str, value: float = float("nan"), truncated: bool = True) -> None:
        super().__init__(message)
        self.value = value
        """Best truncated estimate, if one was computed"""
        self.truncated = truncated
        """Whether the estimate stems from a truncated domain"""


class ReconstructionUnstable(Exception):
    """The extrapolation towards the boundary diverged"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}
        """Nodes, values and extrapolants of the failed sequence"""


class AccuracyWarning(UserWarning):
    """A numerical tolerance was not reached within the evaluation budget"""

    def __init__(self, message: str, estimate: Any = float("nan"), error: Any = float("nan")) -> None:
        super().__init__(message)
        self.estimate = estimate
        self.error = error
