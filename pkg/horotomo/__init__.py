from .exceptions import (
    AccuracyWarning,
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
from .fields import ScalarField, ZonalField, parse_field, zonal_field
from .horosphere import Horosphere
from .hyperboloid import HyperbolicPoint, origin, radial_point
from .inversion import (
    InversionSpec,
    LaplacePolynomial,
    ReconstructionReport,
    invert_mean_value,
    invert_poly_even_d,
    invert_poly_general,
)
from .profiles import Profile1D
from .quadrature import QuadratureSpec
from .transform import HorosphericalImage, forward_general, forward_zonal, horospherical_image, mean_value

__all__ = [
    "AccuracyWarning",
    "ContractViolation",
    "DecompositionFailure",
    "DivergenceError",
    "GeometryError",
    "Horosphere",
    "HorosphericalImage",
    "HyperbolicPoint",
    "InsufficientSmoothness",
    "InversionSpec",
    "LaplacePolynomial",
    "ParameterError",
    "Profile1D",
    "QuadratureSpec",
    "ReconstructionReport",
    "ReconstructionUnstable",
    "ScalarField",
    "UnknownField",
    "UnknownSuite",
    "ZonalField",
    "forward_general",
    "forward_zonal",
    "horospherical_image",
    "invert_mean_value",
    "invert_poly_even_d",
    "invert_poly_general",
    "mean_value",
    "origin",
    "parse_field",
    "radial_point",
    "zonal_field",
]
