import logging

import numpy as np
import pytest

from horotomo.quadrature import QuadratureSpec

logger = logging.getLogger()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so random checks rerun identically"""
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def quad() -> QuadratureSpec:
    """Controls for checks against closed forms"""
    return QuadratureSpec(rel_tolerance=1e-9, abs_tolerance=1e-11)


@pytest.fixture(scope="session")
def coarse_quad() -> QuadratureSpec:
    """Cheaper controls for the reconstruction checks"""
    return QuadratureSpec(rel_tolerance=1e-7, abs_tolerance=1e-10, sphere_order=8)
