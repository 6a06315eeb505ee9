import numpy as np
import pytest

from nsf_thinpipe import ThermoModel


@pytest.fixture(scope="session")
def model():
    """Reference coefficients used throughout the unit tests."""
    return ThermoModel()


@pytest.fixture(scope="session")
def gentle_model():
    """Transport coefficients sized for explicit desk-scale solver runs."""
    return ThermoModel(mu0=0.01, mu1=0.01, kappa0=0.1, kappa2=0.1, kappa3=0.1)


def wall_profiles(amp=0.1):
    """Smooth 1D data compatible with the mirrored wall extension.

    Density and temperature have zero slope at the ends, the velocity
    vanishes there; all three extend smoothly under even/odd reflection.
    """
    return (
        lambda y: 1.0 + amp * np.cos(2.0 * np.pi * y),
        lambda y: amp * np.sin(np.pi * y),
        lambda y: 1.0 + amp * np.cos(np.pi * y),
    )
