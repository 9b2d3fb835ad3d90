import numpy as np
import pytest

from echolab import ScramblonParams


@pytest.fixture(scope="session")
def fig3_params():
    """Fitted-parameter set used across closed-form tests."""
    return ScramblonParams(kappa=0.866, gamma_I=5.85e-4, gamma_c=5.85e-4,
                           delta_O=1.37, delta_d=2.74, b=1.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
