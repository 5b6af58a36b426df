import numpy as np
import pytest

from filament_lab.nls_evolution import Background
from filament_lab.profile_ode import (
    OddParams,
    extract_asymptotics,
    integrate_profile_f,
    integrate_profile_from_params,
)
from filament_lab.shooting import shoot_lambda, shot_profile


@pytest.fixture(scope="session")
def odd_profile():
    sol = integrate_profile_from_params(OddParams(1.0, 0.3), half_length=60.0, tol=1e-12)
    return sol, extract_asymptotics(None, sol)


@pytest.fixture(scope="session")
def odd_background(odd_profile):
    return Background(*odd_profile)


@pytest.fixture(scope="session")
def small_a_background():
    lam = shoot_lambda(0.1).lambda_a
    sol = shot_profile(0.1, lam)
    return Background(sol, extract_asymptotics(None, sol))


@pytest.fixture(scope="session")
def constant_background():
    c0 = 0.3
    sol = integrate_profile_f(c0**2, c0, 0.0)
    return Background(sol, extract_asymptotics(None, sol))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
