import numpy as np
import pytest

from filament_lab.profile_ode import extract_asymptotics
from filament_lab.shooting import (
    TEST_FUNCTIONS,
    F_a,
    pv_integral,
    pv_pairing,
    shoot_lambda,
    shot_profile,
)


@pytest.mark.parametrize("a", [0.5, 3.0])
def test_straight_lines_bracket_the_root(a):
    assert F_a(a, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert F_a(a, -1.0) == pytest.approx(-1.0, abs=1e-8)


@pytest.mark.parametrize("a", [0.1, 1.0])
def test_shooting_enforces_vanishing_alpha(a):
    r = shoot_lambda(a)
    assert abs(r.F_value) < 1e-8
    assert r.alpha_residual < 1e-6
    assert np.sqrt(3) / 2 * a <= r.z0_modulus < a
    assert r.A_a == pytest.approx(a * r.lambda_a)


def test_zero_parameter_is_rejected():
    with pytest.raises(ValueError):
        shoot_lambda(0.0)


def test_principal_value_of_odd_gaussian():
    # pv int x e^{-x^2} / x dx = sqrt(pi)
    phi = TEST_FUNCTIONS["gauss_x"]
    assert pv_integral(phi, phi.support) == pytest.approx(np.sqrt(np.pi), rel=1e-9)


def test_even_functions_pair_to_zero():
    r = shoot_lambda(1.0)
    sol = shot_profile(1.0, r.lambda_a)
    asym = extract_asymptotics(None, sol)
    rep = pv_pairing(sol, asym, "bump_even", np.logspace(-2, -4, 5))
    odd = pv_pairing(sol, asym, "bump_odd", np.logspace(-2, -4, 5))
    assert np.max(np.abs(rep.P)) < 1e-3 * np.max(np.abs(odd.P))
    assert abs(abs(odd.z0_fit) - 2 * abs(asym.fp_inf)) < 0.02 * 2 * abs(asym.fp_inf)
