import numpy as np
import pytest
from scipy.linalg import expm

from filament_lab.profile_ode import (
    GammaParams,
    MixedParams,
    OddParams,
    ProfileSolution,
    energy_residual,
    extract_asymptotics,
    integrate_gamma,
    integrate_profile_f,
    integrate_profile_from_params,
    key_identity_residuals,
    reflected_params,
    rotation_about_axis3,
    rotation_generator,
)


@pytest.mark.parametrize("params", [OddParams(0.5, -0.9), OddParams(2.0, 0.0), OddParams(10.0, 0.956),
                                    MixedParams(3.0, 1.8), MixedParams(3.0, 0.4)])
def test_energy_is_conserved(params):
    sol = integrate_profile_from_params(params, tol=1e-10)
    assert energy_residual(sol) < 1e-8


@pytest.mark.parametrize("params", [OddParams(1.0, 0.3), OddParams(10.0, -0.1), MixedParams(3.0, 0.4)])
def test_curve_and_profile_agree_through_identities(params):
    curve = integrate_gamma(params, tol=1e-10)
    sol = integrate_profile_from_params(params, tol=1e-10)
    res = key_identity_residuals(curve, sol, params.a)
    assert max(res) < 1e-6


def test_profile_solves_its_equation(odd_profile):
    sol, _ = odd_profile
    y = np.linspace(-20, 20, 9)
    f, fp = sol.evaluate(y)

    def second_difference(h):
        return (sol.evaluate(y + h)[0] - 2 * f + sol.evaluate(y - h)[0]) / h**2

    # the chirp oscillates with frequency |y|/2, so remove the O(h^2) term
    h = 2e-3
    fpp = (4 * second_difference(h / 2) - second_difference(h)) / 3
    residual = fpp + 0.5j * y * fp + 0.5 * f * (np.abs(f) ** 2 - sol.A)
    assert np.max(np.abs(residual)) < 1e-5


def test_constant_profile_is_exact():
    c0 = 0.7
    sol = integrate_profile_f(c0**2, c0, 0.0)
    assert np.max(np.abs(sol.f - c0)) < 1e-12
    asym = extract_asymptotics(None, sol)
    assert asym.alpha == pytest.approx(c0**2, abs=1e-9)
    assert asym.delta == pytest.approx(0.0, abs=1e-9)


def test_asymptotic_relations(odd_profile):
    _, asym = odd_profile
    assert asym.delta == pytest.approx(asym.f_inf**2 - asym.A)
    assert asym.alpha == pytest.approx(2 * asym.f_inf**2 - asym.A)
    assert asym.symmetric_gap < 1e-6


def test_rotation_closed_form_matches_matrix_exponential():
    for angle in (-2.0, 0.3, 5.0):
        assert np.allclose(rotation_about_axis3(angle), expm(rotation_generator(1.0) * angle), atol=1e-13)


def test_invalid_initial_data_are_rejected():
    with pytest.raises(ValueError):
        OddParams(1.0, 1.5)
    with pytest.raises(ValueError):
        GammaParams(1.0, (0.0, 0.0, 0.0), (0.0, 0.0, 2.0))
    with pytest.raises(ValueError):
        MixedParams(1.0, -0.1)


def test_reflection_maps_to_opposite_parameter():
    params = OddParams(2.0, 0.4)
    ref = reflected_params(params)
    assert ref.a == -2.0
    curve = integrate_gamma(params, half_length=10.0)
    mirror = integrate_gamma(ref, half_length=10.0)
    flip = np.array([1.0, -1.0, 1.0])
    assert np.max(np.abs(curve.gamma[::-1] * flip - mirror.gamma)) < 1e-8


def test_profile_csv_round_trip(tmp_path, odd_profile):
    sol, _ = odd_profile
    path = tmp_path / "profile.csv"
    sol.to_csv(path)
    back = ProfileSolution.from_csv(path)
    assert back.A == sol.A
    assert np.array_equal(back.f, sol.f)
