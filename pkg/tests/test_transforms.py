import numpy as np
import pytest

from filament_lab.transforms import (
    ComplexField,
    MultiplierSpec,
    SpatialGrid,
    apply_tdelta,
    dual_grid,
    free_propagate,
    gaussian_free_evolution,
    kernel_At,
    kernel_At_bruteforce,
    kernel_bound_scan,
    lemma1_check,
    pitt_check,
    pseudo_conformal,
    scattering_image,
    strichartz_probe,
    trig_interpolate,
)


@pytest.fixture
def grid():
    return SpatialGrid.symmetric(40.0, 1024)


def test_grid_requires_power_of_two():
    with pytest.raises(ValueError):
        SpatialGrid.symmetric(1.0, 1000)
    with pytest.raises(ValueError):
        SpatialGrid.symmetric(1.0, 128)


def test_free_gaussian_matches_closed_form(grid):
    u = ComplexField.from_function(grid, lambda x: np.exp(-x * x))
    v = free_propagate(u, 1.0)
    assert np.max(np.abs(v.values - gaussian_free_evolution(grid.x, 1.0))) < 1e-12
    assert v.l2_norm() == pytest.approx(u.l2_norm(), rel=1e-13)


def test_fourier_convention_on_gaussian(grid):
    u = ComplexField.from_function(grid, lambda x: np.exp(-x * x))
    exact = np.sqrt(np.pi) / (2 * np.pi) * np.exp(-grid.xi**2 / 4)
    assert np.max(np.abs(u.fourier() - exact)) < 1e-14
    probe = np.array([0.3, 1.1])
    direct = np.sqrt(np.pi) / (2 * np.pi) * np.exp(-probe**2 / 4)
    assert np.max(np.abs(u.fourier_at(probe) - direct)) < 1e-13


def test_pseudo_conformal_is_an_isometric_involution(grid):
    f = ComplexField(grid, np.exp(-(grid.x - 1) ** 2 + 0.5j * grid.x), time=0.5)
    Tf = pseudo_conformal(f)
    assert Tf.time == pytest.approx(2.0)
    assert Tf.l2_norm() == pytest.approx(f.l2_norm(), rel=1e-13)
    back = pseudo_conformal(Tf)
    assert back.grid == grid
    assert np.max(np.abs(back.values - f.values)) < 1e-13


@pytest.mark.parametrize("tau", [0.5, 2.0, 10.0])
def test_scattering_image_intertwines_free_flows(tau):
    grid = SpatialGrid.symmetric(200.0, 4096)
    w = ComplexField(grid, (1 + 0.3j * grid.x) * np.exp(-grid.x**2 / 4 + 0.2j * grid.x))
    direct = pseudo_conformal(free_propagate(w, tau), 1 / tau)
    via = free_propagate(scattering_image(w), 1 / tau)
    xs = np.linspace(-3, 3, 7)
    assert np.max(np.abs(trig_interpolate(direct, xs) - trig_interpolate(via, xs))) < 1e-12
    assert via.grid == dual_grid(grid)


def test_kernel_matches_bruteforce():
    for xi, t, d in [(1.0, 0.5, 0.5), (0.3, 2.0, -0.7), (2.0, 0.1, 1.3)]:
        assert abs(kernel_At(xi, t, d) - kernel_At_bruteforce(xi, t, d)) < 1e-8


def test_kernel_rejects_degenerate_arguments():
    with pytest.raises(ValueError):
        kernel_At(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        kernel_At(0.0, 1.0, 0.5)


def test_kernel_bound_constant_is_grid_stable():
    c40 = kernel_bound_scan(0.5, 40).constant
    c80 = kernel_bound_scan(0.5, 80).constant
    assert abs(c80 - c40) <= 0.1 * c40


def test_tdelta_is_unitary_and_commutes_with_free_flow(grid):
    f = ComplexField(grid, np.exp(-(grid.x - 1) ** 2 + 0.5j * grid.x))
    spec = MultiplierSpec(0.4, 0.3, 1.2)
    assert apply_tdelta(f, spec).l2_norm() == pytest.approx(f.l2_norm(), rel=1e-13)
    a = apply_tdelta(free_propagate(f, 0.7), spec).values
    b = free_propagate(apply_tdelta(f, spec), 0.7).values
    assert np.max(np.abs(a - b)) < 1e-13


@pytest.mark.parametrize("beta", [0.0, 0.5, 2.0, 4.0])
def test_phase_difference_inequality(grid, beta):
    u = ComplexField.from_function(grid, lambda x: np.exp(-x * x))
    lhs, rhs = lemma1_check(u, 0.5, beta)
    assert lhs <= rhs


@pytest.mark.parametrize("beta", [0.0, 0.3, 0.7])
def test_pitt_inequality(grid, beta):
    for f in (np.exp(-grid.x**2), np.exp(-(grid.x - 3) ** 2)):
        lhs, rhs = pitt_check(ComplexField(grid, f), beta)
        assert lhs <= rhs * (1 + 1e-9)


def test_dispersive_decay_of_free_gaussian():
    big = SpatialGrid.symmetric(400.0, 8192)
    rep = strichartz_probe(ComplexField.from_function(big, lambda x: np.exp(-x * x)), 1.0, 20.0)
    assert rep.dispersive_ratio <= 1.0
    assert rep.decay_exponent == pytest.approx(0.5, abs=0.02)
    assert np.ptp(rep.l2_norm) < 1e-12
