import numpy as np
import pytest

from filament_lab.transforms import ComplexField, SpatialGrid, kernel_At
from filament_lab.wave_operator import (
    PicardDivergence,
    QuadratureError,
    WaveOpConfig,
    apply_B,
    decompose_I1_I2,
    fit_I1_constant,
    i1_field,
    linear_F1,
    nlt,
    picard_solve,
    source_F0,
    y_norm,
)


@pytest.fixture(scope="module")
def small_grid():
    return SpatialGrid.symmetric(64.0, 512)


def test_config_validation():
    for bad in ({"gamma": 0.0}, {"gamma": 1.0}, {"nu": 0.2}, {"t0": 0.5},
                {"T_max": 50.0}, {"source_sign": "flipped"}):
        with pytest.raises(ValueError):
            WaveOpConfig(**bad)
    cfg = WaveOpConfig(gamma=0.4)
    assert cfg.nu == pytest.approx(0.1)
    assert (cfg.nodes().size - 1) % 4 == 0
    assert cfg.with_horizon(150.0).T_max == 150.0


def test_pointwise_terms_by_hand(small_grid):
    class Tails:
        f_inf, alpha = 0.5, 0.2

    g = small_grid
    vf = ComplexField(g, np.full(g.n, 0.4 + 0.3j))
    zp = ComplexField(g, np.full(g.n, 1.0 - 2.0j))
    t = 3.0
    ph = np.exp(-1j * 0.2 * np.log(t))
    expected = 2 * (0.25 - 0.25) * (1 - 2j) + (0.4 + 0.3j) ** 2 * ph * (1 + 2j)
    assert np.allclose(source_F0(zp, vf, Tails, t).values, expected)
    assert np.allclose(linear_F1(zp, vf, Tails, t).values, expected)
    zero = ComplexField(g, np.zeros(g.n, complex))
    assert np.allclose(nlt(zp, zero, Tails, t).values, 5.0 * (1 - 2j))


def test_zero_scattering_state_is_a_fixed_point(constant_background, small_grid):
    cfg = WaveOpConfig(1.0, 100.0, quad_nodes_per_decade=40)
    zero = ComplexField(small_grid, np.zeros(small_grid.n, complex))
    traj, hist = picard_solve(zero, cfg, constant_background)
    assert hist.converged
    assert np.all(traj.values() == 0)
    assert apply_B(None, zero, cfg, constant_background).meta["quad_error"] == 0.0


def test_source_term_against_closed_form(constant_background):
    bg = constant_background
    c0, T = 0.3, 100.0
    g = SpatialGrid.symmetric(200.0, 4096)
    up = ComplexField(g, 1e-3 * np.exp(-g.x**2 / 50))
    cfg = WaveOpConfig(1.0, T, quad_nodes_per_decade=200)
    traj = apply_B(None, up, cfg, bg, terms=("F0",))
    xi = g.xi
    uh = np.fft.fft(up.values)
    u_neg = np.conj(np.roll(uh[::-1], 1))
    alpha = bg.alpha
    for t in (1.0, 10.0):
        K = np.full(g.n, (t ** (-1j * alpha) - T ** (-1j * alpha)) / (1j * alpha), dtype=complex)
        nz = xi != 0
        K[nz] = kernel_At(np.abs(xi[nz]), t, alpha) - kernel_At(np.abs(xi[nz]), T, alpha)
        exact = np.fft.ifft(-0.5j * c0**2 * np.exp(-1j * t * xi**2) * u_neg * K)
        num = traj.at(t).values
        assert np.linalg.norm(num - exact) / np.linalg.norm(exact) < 1e-5


def test_coarse_quadrature_is_refused(constant_background):
    g = SpatialGrid.symmetric(200.0, 4096)
    up = ComplexField(g, 1e-3 * np.exp(-g.x**2 / 50))
    cfg = WaveOpConfig(1.0, 100.0, quad_nodes_per_decade=8)
    with pytest.raises(QuadratureError):
        apply_B(None, up, cfg, constant_background, terms=("F0",))


def test_y_norm_of_exact_power_law(small_grid):
    cfg = WaveOpConfig(1.0, 100.0, quad_nodes_per_decade=40, gamma=0.5)
    t = cfg.nodes()
    profile = np.exp(-small_grid.x**2 / 2) / np.pi ** 0.25
    z = t[:, None] ** (-cfg.nu) * profile[None, :]
    rep = y_norm(z + 0j, cfg, small_grid)
    assert rep.l2_part == pytest.approx(1.0, rel=1e-12)
    assert rep.total > rep.l2_part


def test_unknown_terms_rejected(constant_background, small_grid):
    cfg = WaveOpConfig(1.0, 100.0, quad_nodes_per_decade=40)
    up = ComplexField(small_grid, np.zeros(small_grid.n, complex))
    with pytest.raises(ValueError):
        apply_B(None, up, cfg, constant_background, terms=("F2",))


def test_large_data_break_the_contraction(small_a_background):
    g = SpatialGrid.symmetric(256.0, 4096)
    cfg = WaveOpConfig(1.0, 100.0, quad_nodes_per_decade=160, gamma=0.5, quad_tol=0.1)
    shape = (g.x / 2) * np.exp(-g.x**2 / 8)
    _, hist = picard_solve(ComplexField(g, 0.3 * shape + 0j), cfg, small_a_background)
    assert hist.converged
    assert max(hist.ratios) < 1
    with pytest.raises(PicardDivergence) as info:
        picard_solve(ComplexField(g, 3.0 * shape + 0j), cfg, small_a_background)
    assert info.value.ratios[-1] >= 1


def test_i1_is_conjugate_linear(odd_profile, small_grid):
    _, asym = odd_profile
    x = small_grid.x
    f = ComplexField(small_grid, np.exp(-x**2) * (1 + 0.2j * x))
    h = ComplexField(small_grid, x * np.exp(-(x - 1) ** 2) + 0j)
    c = 0.7 - 1.3j
    lhs = i1_field(f.with_values(f.values + c * h.values), asym, 4.0).values
    rhs = i1_field(f, asym, 4.0).values + np.conj(c) * i1_field(h, asym, 4.0).values
    assert np.max(np.abs(lhs - rhs)) < 1e-13 * np.max(np.abs(lhs))
    zero = f.with_values(0 * f.values)
    assert np.all(i1_field(zero, asym, 4.0).values == 0)


def test_i1_bound_constant_is_finite(odd_profile, small_grid):
    _, asym = odd_profile
    x = small_grid.x
    up = ComplexField(small_grid, x * np.exp(-x**2 / 2) + 0j)
    C, ratios = fit_I1_constant(up, asym, np.geomspace(1, 1000, 7), 0.5)
    assert np.isfinite(C) and C == ratios.max()
    pieces = decompose_I1_I2(up, asym, 2.0, WaveOpConfig(), horizon=200.0)
    assert set(pieces) == {"I1", "I2"}
    assert np.all(np.isfinite(pieces["I2"].values))
