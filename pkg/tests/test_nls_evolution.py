import numpy as np
import pytest

from filament_lab.nls_evolution import (
    EvolutionConfig,
    EvolutionError,
    Trajectory,
    decay_fit,
    evolve_linear_reference,
    evolve_v,
    evolve_w,
    interior_mask,
    l4_tail_norm,
    perturbation_u_side,
    phase_obstruction_demo,
    sandwich_ratio,
    to_u_side,
    u_equation_residual,
    window_l2,
)
from filament_lab.transforms import ComplexField, SpatialGrid, free_propagate


def test_self_similar_background_solves_the_v_equation(odd_background):
    bg = odd_background
    x = np.linspace(-4, 4, 17)
    t, h, k = 1.3, 1e-3, 1e-4
    v = bg.vf(x, t)
    vt = (bg.vf(x, t + k) - bg.vf(x, t - k)) / (2 * k)
    vxx = (bg.vf(x + h, t) - 2 * v + bg.vf(x - h, t)) / h**2
    res = 1j * vt + vxx + v / (2 * t) * (np.abs(v) ** 2 - bg.A)
    assert np.max(np.abs(res)) < 1e-4


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(2.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        EvolutionConfig(1.0, 2.0, 0.0, rho=1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(1.0, 2.0, 0.0, coefficient_window=0.01)
    assert EvolutionConfig(2.0, 4.0, 0.0, dt_initial=0.02).rho == pytest.approx(1.01)


def test_constant_data_evolve_by_an_exact_phase():
    grid = SpatialGrid.symmetric(10.0, 256)
    c0, A = 0.7, 0.2
    cfg = EvolutionConfig(1.0, 5.0, A, rho=1.05)
    traj = evolve_v(ComplexField(grid, np.full(grid.n, c0, complex), 1.0), cfg, sponge=False)
    for f in traj.fields:
        exact = c0 * np.exp(0.5j * (c0**2 - A) * np.log(f.time))
        assert np.max(np.abs(f.values - exact)) < 1e-12


def test_mass_is_conserved_without_sponge():
    grid = SpatialGrid.symmetric(80.0, 1024)
    u0 = ComplexField(grid, np.exp(-grid.x**2) * (1 + 0.5j * grid.x), 1.0)
    traj = evolve_v(u0, EvolutionConfig(1.0, 3.0, 0.4, rho=1.01), sponge=False)
    norms = traj.l2_norms()
    assert np.ptp(norms) < 1e-12 * norms[0]


def test_self_similar_data_stay_self_similar(odd_background):
    bg = odd_background
    # the chirp of the background has local frequency |x|/2t; this grid resolves it
    grid = SpatialGrid.symmetric(80.0, 4096)
    cfg = EvolutionConfig(1.0, 1.5, bg.A, rho=1.0025, save_every=10**6)
    traj = evolve_v(ComplexField(grid, bg.vf(grid.x, 1.0), 1.0), cfg)
    m = interior_mask(grid, 0.5)
    err = window_l2(traj.fields[-1].values - bg.vf(grid.x, 1.5), grid, m)
    assert err < 1e-4


def test_w_equation_matches_difference_of_two_v_runs(odd_background):
    bg = odd_background
    grid = SpatialGrid.symmetric(80.0, 4096)
    m = interior_mask(grid, 0.5)
    w0 = ComplexField(grid, 1e-2 / (np.pi / 2) ** 0.25 * np.exp(-grid.x**2), 1.0)
    vf0 = bg.vf(grid.x, 1.0)
    cfg = EvolutionConfig(1.0, 2.0, bg.A, rho=1.0025, save_every=10**6)
    w = evolve_w(w0, cfg, bg).fields[-1].values
    v = evolve_v(ComplexField(grid, vf0 + w0.values, 1.0), cfg).fields[-1].values
    v_bg = evolve_v(ComplexField(grid, vf0, 1.0), cfg).fields[-1].values
    assert window_l2(w - (v - v_bg), grid, m) < 1e-4 * w0.l2_norm()


def test_linearised_w_flow_against_adaptive_reference(odd_background):
    bg = odd_background
    grid = SpatialGrid.symmetric(80.0, 4096)
    w0 = ComplexField(grid, 1e-6 / (np.pi / 2) ** 0.25 * np.exp(-grid.x**2), 1.0)
    ref = evolve_linear_reference(w0, [1.5], bg, rtol=1e-13)[-1]
    scale = ref.l2_norm()
    cfg = EvolutionConfig(1.0, 1.5, bg.A, rho=1.0025, save_every=10**6)
    coarse = evolve_w(w0, cfg, bg, linear=True).fields[-1].values
    fine = evolve_w(w0, cfg.refined(2), bg, linear=True).fields[-1].values
    assert window_l2(coarse - ref.values, grid) / scale < 1e-4
    extrapolated = (4 * fine - coarse) / 3
    assert window_l2(extrapolated - ref.values, grid) / scale < 1e-10
    # nonlinear terms scale with the amplitude
    gaps = []
    for amp in (1.0, 0.1):
        w = w0.with_values(amp * w0.values)
        a = evolve_w(w, cfg, bg).fields[-1].values
        b = evolve_w(w, cfg, bg, linear=True).fields[-1].values
        gaps.append(window_l2(a - b, grid) / window_l2(b, grid))
    assert gaps[0] / gaps[1] == pytest.approx(10.0, rel=0.05)


def test_under_resolved_run_is_reported():
    grid = SpatialGrid.symmetric(20.0, 256)
    strong = ComplexField(grid, 30 * np.exp(-grid.x**2) + 0j, 1.0)
    with pytest.raises(EvolutionError, match="spectral tail"):
        evolve_v(strong, EvolutionConfig(1.0, 2.0, 0.0, rho=1.2), sponge=False)


def _synthetic(times, nu, grid):
    profile = np.exp(-grid.x**2)
    return Trajectory(np.asarray(times), [ComplexField(grid, t ** (-nu) * profile + 0j, t)
                                          for t in times], "w-equation")


def test_decay_fit_recovers_power_law():
    grid = SpatialGrid.symmetric(20.0, 256)
    fit = decay_fit(_synthetic(np.geomspace(1, 100, 30), 0.3, grid), gamma=0.5)
    assert fit.nu == pytest.approx(0.3, abs=1e-10)
    assert fit.meets_rate
    assert fit.residual < 1e-10


def test_decay_fit_ignores_the_vanishing_horizon_value():
    grid = SpatialGrid.symmetric(20.0, 256)
    traj = _synthetic(np.geomspace(1, 100, 30), 0.2, grid)
    traj.fields[-1] = traj.fields[-1].with_values(0 * traj.fields[-1].values)
    fit = decay_fit(traj)
    assert fit.nu == pytest.approx(0.2, abs=1e-10)


def test_decay_fit_declines_round_off_and_growth():
    grid = SpatialGrid.symmetric(20.0, 256)
    assert decay_fit(_synthetic(np.geomspace(1, 100, 5), 0.0, grid),
                     reference=lambda t: np.exp(-grid.x**2)).nu is None
    assert decay_fit(_synthetic(np.geomspace(1, 100, 5), -0.2, grid)).nu is None
    with pytest.raises(ValueError):
        decay_fit(_synthetic(np.geomspace(1, 5, 5), 0.2, grid))


def test_l4_tail_of_constant():
    t = np.linspace(0, 2, 11)
    assert l4_tail_norm(t, np.ones_like(t))[0] == pytest.approx(2 ** 0.25)


def test_zero_data_give_zero_perturbation():
    grid = SpatialGrid.symmetric(20.0, 256)
    zero = ComplexField(grid, np.zeros(grid.n, complex))
    z = Trajectory(np.array([1.0, 10.0]), [zero.with_values(zero.values, 1.0),
                                          zero.with_values(zero.values, 10.0)], "w-equation")
    g = perturbation_u_side(z, zero, 0.3)
    assert all(np.all(f.values == 0) for f in g.fields)
    assert g.times[0] == pytest.approx(0.1)


def test_free_scattering_state_turns_by_the_log_phase():
    grid = SpatialGrid.symmetric(40.0, 512)
    up = ComplexField(grid, grid.x * np.exp(-grid.x**2) + 0j)
    taus = np.geomspace(1, 100, 6)
    z = Trajectory(taus, [ComplexField(grid, np.zeros(grid.n, complex), t) for t in taus],
                   "w-equation")
    still = perturbation_u_side(z, up, 0.0)
    turning = perturbation_u_side(z, up, 0.4)
    for a, b in zip(still.fields, turning.fields):
        assert a.l2_norm() == pytest.approx(up.l2_norm(), rel=1e-12)
        assert np.max(np.abs(b.values - np.exp(0.2j * np.log(a.time)) * a.values)) < 1e-14
    report = phase_obstruction_demo(turning)
    assert report.alpha == 0.4
    assert report.scale == pytest.approx(up.l2_norm())


def test_u_side_images_are_isometric():
    grid = SpatialGrid.symmetric(40.0, 512)
    f = ComplexField(grid, np.exp(-grid.x**2) + 0j, 1.0)
    traj = Trajectory(np.array([1.0, 2.0]), [f, free_propagate(f, 1.0)], "v-equation")
    u = to_u_side(traj)
    assert u.times.tolist() == pytest.approx([0.5, 1.0])
    assert [g.l2_norm() for g in u.fields] == pytest.approx(traj.l2_norms().tolist()[::-1])
    with pytest.raises(ValueError):
        to_u_side(u)


@pytest.mark.parametrize("A", [0.0, 0.3])
def test_u_equation_residual_is_second_order(A):
    grid = SpatialGrid.symmetric(80.0, 2048)
    v0 = ComplexField(grid, np.exp(-grid.x**2 / 4) + 0j, 2.0)
    rel = []
    for step in (1e-3, 5e-4):
        traj = evolve_v(v0, EvolutionConfig(2.0, 2.0 + 2 * step, A, rho=1 + step / 2),
                        sponge=False)
        res, scale = u_equation_residual(traj.fields, A)
        rel.append(res / scale)
    assert rel[0] < 1e-6
    assert rel[0] / rel[1] == pytest.approx(4.0, rel=0.1)


def test_background_lies_inside_its_own_sandwich(odd_background):
    bg = odd_background
    grid = SpatialGrid.symmetric(40.0, 1024)
    u = ComplexField(grid, bg.uf(grid.x, 0.5), 0.5)
    assert sandwich_ratio(u, bg) == pytest.approx(0.5, rel=1e-12)
