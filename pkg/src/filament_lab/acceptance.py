"""The acceptance battery: one function per criterion, each returning a ``Check``.

Every check records what it measured, the tolerance it was held to and its
wall time. Budgets are part of the verdict. Setups (grids, amplitudes,
horizons) are fixed here so that repeated runs are bit-identical.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.fft import fft, ifft

from .filament import (
    procrustes,
    reconstruct_self_similar,
    self_similar_curve,
    spiral_initial_curve,
    spiral_limit,
    trace_at_zero,
)
from .nls_evolution import (
    Background,
    EvolutionConfig,
    decay_fit,
    evolve_v,
    interior_mask,
    perturbation_u_side,
    phase_obstruction_demo,
    richardson_ratio,
    window_l2,
)
from .profile_ode import (
    MixedParams,
    OddParams,
    energy_residual,
    extract_asymptotics,
    integrate_gamma,
    integrate_profile_f,
    integrate_profile_from_params,
    key_identity_residuals,
)
from .shooting import pv_pairing, shoot_lambda, shot_profile
from .transforms import ComplexField, SpatialGrid, kernel_bound_scan
from .wave_operator import WaveOpConfig, picard_solve, y_norm

SWEEP_A = (0.5, 1.0, 2.0, 5.0, 10.0)
SWEEP_LAMBDA = (-0.9, -0.5, 0.0, 0.5, 0.9)
FIGURE_PARAMS = (OddParams(10.0, 0.956), OddParams(10.0, -0.1),
                 MixedParams(3.0, 1.8), MixedParams(3.0, 0.4))
SHOOTING_A = (0.1, 0.5, 1.0, 3.0)
ODD_TEST_FUNCTIONS = ("gauss_x", "gauss_x3", "bump_odd", "shifted_bump_odd")
EVEN_TEST_FUNCTIONS = ("gauss", "bump_even")
SMALL_A = 0.1
PERTURBATION_AMPLITUDE = 0.03


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    measured: dict
    tolerance: str
    seconds: float
    budget: float
    note: str = ""

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return (f"{self.verdict} criterion {self.criterion:2d} {self.name}: {shown} "
                f"[{self.tolerance}; {self.seconds:.1f}s of {self.budget:.0f}s]")

    def to_json(self) -> dict:
        return {"criterion": self.criterion, "name": self.name, "verdict": self.verdict,
                "measured": {k: _jsonable(v) for k, v in self.measured.items()},
                "tolerance": self.tolerance, "seconds": self.seconds, "budget": self.budget,
                "note": self.note}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.4g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


def _timed(fn: Callable, *args, **kw):
    start = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - start


def odd_perturbation(grid: SpatialGrid, width: float,
                     amplitude: float = PERTURBATION_AMPLITUDE) -> ComplexField:
    """``amplitude (x/width) exp(-x^2/(2 width^2))``; odd, so its transform vanishes at 0."""
    x = grid.x
    return ComplexField(grid, amplitude * (x / width) * np.exp(-x**2 / (2 * width**2)))


def small_a_background(a: float = SMALL_A) -> tuple[Background, float]:
    """Background built from the shot profile at ``a``; returns it with ``lambda_a``."""
    lam = shoot_lambda(a).lambda_a
    sol = shot_profile(a, lam)
    return Background(sol, extract_asymptotics(None, sol)), lam


# ----------------------------------------------------------------- criteria

def criterion_1(tol: float = 1e-10, bound: float = 1e-8, budget: float = 1.0) -> Check:
    # compile the integrator before timing
    integrate_profile_from_params(OddParams(1.0, 0.0), tol=tol)
    start = time.perf_counter()
    worst, slowest = 0.0, 0.0
    for a in SWEEP_A:
        for lam in SWEEP_LAMBDA:
            sol, dt = _timed(integrate_profile_from_params, OddParams(a, lam), tol=tol)
            worst = max(worst, energy_residual(sol))
            slowest = max(slowest, dt)
    total = time.perf_counter() - start
    return Check(1, "conservation law", worst < bound and slowest < budget,
                 {"max_energy_residual": worst, "slowest_run_s": slowest, "runs": 25},
                 f"residual < {bound:g}, each run < {budget:g}s", total, budget * 25,
                 "timing excludes one warm-up call that compiles the integrator")


def criterion_2(tol: float = 1e-10, bound: float = 1e-6, budget: float = 5.0) -> Check:
    params = [OddParams(a, lam) for a in SWEEP_A for lam in SWEEP_LAMBDA] + list(FIGURE_PARAMS)
    start = time.perf_counter()
    worst, slowest = 0.0, 0.0
    for p in params:
        t0 = time.perf_counter()
        curve = integrate_gamma(p, tol=tol)
        sol = integrate_profile_from_params(p, tol=tol)
        res = key_identity_residuals(curve, sol, p.a)
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, res.modulus, res.derivative)
    total = time.perf_counter() - start
    return Check(2, "cross identities", worst < bound and slowest < budget,
                 {"max_identity_residual": worst, "slowest_run_s": slowest, "runs": len(params)},
                 f"residual < {bound:g}, each run < {budget:g}s", total, budget * len(params))


def criterion_3(budget: float = 120.0) -> Check:
    start = time.perf_counter()
    rows, ok = [], True
    for a in SHOOTING_A:
        r = shoot_lambda(a)
        band = np.sqrt(3) / 2 * abs(a) <= r.z0_modulus < abs(a)
        good = abs(r.F_value) < 1e-8 and r.alpha_residual < 1e-6 and band
        ok &= good
        rows.append((a, r.lambda_a, abs(r.F_value), r.alpha_residual, r.z0_modulus / abs(a)))
    total = time.perf_counter() - start
    return Check(3, "shooting", ok and total < budget,
                 {"lambda_a": [r[1] for r in rows], "max_abs_F": max(r[2] for r in rows),
                  "max_alpha_residual": max(r[3] for r in rows),
                  "z0_over_a": [r[4] for r in rows]},
                 "|F| < 1e-8, alpha residual < 1e-6, sqrt(3)/2 <= |z0|/|a| < 1",
                 total, budget)


def _intercept(t: np.ndarray, P: np.ndarray) -> complex:
    k = min(5, t.size)
    sel = np.argsort(t)[:k]
    basis = [np.ones(k), np.sqrt(t[sel]), t[sel]][: max(1, k - 2)]
    coef, *_ = np.linalg.lstsq(np.column_stack(basis), P[sel], rcond=None)
    return complex(coef[0])


def criterion_4(a: float = 1.0, budget: float = 60.0) -> Check:
    start = time.perf_counter()
    lam = shoot_lambda(a).lambda_a
    sol = shot_profile(a, lam)
    asym = extract_asymptotics(None, sol)
    ts = np.logspace(-1, -4, 13)
    fits, odd_scale = [], 0.0
    for name in ODD_TEST_FUNCTIONS:
        rep = pv_pairing(sol, asym, name, ts)
        fits.append(rep.z0_fit)
        odd_scale = max(odd_scale, abs(_intercept(rep.t, rep.P)))
    even = []
    for name in EVEN_TEST_FUNCTIONS:
        rep = pv_pairing(sol, asym, name, ts)
        even.append(abs(_intercept(rep.t, rep.P)) / odd_scale)
    fits = np.array(fits)
    ref = np.mean(fits)
    spread = float(np.max(np.abs(fits - ref)) / abs(ref))
    predicted = 2 * abs(asym.fp_inf)
    modulus_gap = float(np.max(np.abs(np.abs(fits) - predicted)) / predicted)
    total = time.perf_counter() - start
    ok = spread < 0.02 and modulus_gap < 0.02 and max(even) < 1e-3 and len(fits) >= 3
    return Check(4, "pv pairing", ok and total < budget,
                 {"z0_spread": spread, "modulus_gap": modulus_gap, "even_over_odd": even,
                  "odd_functions": len(fits)},
                 "spread < 2%, | |z0| - 2|f'|inf | < 2%, even/odd < 1e-3", total, budget)


def criterion_5(budget: float = 120.0) -> Check:
    start = time.perf_counter()
    sol = integrate_profile_from_params(OddParams(1.0, 0.3), half_length=60.0, tol=1e-12)
    bg = Background(sol, extract_asymptotics(None, sol))
    grid = SpatialGrid.symmetric(80.0, 4096)
    mask = interior_mask(grid, 0.5)
    base = EvolutionConfig(1.0, 4.0, sol.A, rho=1.01, save_every=14)
    v0 = ComplexField(grid, bg.vf(grid.x, 1.0), 1.0)
    finals, errors = [], []
    for factor in (4, 8, 16):
        traj = evolve_v(v0, base.refined(factor))
        errors.append(max(window_l2(f.values - bg.vf(grid.x, f.time), grid, mask)
                          for f in traj.fields))
        finals.append(traj.fields[-1])
    ratio = richardson_ratio(*finals, mask)
    total = time.perf_counter() - start
    ok = errors[-1] < 1e-4 and abs(ratio - 4) <= 0.5
    return Check(5, "self-similar exactness", ok and total < budget,
                 {"max_error_by_refinement": errors, "richardson_ratio": ratio},
                 "error < 1e-4 on the interior half, ratio 4 +- 0.5", total, budget)


@dataclass
class FixedPointStudy:
    """Fixed points for the small-``a`` profile at two horizons on one wide grid."""

    width: float = 2.0
    half_width: float = 2048.0
    n: int = 16384
    horizon: float = 150.0
    gamma: float = 0.5
    results: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)

    def run(self):
        if self.results:
            return self
        bg, _ = small_a_background()
        grid = SpatialGrid.symmetric(self.half_width, self.n)
        u_plus = odd_perturbation(grid, self.width)
        for T in (self.horizon, 2 * self.horizon):
            cfg = WaveOpConfig(1.0, T, gamma=self.gamma)
            (z, hist), dt = _timed(picard_solve, u_plus, cfg, bg)
            self.results[T] = (z, hist, cfg)
            self.seconds[T] = dt
        self.u_plus = u_plus
        return self


def criterion_6(study: Optional[FixedPointStudy] = None, budget: float = 600.0) -> Check:
    study = (study or FixedPointStudy()).run()
    T1, T2 = study.horizon, 2 * study.horizon
    z1, h1, cfg1 = study.results[T1]
    z2, h2, cfg2 = study.results[T2]
    y2 = y_norm(z2, cfg2).total
    shift = float(np.sqrt(z1.grid.dx * np.sum(np.abs(z2.fields[0].values - z1.fields[0].values) ** 2)))
    sensitivity = shift * cfg2.t0 ** cfg2.nu / y2
    ratio = max(max(h1.ratios), max(h2.ratios))
    residual = max(h1.residual, h2.residual)
    total = sum(study.seconds.values())
    ok = (h1.converged and h2.converged and ratio < 0.5 and residual < 10 * cfg1.tol
          and sensitivity < 0.05)
    return Check(6, "fixed point", ok and total < budget,
                 {"max_contraction_ratio": ratio, "iterations": [h1.iterations, h2.iterations],
                  "residual": residual, "horizon_sensitivity": sensitivity,
                  "quad_error": max(h1.quad_error, h2.quad_error)},
                 "ratio < 0.5, residual < 10 tol, T_max doubling < 5% of the Y norm",
                 total, budget)


def criterion_7(study: Optional[FixedPointStudy] = None, budget: float = 300.0) -> Check:
    study = (study or FixedPointStudy()).run()
    z, _, cfg = study.results[2 * study.horizon]
    z_short, _, _ = study.results[study.horizon]
    start = time.perf_counter()
    fit = decay_fit(z, gamma=cfg.gamma, t_range=(1.0, 100.0))
    fit_short = decay_fit(z_short, gamma=cfg.gamma, t_range=(1.0, 100.0))
    total = time.perf_counter() - start + study.seconds[2 * study.horizon]
    floor = cfg.gamma / 4 - 0.05
    ok = fit.nu is not None and fit.nu >= floor
    return Check(7, "decay rate", ok and total < budget,
                 {"nu": fit.nu, "fit_residual": fit.residual, "nu_half_horizon": fit_short.nu},
                 f"nu >= {floor:g} over t in [1, 100]", total, budget,
                 "horizon truncation steepens the late-time curve; both horizons are reported")


def criterion_8(source_sign: str = "consistent", budget: float = 300.0) -> Check:
    start = time.perf_counter()
    bg, _ = small_a_background()
    grid = SpatialGrid.symmetric(256.0, 32768)
    u_plus = odd_perturbation(grid, 10.0)
    cfg = WaveOpConfig(1.0, 100.0, source_sign=source_sign)
    z, hist = picard_solve(u_plus, cfg, bg)
    nodes = cfg.nodes()
    up_hat = fft(u_plus.values)

    def assembled(k):
        t = nodes[k]
        z_plus = ifft(np.exp(-1j * t * grid.xi**2) * up_hat)
        return bg.vf(grid.x, t) + np.exp(0.5j * bg.alpha * np.log(t)) * (z.fields[k].values + z_plus)

    k_end = int(np.argmin(np.abs(nodes - 10.0)))
    refine = 4
    ecfg = EvolutionConfig(1.0, nodes[k_end], bg.A, rho=(nodes[1] / nodes[0]) ** (1.0 / refine),
                           save_every=refine)
    traj = evolve_v(ComplexField(grid, assembled(0), 1.0), ecfg)
    mask = interior_mask(grid)
    worst, scale = 0.0, 0.0
    for f in traj.fields:
        k = int(np.argmin(np.abs(nodes - f.time)))
        worst = max(worst, window_l2(f.values - assembled(k), grid, mask))
        scale = max(scale, window_l2(z.fields[k].values, grid, mask))
    total = time.perf_counter() - start
    return Check(8, "oracle equivalence", worst < 1e-3 and total < budget,
                 {"max_tracking_error": worst, "max_z_norm": scale,
                  "decade": [1.0, float(nodes[k_end])], "source_sign": source_sign},
                 "L2 gap < 1e-3 over one decade", total, budget)


def criterion_9(deltas: Sequence[float] = (-0.7, 0.1, 0.5, 1.3), budget: float = 30.0) -> Check:
    start = time.perf_counter()
    drift, constants = 0.0, []
    for d in deltas:
        c40 = kernel_bound_scan(d, 40).constant
        c80 = kernel_bound_scan(d, 80).constant
        constants.append(c40)
        drift = max(drift, abs(c80 - c40) / c40)
    total = time.perf_counter() - start
    return Check(9, "kernel bound", drift <= 0.1 and total < budget,
                 {"constants": constants, "max_refinement_drift": drift},
                 "fitted C stable within 10% from 40x40 to 80x80", total, budget)


def criterion_10(budget: float = 120.0) -> Check:
    start = time.perf_counter()
    params, L = OddParams(10.0, 0.956), 200.0
    curve = integrate_gamma(params, L, 1e-11)
    ts = np.geomspace(1.0, 1 / (0.95 * L) ** 2, 25)
    sp = spiral_limit(curve, ts)
    x = np.linspace(-1.0, 1.0, 401)
    traj = [self_similar_curve(curve, t=t, x=x) for t in ts]
    ref = spiral_initial_curve(x, curve.a, sp.A_plus, sp.A_minus)
    trace = trace_at_zero(traj, reference=ref)
    total = time.perf_counter() - start
    ok = sp.holds and 0.45 <= trace.exponent <= 0.55
    return Check(10, "spiral limit", ok and total < budget,
                 {"worst_bound_ratio": sp.worst_ratio, "samples": sp.samples,
                  "trace_exponent": trace.exponent},
                 "error <= 2 sqrt(t) sup c everywhere, exponent in [0.45, 0.55]", total, budget)


def criterion_11(budget: float = 120.0, c0: float = 0.5) -> Check:
    start = time.perf_counter()
    grid = SpatialGrid.symmetric(1024.0, 8192)
    u_plus = odd_perturbation(grid, 1.5)
    horizon = 100.0
    times = np.geomspace(1 / horizon, 10 / horizon, 16)
    reports = {}
    constant = integrate_profile_f(c0**2, c0, 0.0)
    bg_small, _ = small_a_background()
    for label, bg, nodes in (("rotating", Background(constant, extract_asymptotics(None, constant)), 640),
                             ("shot", bg_small, 320)):
        cfg = WaveOpConfig(1.0, horizon, quad_nodes_per_decade=nodes)
        z, _ = picard_solve(u_plus, cfg, bg)
        g = perturbation_u_side(z, u_plus, bg.alpha, horizon=horizon, times=times)
        reports[label] = phase_obstruction_demo(g)
    rot, shot = reports["rotating"], reports["shot"]
    tail = shot.tail_sup(3) / rot.scale
    total = time.perf_counter() - start
    ok = rot.min_ratio >= 0.5 and tail < 1e-2
    return Check(11, "phase obstruction", ok and total < budget,
                 {"alpha": rot.alpha, "min_observed_over_predicted": rot.min_ratio,
                  "shot_alpha": shot.alpha, "shot_small_t_differences_over_scale": tail},
                 "ratio >= 0.5 for alpha != 0; alpha = 0 differences < 1e-2 of the scale",
                 total, budget)


def criterion_12(bound: float = 1e-5, budget: float = 60.0) -> Check:
    start = time.perf_counter()
    worst = 0.0
    for params in FIGURE_PARAMS:
        gp = params.to_gamma()
        curve = integrate_gamma(gp, 60.0, 1e-11)
        sol = integrate_profile_from_params(gp, 60.0, 1e-11)
        for t in (1.0, 0.3):
            x = np.linspace(-10, 10, 2001) * np.sqrt(t)
            rec = reconstruct_self_similar(curve, sol, t, x)
            ref = self_similar_curve(curve, t=t, x=x)
            worst = max(worst, procrustes(ref.points, rec.points).max_distance)
    total = time.perf_counter() - start
    return Check(12, "round-trip geometry", worst < bound and total < budget,
                 {"max_procrustes_distance": worst}, f"residual < {bound:g}", total, budget)


CRITERIA: dict[int, Callable[..., Check]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12,
}

BUNDLES = {
    "quick": (1, 2, 3, 9, 12),
    "full": tuple(range(1, 13)),
    "empty": (),
}


def run_battery(criteria: Sequence[int]) -> list[Check]:
    """Run the given criteria in order; a crash becomes a failed check."""
    study = FixedPointStudy()
    out = []
    for c in criteria:
        start = time.perf_counter()
        try:
            check = CRITERIA[c](study) if c in (6, 7) else CRITERIA[c]()
        except Exception as exc:  # reported, never swallowed silently
            check = Check(c, CRITERIA[c].__name__, False, {"error": f"{type(exc).__name__}: {exc}"},
                          "no exception", time.perf_counter() - start, float("nan"))
        out.append(check)
    return out
